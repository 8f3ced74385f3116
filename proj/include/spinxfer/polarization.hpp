#pragma once

// Imperfect nuclear polarization: two metastable sublevels, two ground
// sublevels, optical pumping Γ_p and ground relaxation Γ_1.

#include <string>

#include "spinxfer/langevin.hpp"

namespace spinxfer {

struct ToyParams {
    double gamma = 2e7;
    double gamma_m = 5e6;
    double gamma_f = 5;
    double Gamma_p = 0;   // γΩ²/Δ²
    double Gamma_1 = 0;
    double C = 500;
    double r = 0;
    double kappa = 100 * 2e7;
    double Delta = -2000 * 2e7;
    double n = 1;         // metastable count; N = n γ_m/γ_f

    double N() const { return n * gamma_m / gamma_f; }
    double Omega() const;
    double g() const;        // from C = g² n/(κγ)
    double g_tilde() const;  // g Ω/Δ

    void validate() const;
    // non-empty when Γ_1 ≥ γ_f
    std::string warning() const;
};

struct Polarization {
    double P = 1;
    double P_star = 1;
    bool assumption_ok = true;  // Γ_1 ≪ γ_f
};

Polarization steady_polarization(const ToyParams& toy);

// Variables (S̃+, I+); y-quadratures are the squeezed ones.
LinearLangevinSystem build_toy_system(const ToyParams& toy);

struct ImperfectEfficiency {
    double C_tilde = 0;      // C P*
    double Gamma_tilde = 0;  // Γ_p(1 + C P*)
    double Gamma_f_tilde = 0;
    double cavity_factor = 0;     // C̃/(C̃+1)
    double pumping_factor = 0;    // γ_m/(Γ̃+γ_m)
    double relaxation_factor = 0; // Γ̃_f/(Γ̃_f+Γ_1)
    double eta_prime = 0;
};

ImperfectEfficiency efficiency_imperfect(const ToyParams& toy);

enum class ImperfectForm { Simplified, Full };

// Normalized to NP/4.
double variance_imperfect(const ToyParams& toy, ImperfectForm form = ImperfectForm::Simplified);
double toy_numeric_variance(const ToyParams& toy);

}  // namespace spinxfer
