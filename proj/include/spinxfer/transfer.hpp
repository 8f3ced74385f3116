#pragma once

// Squeezing transfer from a cavity field to metastable and ground-state spins.
// Full model: 11 coherences + cavity; reduced model: S43, S47, I09, A.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spinxfer/langevin.hpp"

namespace spinxfer {

struct TransferParams {
    double gamma = 2e7;             // optical coherence decay (s^-1)
    double gamma_m = 5e6;           // N·gamma_exc
    double gamma_0 = 0;             // extra metastable relaxation
    double kappa = 100 * 2e7;
    double Delta = -2000 * 2e7;     // Δ = Δ47
    std::optional<double> Delta_C;  // default Cκγ/Δ
    double Omega = 0;               // control Rabi frequency (real)
    double g_A = 0;
    std::optional<double> g_B;      // default g_A
    double n = 3.2e10;
    double N = 3.2e16;
    double r = 0;                   // input squeezing, ΔX_in² = e^{-2r}
    double delta_34 = 0;            // δ̃ = δ34 + Ω²/Δ is derived, see delta_tilde()
    double delta_I = 0;             // δ90
    std::optional<double> Delta_18, Delta_27, Delta_38;  // default Δ
    double delta_12 = 0, delta_23 = 0, delta_56 = 0, delta_87 = 0, delta_las = 0;

    double gamma_exc() const { return gamma_m / N; }
    double gamma_f() const { return n * gamma_exc(); }
    double cooperativity() const;
    double cavity_detuning() const;
    double coupling_B() const { return g_B.value_or(g_A); }
    double delta_tilde() const;

    void validate() const;
    // warning text when n/N > 1e-2, empty otherwise
    std::string warning() const;

    // Baseline operating point: e^{-2r}=0.5, C=500, κ=100γ, Δ=−2000γ, γ=2e7, γ_m=5e6, n/N=1e-6.
    static TransferParams baseline(double pumping_over_gamma_m = 0.1);
    void set_cooperativity(double C);
    // Ω such that pumping_parameter() == Gamma (sign of Ω kept positive).
    void set_pumping(double Gamma);
    // δ34 chosen so that delta_tilde() == value.
    void set_delta_tilde(double value);
};

double cooperativity(double g_A, double n, double kappa, double gamma);
double pumping_parameter(const TransferParams& p);
double omega_for_pumping(const TransferParams& p, double Gamma);

LinearLangevinSystem build_full_system(const TransferParams& p);
LinearLangevinSystem build_reduced_system(const TransferParams& p);
// Same, with input coupling but an empty input spectrum slot; used to share
// inputs across cells.
ComplexLangevinModel reduced_model(const TransferParams& p);
ComplexLangevinModel full_model(const TransferParams& p);

struct SpinVariances {
    double I_y = 0;  // normalized to N/4
    double S_y = 0;  // normalized to n/4
    double I_x = 0;
    double S_x = 0;
    CovarianceMatrix covariance;
};

SpinVariances steady_spin_variances(const LinearLangevinSystem& sys, const TransferParams& p);

// Eqs. for the resonant adiabatic regime: returns (normΔI_y², normΔS_y²).
std::pair<double, double> analytic_variances(double Gamma, double gamma_m, double C, double r);

struct AdiabaticRates {
    double Gamma_F = 0;
    double b = 0;
    double m = 0;
};

AdiabaticRates adiabatic_rates(const TransferParams& p);
double best_variance_mismatch(const TransferParams& p);
double transfer_efficiency(double norm_variance, double r);
double resonant_efficiency(double Gamma, double gamma_m, double C);

enum class FieldMapping { Approximate, Exact };

struct FieldCalibration {
    static constexpr double mu_I_over_h = 3.24e3;  // Hz/G
    static constexpr double mu_S_over_h = 1.87e6;  // Hz/G
    double B = 0;              // G
    double DeltaB_over_B = 0;
    double omega_I = 0;        // Hz, (μ_I/h)·B
    double omega_S = 0;        // Hz, (μ_S/h)·B
};

FieldCalibration resonance_field(const TransferParams& p, FieldMapping mapping = FieldMapping::Approximate);

enum class FieldDistribution { Uniform, GaussianTruncated };

double inhomogeneity_average(const TransferParams& p, double DeltaB_over_B, int samples,
                             FieldDistribution dist = FieldDistribution::Uniform);

// (Γ/Γ_F)(μ_I/μ_S)(|Δ|/(3γC))(ΔB/B); degradation sets in once this reaches ~1.
double homogeneity_figure_of_merit(const TransferParams& p, double DeltaB_over_B);

}  // namespace spinxfer
