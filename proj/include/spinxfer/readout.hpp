#pragma once

// Optical readout of the stored ground-state squeezing: the ground spin relaxes
// at Γ_F into the cavity output, which is measured by homodyne detection.

#include <functional>
#include <vector>

#include "spinxfer/langevin.hpp"
#include "spinxfer/transfer.hpp"

namespace spinxfer {

struct ReadoutParams {
    double Gamma_F = 0;
    double eta_I = 0;
    double r0 = 0;     // e^{-2 r0} = ΔI_y²(0)/(N/4)
    double beta = 0;   // physical field-spin coupling
    double kappa = 0;
    double T = 0;      // analyzer integration time

    void validate() const;
    // Coupling of the coherent-normalized spin to X_in: √(2Γ_F η_I).
    double normalized_beta() const;
    static ReadoutParams from_transfer(const TransferParams& p, double T, double r0);
};

// β = γ_m/(γ_m+Γ) · g_A n Ω √3/(2Δ) · √(2/κ)
double readout_beta(const TransferParams& p);

struct ReadoutCorrelation {
    bool has_delta = false;  // t == t'
    double delta_weight = 1.0;
    double smooth = 0;
};

ReadoutCorrelation readout_correlation(double t, double t_prime, const ReadoutParams& params);

using Envelope = std::function<double(double)>;
Envelope matched_envelope(double Gamma_F);

// Shot-noise part only: (1/(T E(t)²)) ∫_t^{t+T} E².
double shot_noise_power(double t, const ReadoutParams& params, const Envelope& envelope);
double homodyne_power(double t, const ReadoutParams& params, const Envelope& envelope);

struct DecayFit {
    double rate = 0;       // y ≈ amplitude · e^{-rate t}
    double amplitude = 0;
};
DecayFit fit_exponential_decay(const std::vector<double>& t, const std::vector<double>& y);

// Single ground quadrature "I09.y" with reference N/4, driven by X_in (vacuum)
// and by f̃_y assembled from the f43, f47, f09 forces.
LinearLangevinSystem build_readout_system(const TransferParams& p);
// Same dynamics in coherent-normalized units, f̃ diffusion 2Γ_F(1−η_I).
LinearLangevinSystem build_readout_system(const ReadoutParams& params);

// X_out = h·x + d·X_in for the systems above.
struct OutputMap {
    Vector h;
    Vector d;
};
OutputMap readout_output_map(const LinearLangevinSystem& sys, double normalized_beta);

}  // namespace spinxfer
