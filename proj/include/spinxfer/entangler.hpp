#pragma once

// Two identical cells driven by EPR-correlated squeezed vacua.

#include "spinxfer/langevin.hpp"
#include "spinxfer/transfer.hpp"

namespace spinxfer {

struct EprInput {
    double r = 0;
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();  // (X1, Y1, X2, Y2)

    static EprInput make(double r);
    // symplectic eigenvalues of the covariance, ascending
    Eigen::Vector4d symplectic_eigenvalues() const;
    void validate(double tol = 1e-9) const;
};

// ½[Δ²(X1 − X2) + Δ²(Y1 + Y2)], evaluated from the covariance.
double field_epr_variance(double r);
double field_epr_variance(const EprInput& in);

double atomic_epr_variance(double eta_I, double E_f);

struct TwoCellResult {
    double E_I = 0;               // (2/N)[Δ²(Ix1+Ix2) + Δ²(Iy1−Iy2)]
    double sum_diff_cross = 0;    // <(Ix1+Ix2)(Iy1−Iy2)>·2/N
    double intra = 0;             // (normΔI_x1² − 1)/(4N)
    double inter_y = 0;           // norm<Iy1 Iy2>/(4N)
    double inter_x = 0;           // norm<Ix1 Ix2>/(4N)
    CovarianceMatrix covariance;
};

LinearLangevinSystem build_two_cell_system(const TransferParams& cell, const EprInput& input);
TwoCellResult simulate_two_cells(const TransferParams& cell1, const TransferParams& cell2, double r);
TwoCellResult simulate_two_cells(const TransferParams& cell, double r);

struct CrossCorrelations {
    double intra = 0;  // (cosh 2r − 1)/(4N)
    double inter = 0;  // sinh 2r/(4N)
    bool in_validity_regime = true;  // η_I ≥ 0.99
};

CrossCorrelations cross_correlations(double r, double N, double eta_I);

}  // namespace spinxfer
