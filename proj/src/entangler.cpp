#include "spinxfer/entangler.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "spinxfer/errors.hpp"

namespace spinxfer {

namespace {

bool same_cell(const TransferParams& a, const TransferParams& b) {
    auto key = [](const TransferParams& p) {
        return std::tuple{p.gamma, p.gamma_m, p.gamma_0, p.kappa, p.Delta, p.cavity_detuning(), p.Omega, p.g_A,
                          p.n, p.N, p.delta_34, p.delta_I};
    };
    return key(a) == key(b);
}

}  // namespace

EprInput EprInput::make(double r) {
    if (!std::isfinite(r)) throw ValidationError("EPR parameter r must be finite");
    EprInput in;
    in.r = r;
    const double c = std::cosh(2 * r), s = std::sinh(2 * r);
    in.covariance = Eigen::Matrix4d::Zero();
    in.covariance.diagonal().setConstant(c);
    in.covariance(0, 2) = in.covariance(2, 0) = s;
    in.covariance(1, 3) = in.covariance(3, 1) = -s;
    return in;
}

Eigen::Vector4d EprInput::symplectic_eigenvalues() const {
    Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
    omega(0, 1) = omega(2, 3) = 1;
    omega(1, 0) = omega(3, 2) = -1;
    Eigen::EigenSolver<Eigen::Matrix4d> es(omega * covariance, false);
    Eigen::Vector4d nu = es.eigenvalues().cwiseAbs();
    std::sort(nu.data(), nu.data() + 4);
    return nu;
}

void EprInput::validate(double tol) const {
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > tol * covariance.cwiseAbs().maxCoeff())
        throw ValidationError("EPR covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(covariance, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) throw ValidationError("EPR covariance is not positive semidefinite");
    if (symplectic_eigenvalues().minCoeff() < 1 - tol)
        throw ValidationError("EPR covariance violates the uncertainty relation");
}

double field_epr_variance(const EprInput& in) {
    const auto& c = in.covariance;
    const double dx = c(0, 0) + c(2, 2) - 2 * c(0, 2);
    const double dy = c(1, 1) + c(3, 3) + 2 * c(1, 3);
    return 0.5 * (dx + dy);
}

double field_epr_variance(double r) { return field_epr_variance(EprInput::make(r)); }

double atomic_epr_variance(double eta_I, double E_f) {
    if (!(eta_I >= 0 && eta_I <= 1)) throw ValidationError("atomic_epr_variance: eta_I must be in [0, 1]");
    if (!(E_f >= 0)) throw ValidationError("atomic_epr_variance: E_f must be >= 0");
    return eta_I * E_f + 2 * (1 - eta_I);
}

LinearLangevinSystem build_two_cell_system(const TransferParams& cell, const EprInput& input) {
    input.validate();
    const ComplexLangevinModel one = reduced_model(cell);
    const auto k = static_cast<Eigen::Index>(one.size());
    std::vector<std::string> names;
    for (int c = 1; c <= 2; ++c)
        for (const auto& n : one.names) names.push_back(n + "_" + std::to_string(c));
    ComplexLangevinModel joint(names, 2);
    for (Eigen::Index c = 0; c < 2; ++c) {
        const Eigen::Index o = c * k;
        joint.drift.block(o, o, k, k) = one.drift;
        joint.normal.block(o, o, k, k) = one.normal;
        joint.anti.block(o, o, k, k) = one.anti;
        joint.pair.block(o, o, k, k) = one.pair;
        joint.input.block(o, c, k, 1) = one.input;
        joint.scale.segment(o, k) = one.scale;
        joint.reference.segment(o, k) = one.reference;
    }
    return joint.to_real(input.covariance);
}

TwoCellResult simulate_two_cells(const TransferParams& cell1, const TransferParams& cell2, double r) {
    if (!same_cell(cell1, cell2))
        throw UnsupportedConfiguration("simulate_two_cells: only identical cells with equal control fields are supported");
    const LinearLangevinSystem sys = build_two_cell_system(cell1, EprInput::make(r));
    TwoCellResult out;
    out.covariance = steady_covariance(sys);
    const auto& C = out.covariance;
    const double N = cell1.N;
    auto var_pair = [&](const char* a, const char* b, double sign) { return C(a, a) + C(b, b) + 2 * sign * C(a, b); };
    const double vx = var_pair("I09_1.x", "I09_2.x", +1);
    const double vy = var_pair("I09_1.y", "I09_2.y", -1);
    out.E_I = 2 / N * (vx + vy);
    out.sum_diff_cross = 2 / N *
                         (C("I09_1.x", "I09_1.y") - C("I09_1.x", "I09_2.y") + C("I09_2.x", "I09_1.y") -
                          C("I09_2.x", "I09_2.y"));
    const double norm = N / 4;
    out.intra = (C("I09_1.x", "I09_1.x") / norm - 1) / (4 * N);
    out.inter_y = C("I09_1.y", "I09_2.y") / norm / (4 * N);
    out.inter_x = C("I09_1.x", "I09_2.x") / norm / (4 * N);
    return out;
}

TwoCellResult simulate_two_cells(const TransferParams& cell, double r) { return simulate_two_cells(cell, cell, r); }

CrossCorrelations cross_correlations(double r, double N, double eta_I) {
    if (!(N > 0)) throw ValidationError("cross_correlations: N must be > 0");
    CrossCorrelations c;
    c.intra = (std::cosh(2 * r) - 1) / (4 * N);
    c.inter = std::sinh(2 * r) / (4 * N);
    c.in_validity_regime = eta_I >= 0.99;
    return c;
}

}  // namespace spinxfer
