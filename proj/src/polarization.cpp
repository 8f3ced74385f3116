#include "spinxfer/polarization.hpp"

#include <cmath>

#include "spinxfer/errors.hpp"

namespace spinxfer {

double ToyParams::Omega() const { return std::abs(Delta) * std::sqrt(Gamma_p / gamma); }
double ToyParams::g() const { return std::sqrt(C * kappa * gamma / n); }
double ToyParams::g_tilde() const { return g() * Omega() / Delta; }

void ToyParams::validate() const {
    for (double v : {gamma, gamma_m, gamma_f, Gamma_p, Gamma_1, C, r, kappa, Delta, n})
        if (!std::isfinite(v)) throw ValidationError("toy parameters must be finite");
    if (!(gamma > 0) || !(kappa > 0)) throw ValidationError("toy: gamma and kappa must be > 0");
    if (!(gamma_m > 0) || !(gamma_f > 0)) throw ValidationError("toy: exchange rates must be > 0");
    if (!(Gamma_p > 0)) throw ValidationError("toy: Gamma_p must be > 0");
    if (!(Gamma_1 >= 0)) throw ValidationError("toy: Gamma_1 must be >= 0");
    if (!(C >= 0)) throw ValidationError("toy: C must be >= 0");
    if (!(n > 0)) throw ValidationError("toy: n must be > 0");
    if (Delta == 0) throw ValidationError("toy: Delta must be non-zero");
}

std::string ToyParams::warning() const {
    if (Gamma_1 >= gamma_f) return "Gamma_1 >= gamma_f: the toy model assumes Gamma_1 << gamma_f";
    return {};
}

Polarization steady_polarization(const ToyParams& toy) {
    toy.validate();
    Polarization p;
    p.P = 1 / (1 + toy.Gamma_1 * (toy.Gamma_p + toy.gamma_m) / (toy.Gamma_p * toy.gamma_f));
    p.P_star = p.P * (1 + toy.Gamma_1 / toy.gamma_f);
    p.assumption_ok = toy.Gamma_1 < toy.gamma_f;
    return p;
}

LinearLangevinSystem build_toy_system(const ToyParams& toy) {
    const Polarization pol = steady_polarization(toy);
    const double P = pol.P, Ps = pol.P_star;
    const double n = toy.n, N = toy.N();
    const double Gt = toy.Gamma_p * (1 + toy.C * Ps);

    ComplexLangevinModel m({"S+", "I+"}, 1);
    m.drift(0, 0) = -(Gt + toy.gamma_m);
    m.drift(0, 1) = toy.gamma_f;
    m.drift(1, 0) = toy.gamma_m;
    m.drift(1, 1) = -(toy.gamma_f + toy.Gamma_1);
    m.input(0, 0) = cplx(0, 1) * toy.g() * toy.Omega() * n / (toy.kappa * toy.Delta) * Ps * std::sqrt(2 * toy.kappa);

    // generalized Einstein relations at the semiclassical steady state
    const double ds = toy.Gamma_p + toy.gamma_m, di = toy.gamma_f + toy.Gamma_1;
    m.normal(0, 0) = ds * n * (1 + Ps);
    m.anti(0, 0) = ds * n * (1 - Ps);
    m.normal(1, 1) = di * N * (1 + P);
    m.anti(1, 1) = di * N * (1 - P);
    m.normal(0, 1) = m.normal(1, 0) = -(toy.gamma_f * N * (1 + P) + toy.gamma_m * n * (1 + Ps)) / 2;
    m.anti(0, 1) = m.anti(1, 0) = -(toy.gamma_f * N * (1 - P) + toy.gamma_m * n * (1 - Ps)) / 2;
    m.reference << n / 4, N / 4;
    return m.to_real(squeezed_vacuum(toy.r));
}

ImperfectEfficiency efficiency_imperfect(const ToyParams& toy) {
    const Polarization pol = steady_polarization(toy);
    ImperfectEfficiency e;
    e.C_tilde = toy.C * pol.P_star;
    e.Gamma_tilde = toy.Gamma_p * (1 + e.C_tilde);
    e.Gamma_f_tilde = toy.gamma_f * e.Gamma_tilde / (e.Gamma_tilde + toy.gamma_m);
    e.cavity_factor = e.C_tilde / (e.C_tilde + 1);
    e.pumping_factor = toy.gamma_m / (e.Gamma_tilde + toy.gamma_m);
    e.relaxation_factor = e.Gamma_f_tilde / (e.Gamma_f_tilde + toy.Gamma_1);
    e.eta_prime = e.cavity_factor * e.pumping_factor * e.relaxation_factor;
    return e;
}

double variance_imperfect(const ToyParams& toy, ImperfectForm form) {
    const Polarization pol = steady_polarization(toy);
    const ImperfectEfficiency e = efficiency_imperfect(toy);
    const double sq = std::exp(-2 * toy.r);
    if (form == ImperfectForm::Simplified) return e.eta_prime * sq + (1 - e.eta_prime) / pol.P;
    double v = 1 / pol.P + (pol.P_star * sq - 1) * e.eta_prime / pol.P;
    if (e.C_tilde > 0) v += e.eta_prime / (2 * e.C_tilde) * (pol.P_star - 1) / pol.P;
    return v;
}

double toy_numeric_variance(const ToyParams& toy) {
    const Polarization pol = steady_polarization(toy);
    const CovarianceMatrix c = steady_covariance(build_toy_system(toy));
    return quadrature_variance(c, "I+.y", toy.N() * pol.P / 4);
}

}  // namespace spinxfer
