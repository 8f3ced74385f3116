#include "spinxfer/transfer.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "spinxfer/errors.hpp"

namespace spinxfer {

namespace {

const double kSqrt3 = std::sqrt(3.0);
constexpr double kTwoPi = 2 * std::numbers::pi;

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw ValidationError(std::string(name) + " must be finite");
}

}  // namespace

double TransferParams::cooperativity() const { return spinxfer::cooperativity(g_A, n, kappa, gamma); }

double TransferParams::cavity_detuning() const {
    return Delta_C.value_or(cooperativity() * kappa * gamma / Delta);
}

double TransferParams::delta_tilde() const { return delta_34 + Omega * Omega / Delta; }

void TransferParams::validate() const {
    for (auto [v, name] : {std::pair{gamma, "gamma"}, {gamma_m, "gamma_m"}, {gamma_0, "gamma_0"}, {kappa, "kappa"},
                           {Delta, "Delta"}, {Omega, "Omega"}, {g_A, "g_A"}, {n, "n"}, {N, "N"}, {r, "r"},
                           {delta_34, "delta_34"}, {delta_I, "delta_I"}})
        require_finite(v, name);
    if (!(gamma > 0)) throw ValidationError("gamma must be > 0");
    if (!(kappa > 0)) throw ValidationError("kappa must be > 0");
    if (!(gamma_m > 0)) throw ValidationError("gamma_m must be > 0");
    if (!(gamma_0 >= 0)) throw ValidationError("gamma_0 must be >= 0");
    if (!(n > 0) || !(N > 0)) throw ValidationError("n and N must be > 0");
    if (Delta == 0) throw ValidationError("Delta must be non-zero");
    if (g_A < 0 || coupling_B() < 0) throw ValidationError("couplings must be >= 0");
}

std::string TransferParams::warning() const {
    if (n / N > 1e-2) {
        std::ostringstream os;
        os << "n/N = " << n / N << " is not small; the polarized linearization assumes n << N";
        return os.str();
    }
    return {};
}

TransferParams TransferParams::baseline(double pumping_over_gamma_m) {
    TransferParams p;
    p.r = std::log(2.0) / 2;
    p.set_cooperativity(500);
    p.set_pumping(pumping_over_gamma_m * p.gamma_m);
    p.set_delta_tilde(0);
    return p;
}

void TransferParams::set_cooperativity(double C) {
    if (!(C >= 0)) throw ValidationError("cooperativity must be >= 0");
    g_A = std::sqrt(C * kappa * gamma / n);
}

void TransferParams::set_pumping(double Gamma) {
    const double keep = delta_tilde();
    Omega = omega_for_pumping(*this, Gamma);
    set_delta_tilde(keep);
}

void TransferParams::set_delta_tilde(double value) { delta_34 = value - Omega * Omega / Delta; }

double cooperativity(double g_A, double n, double kappa, double gamma) {
    if (!(kappa > 0) || !(gamma > 0) || !(n >= 0)) throw ValidationError("cooperativity needs kappa, gamma > 0");
    return g_A * g_A * n / (kappa * gamma);
}

double pumping_parameter(const TransferParams& p) {
    if (p.Delta == 0) throw ValidationError("pumping parameter needs Delta != 0");
    return p.gamma * 3 * p.Omega * p.Omega * (1 + p.cooperativity()) / (p.Delta * p.Delta);
}

double omega_for_pumping(const TransferParams& p, double Gamma) {
    if (!(Gamma >= 0)) throw ValidationError("pumping parameter must be >= 0");
    return std::abs(p.Delta) * std::sqrt(Gamma / (3 * p.gamma * (1 + p.cooperativity())));
}

ComplexLangevinModel full_model(const TransferParams& p) {
    p.validate();
    ComplexLangevinModel m({"S21", "S81", "S32", "S72", "S43", "S65", "S47", "S38", "S78", "I09", "A"}, 1);
    enum { S21, S81, S32, S72, S43, S65, S47, S38, S78, I09, A };
    const cplx i(0, 1);
    const double gm = p.gamma_m, gf = p.gamma_f(), g0 = p.gamma_0, Om = p.Omega;
    const double D18 = p.Delta_18.value_or(p.Delta), D27 = p.Delta_27.value_or(p.Delta),
                 D38 = p.Delta_38.value_or(p.Delta);
    auto& M = m.drift;

    M(S21, S21) = -(gm - i * p.delta_12) - g0;
    M(S21, S81) = i * Om;
    M(S81, S81) = -(p.gamma - i * (D18 - 2 * p.delta_las)) - g0;
    M(S81, S21) = i * Om;
    M(S32, S32) = -7.0 / 9 * gm + i * p.delta_23 - g0;
    M(S32, S21) = 2.0 * kSqrt3 / 9 * gm;
    M(S32, S65) = 2.0 / 9 * gm;
    M(S32, S38) = -i * Om;
    M(S32, S72) = i * Om;
    M(S72, S72) = -(p.gamma - i * (D27 - 2 * p.delta_las)) - g0;
    M(S72, S78) = -i * Om;
    M(S72, S32) = i * Om;
    M(S43, S43) = -gm / 3 + i * p.delta_34 - g0;
    M(S43, S32) = 2.0 * kSqrt3 / 9 * gm;
    M(S43, S65) = 2.0 * kSqrt3 / 9 * gm;
    M(S43, I09) = kSqrt3 / 3 * gf;
    M(S43, S47) = -i * Om;
    M(S65, S65) = -7.0 / 9 * gm + i * p.delta_56 - g0;
    M(S65, S21) = 2.0 * kSqrt3 / 9 * gm;
    M(S65, S32) = 2.0 / 9 * gm;
    M(S47, S47) = -(p.gamma + i * p.Delta) - g0;
    M(S47, A) = -i * p.g_A * p.n;
    M(S47, S43) = -i * Om;
    M(S38, S38) = -(p.gamma + i * D38) - g0;
    M(S38, S32) = -i * Om;
    M(S38, S78) = i * Om;
    M(S78, S78) = -(2 * p.gamma - i * p.delta_87);
    M(S78, S72) = -i * Om;
    M(S78, S38) = i * Om;
    M(I09, I09) = -gf + i * p.delta_I;
    M(I09, S32) = 2.0 / 3 * gm;
    M(I09, S65) = -gm / 3;
    M(I09, S43) = kSqrt3 / 3 * gm;
    M(I09, S21) = kSqrt3 / 3 * gm;
    M(A, A) = -(p.kappa + i * p.cavity_detuning());
    M(A, S38) = -i * p.coupling_B();
    M(A, S47) = -i * p.g_A;
    m.input(A, 0) = std::sqrt(2 * p.kappa);

    m.normal(S43, S43) = 2.0 / 3 * gm * p.n + 2 * g0 * p.n;
    m.normal(S43, I09) = m.normal(I09, S43) = -2.0 * kSqrt3 / 3 * gm * p.n;
    m.normal(S47, S47) = 2 * p.gamma * p.n + 2 * g0 * p.n;
    m.normal(I09, I09) = 2 * gm * p.n;

    m.reference.setConstant(p.n / 4);
    m.reference(I09) = p.N / 4;
    m.reference(A) = 1.0;
    m.scale(A) = 2.0;
    return m;
}

ComplexLangevinModel reduced_model(const TransferParams& p) {
    p.validate();
    ComplexLangevinModel m({"S43", "S47", "I09", "A"}, 1);
    enum { S43, S47, I09, A };
    const cplx i(0, 1);
    const double gm = p.gamma_m, gf = p.gamma_f(), g0 = p.gamma_0, Om = p.Omega;
    auto& M = m.drift;
    M(S43, S43) = -gm / 3 + i * p.delta_34 - g0;
    M(S43, S47) = -i * Om;
    M(S43, I09) = kSqrt3 / 3 * gf;
    M(S47, S47) = -(p.gamma + i * p.Delta) - g0;
    M(S47, A) = -i * p.g_A * p.n;
    M(S47, S43) = -i * Om;
    M(I09, S43) = kSqrt3 / 3 * gm;
    M(I09, I09) = -gf + i * p.delta_I;
    M(A, A) = -(p.kappa + i * p.cavity_detuning());
    M(A, S47) = -i * p.g_A;
    m.input(A, 0) = std::sqrt(2 * p.kappa);

    m.normal(S43, S43) = 2.0 / 3 * gm * p.n + 2 * g0 * p.n;
    m.normal(S43, I09) = m.normal(I09, S43) = -2.0 * kSqrt3 / 3 * gm * p.n;
    m.normal(S47, S47) = 2 * p.gamma * p.n + 2 * g0 * p.n;
    m.normal(I09, I09) = 2 * gm * p.n;

    m.reference << p.n / 4, p.n / 4, p.N / 4, 1.0;
    m.scale(A) = 2.0;
    return m;
}

LinearLangevinSystem build_full_system(const TransferParams& p) { return full_model(p).to_real(squeezed_vacuum(p.r)); }

LinearLangevinSystem build_reduced_system(const TransferParams& p) {
    return reduced_model(p).to_real(squeezed_vacuum(p.r));
}

SpinVariances steady_spin_variances(const LinearLangevinSystem& sys, const TransferParams& p) {
    SpinVariances v;
    v.covariance = steady_covariance(sys);
    v.I_y = quadrature_variance(v.covariance, "I09.y", p.N / 4);
    v.I_x = quadrature_variance(v.covariance, "I09.x", p.N / 4);
    v.S_y = quadrature_variance(v.covariance, "S43.y", p.n / 4);
    v.S_x = quadrature_variance(v.covariance, "S43.x", p.n / 4);
    return v;
}

std::pair<double, double> analytic_variances(double Gamma, double gamma_m, double C, double r) {
    if (!(Gamma >= 0) || !(gamma_m >= 0) || Gamma + gamma_m <= 0)
        throw ValidationError("analytic_variances: Gamma, gamma_m >= 0 and not both zero");
    if (!(C >= 0)) throw ValidationError("analytic_variances: C must be >= 0");
    const double s = C / (C + 1) * (1 - std::exp(-2 * r));
    return {1 - gamma_m / (Gamma + gamma_m) * s, 1 - Gamma / (Gamma + gamma_m) * s};
}

AdiabaticRates adiabatic_rates(const TransferParams& p) {
    const double Gamma = pumping_parameter(p);
    const double gm = p.gamma_m, gf = p.gamma_f();
    if (!(gm + Gamma > 0)) throw ValidationError("adiabatic_rates: gamma_m + Gamma must be > 0");
    const double d3 = 3 * p.delta_tilde();
    const double den = (gm + Gamma) * (gm + Gamma) + d3 * d3;
    AdiabaticRates a;
    a.Gamma_F = gf * (Gamma * (gm + Gamma) + d3 * d3) / den;
    a.b = -(gf * d3 * gm / den + p.delta_I);
    if (a.b == 0)
        a.m = 0;
    else if (a.Gamma_F == 0)
        a.m = 1;
    else
        a.m = 1 - 1 / std::sqrt(1 + (a.b / a.Gamma_F) * (a.b / a.Gamma_F));
    return a;
}

double best_variance_mismatch(const TransferParams& p) {
    const double Gamma = pumping_parameter(p);
    const double d3 = 3 * p.delta_tilde();
    if (Gamma <= 0 && d3 != 0) return 1.0;
    const double C = p.cooperativity();
    const AdiabaticRates a = adiabatic_rates(p);
    const double pump = Gamma > 0 ? Gamma + p.gamma_m + d3 * d3 / Gamma : p.gamma_m;
    const double bracket = 1 - (std::exp(-2 * p.r) + a.m * std::sinh(2 * p.r));
    return 1 - p.gamma_m / pump * C / (C + 1) * bracket;
}

double transfer_efficiency(double norm_variance, double r) {
    if (r == 0) throw ValidationError("transfer_efficiency: r must be non-zero");
    return (1 - norm_variance) / (1 - std::exp(-2 * r));
}

double resonant_efficiency(double Gamma, double gamma_m, double C) {
    return gamma_m / (gamma_m + Gamma) * C / (C + 1);
}

FieldCalibration resonance_field(const TransferParams& p, FieldMapping mapping) {
    p.validate();
    const double Gamma = pumping_parameter(p);
    if (Gamma > 0 && p.Delta > 0)
        throw ValidationError("resonance_field: Delta > 0 gives a light shift of the wrong sign to compensate "
                              "the metastable/ground Larmor mismatch");
    const double shift = std::abs(p.Omega * p.Omega / p.Delta);  // rad/s
    const double per_gauss = mapping == FieldMapping::Approximate
                                 ? FieldCalibration::mu_S_over_h
                                 : FieldCalibration::mu_S_over_h - FieldCalibration::mu_I_over_h;
    FieldCalibration f;
    f.B = shift / (kTwoPi * per_gauss);
    f.omega_I = FieldCalibration::mu_I_over_h * f.B;
    f.omega_S = FieldCalibration::mu_S_over_h * f.B;
    return f;
}

double inhomogeneity_average(const TransferParams& p, double DeltaB_over_B, int samples, FieldDistribution dist) {
    if (samples < 3) throw ValidationError("inhomogeneity_average: samples must be >= 3");
    if (!(DeltaB_over_B >= 0)) throw ValidationError("inhomogeneity_average: DeltaB/B must be >= 0");
    const double B = resonance_field(p).B;
    const double dBmax = DeltaB_over_B * B;
    double sum = 0, wsum = 0;
    for (int k = 0; k < samples; ++k) {
        const double x = -1.0 + 2.0 * k / (samples - 1);
        const double w = dist == FieldDistribution::Uniform ? 1.0 : std::exp(-x * x / (2 * 0.25));
        TransferParams q = p;
        q.delta_34 += kTwoPi * FieldCalibration::mu_S_over_h * x * dBmax;
        q.delta_I += kTwoPi * FieldCalibration::mu_I_over_h * x * dBmax;
        sum += w * best_variance_mismatch(q);
        wsum += w;
    }
    return sum / wsum;
}

double homogeneity_figure_of_merit(const TransferParams& p, double DeltaB_over_B) {
    const double Gamma = pumping_parameter(p);
    const double GF = adiabatic_rates(p).Gamma_F;
    if (GF <= 0) return 0;
    return Gamma / GF * (FieldCalibration::mu_I_over_h / FieldCalibration::mu_S_over_h) *
           std::abs(p.Delta) / (3 * p.gamma * p.cooperativity()) * DeltaB_over_B;
}

}  // namespace spinxfer
