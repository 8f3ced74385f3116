#include "spinxfer/readout.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spinxfer/errors.hpp"

namespace spinxfer {

namespace {

template <class F>
double integrate(F&& f, double a, double b) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-9);
}

}  // namespace

void ReadoutParams::validate() const {
    if (!(Gamma_F > 0)) throw ValidationError("readout: Gamma_F must be > 0");
    if (!(eta_I >= 0 && eta_I <= 1)) throw ValidationError("readout: eta_I must be in [0, 1]");
    if (!std::isfinite(r0)) throw ValidationError("readout: r0 must be finite");
}

double ReadoutParams::normalized_beta() const { return std::sqrt(2 * Gamma_F * eta_I); }

ReadoutParams ReadoutParams::from_transfer(const TransferParams& p, double T, double r0) {
    ReadoutParams out;
    out.Gamma_F = adiabatic_rates(p).Gamma_F;
    out.eta_I = resonant_efficiency(pumping_parameter(p), p.gamma_m, p.cooperativity());
    out.r0 = r0;
    out.beta = readout_beta(p);
    out.kappa = p.kappa;
    out.T = T;
    return out;
}

double readout_beta(const TransferParams& p) {
    const double Gamma = pumping_parameter(p);
    return p.gamma_m / (p.gamma_m + Gamma) * p.g_A * p.n * p.Omega * std::sqrt(3.0) / (2 * p.Delta) *
           std::sqrt(2 / p.kappa);
}

ReadoutCorrelation readout_correlation(double t, double t_prime, const ReadoutParams& params) {
    if (!(t >= 0) || !(t_prime >= 0)) throw ValidationError("readout_correlation: times must be >= 0");
    params.validate();
    ReadoutCorrelation c;
    c.has_delta = t == t_prime;
    c.smooth = -2 * params.Gamma_F * params.eta_I * (1 - std::exp(-2 * params.r0)) *
               std::exp(-params.Gamma_F * (t + t_prime));
    return c;
}

Envelope matched_envelope(double Gamma_F) {
    return [Gamma_F](double t) { return std::exp(-Gamma_F * t); };
}

double shot_noise_power(double t, const ReadoutParams& params, const Envelope& envelope) {
    if (!(params.T > 0)) throw ValidationError("homodyne_power: T must be > 0");
    const double e0 = envelope(t);
    if (!(e0 != 0)) throw ValidationError("homodyne_power: envelope vanishes at t");
    // rescale by E(t) inside the integral to avoid underflow at late t
    auto e2 = [&](double tau) {
        const double v = envelope(tau) / e0;
        return v * v;
    };
    return integrate(e2, t, t + params.T) / params.T;
}

double homodyne_power(double t, const ReadoutParams& params, const Envelope& envelope) {
    params.validate();
    const double T = params.T;
    const double shot = shot_noise_power(t, params, envelope);
    const double e0 = envelope(t);

    // ∫_{-π/T}^{π/T} e^{-iωu} dω/2π
    auto kernel = [T](double u) {
        const double x = std::numbers::pi * u / T;
        if (std::abs(x) < 1e-6) return (1 - x * x / 6) / T;
        return std::sin(x) / (std::numbers::pi * u);
    };
    auto inner = [&](double tau) {
        const double et = envelope(tau) / e0;
        auto g = [&](double tp) {
            return kernel(tau - tp) * (envelope(tp) / e0) * readout_correlation(tau, tp, params).smooth;
        };
        return et * integrate(g, t, t + T);
    };
    const double smooth = integrate(inner, t, t + T);
    return shot + smooth;
}

DecayFit fit_exponential_decay(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size() || t.size() < 2) throw ValidationError("fit_exponential_decay: need >= 2 matching points");
    Matrix A(t.size(), 2);
    Vector b(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!(y[k] > 0)) throw NumericError("fit_exponential_decay: values must be positive");
        A(k, 0) = 1;
        A(k, 1) = t[k];
        b(k) = std::log(y[k]);
    }
    const Vector c = A.colPivHouseholderQr().solve(b);
    return {-c(1), std::exp(c(0))};
}

LinearLangevinSystem build_readout_system(const TransferParams& p) {
    p.validate();
    const double Gamma = pumping_parameter(p);
    const double GF = adiabatic_rates(p).Gamma_F;
    const double c = p.gamma_m * std::sqrt(3.0) / (p.gamma_m + Gamma);
    const double ratio = p.Omega / p.Delta;
    // y-quadrature rates of the individual forces
    const double d43 = p.gamma_m * p.n / 6 + p.gamma_0 * p.n / 2;
    const double d47 = p.gamma * p.n / 2 + p.gamma_0 * p.n / 2;
    const double d09 = p.gamma_m * p.n / 2;
    const double d43_09 = -std::sqrt(3.0) * p.gamma_m * p.n / 6;

    LinearLangevinSystem sys;
    sys.labels = {"I09.y"};
    sys.drift = Matrix::Constant(1, 1, -GF);
    sys.diffusion = Matrix::Constant(1, 1, c * c * (d43 + ratio * ratio * d47) + d09 + 2 * c * d43_09);
    sys.input_coupling = Matrix::Constant(1, 1, readout_beta(p));
    sys.input_spectrum = Matrix::Identity(1, 1);
    sys.reference = Vector::Constant(1, p.N / 4);
    sys.validate();
    return sys;
}

LinearLangevinSystem build_readout_system(const ReadoutParams& params) {
    params.validate();
    LinearLangevinSystem sys;
    sys.labels = {"I.y"};
    sys.drift = Matrix::Constant(1, 1, -params.Gamma_F);
    sys.diffusion = Matrix::Constant(1, 1, 2 * params.Gamma_F * (1 - params.eta_I));
    sys.input_coupling = Matrix::Constant(1, 1, params.normalized_beta());
    sys.input_spectrum = Matrix::Identity(1, 1);
    sys.reference = Vector::Ones(1);
    sys.validate();
    return sys;
}

OutputMap readout_output_map(const LinearLangevinSystem& sys, double normalized_beta) {
    if (sys.dim() != 1) throw ValidationError("readout_output_map: expects a one-variable readout system");
    const double ref = sys.reference.size() ? sys.reference(0) : 1.0;
    return {Vector::Constant(1, normalized_beta / std::sqrt(ref)), Vector::Constant(1, -1.0)};
}

}  // namespace spinxfer
