#include "spinxfer/exchange.hpp"

#include <cmath>
#include <numbers>

#include <boost/numeric/odeint.hpp>

#include "spinxfer/errors.hpp"

namespace spinxfer {

namespace {

const double kSqrt3 = std::sqrt(3.0);

double factorial(int k) {
    if (k < 0) return std::numeric_limits<double>::infinity();
    return std::tgamma(k + 1.0);
}

void check_density(const CMatrix& rho, const char* what, double tol) {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
        throw ValidationError(std::string(what) + " is not Hermitian");
    if (std::abs(rho.trace() - cplx(1.0)) > tol) throw ValidationError(std::string(what) + " does not have unit trace");
}

// independent elements carried by the integrator
struct Element {
    bool ground;
    int k, l;
};

const std::vector<Element>& elements() {
    static const std::vector<Element> list = [] {
        std::vector<Element> v;
        for (int k = 1; k <= 6; ++k)
            for (int l = k; l <= 6; ++l)
                if (secular(k, l)) v.push_back({false, k, l});
        v.push_back({true, 9, 9});
        v.push_back({true, 9, 0});
        v.push_back({true, 0, 0});
        return v;
    }();
    return list;
}

using OdeState = std::vector<double>;

void pack(const DensityState& s, OdeState& x) {
    const auto& el = elements();
    x.resize(2 * el.size());
    for (std::size_t q = 0; q < el.size(); ++q) {
        const cplx z = el[q].ground ? s.g(el[q].k, el[q].l) : s.m(el[q].k, el[q].l);
        x[2 * q] = z.real();
        x[2 * q + 1] = z.imag();
    }
}

void unpack(const OdeState& x, DensityState& s) {
    const auto& el = elements();
    s.rho_m.setZero();
    s.rho_g.setZero();
    for (std::size_t q = 0; q < el.size(); ++q) {
        const bool diag = el[q].k == el[q].l;
        const cplx z(x[2 * q], diag ? 0.0 : x[2 * q + 1]);
        if (el[q].ground) {
            s.g(el[q].k, el[q].l) = z;
            s.g(el[q].l, el[q].k) = std::conj(z);
        } else {
            s.m(el[q].k, el[q].l) = z;
            s.m(el[q].l, el[q].k) = std::conj(z);
        }
    }
}

}  // namespace

int metastable_index(int level) {
    if (level < 1 || level > 6) throw ValidationError("metastable level must be in 1..6");
    return level - 1;
}

int ground_index(int level) {
    if (level == 9) return 0;
    if (level == 0) return 1;
    throw ValidationError("ground level must be 9 or 0");
}

DensityState DensityState::polarized(double n, double N) {
    DensityState s;
    s.n = n;
    s.N = N;
    s.m(4, 4) = n;
    s.g(0, 0) = N;
    return s;
}

void DensityState::validate(double tol) const {
    if (rho_m.rows() != 6 || rho_m.cols() != 6 || rho_g.rows() != 2 || rho_g.cols() != 2)
        throw ValidationError("density matrices must be 6x6 and 2x2");
    if (!(n >= 0) || !(N >= 0)) throw ValidationError("populations must be non-negative");
    const double sm = std::max(n, 1.0), sg = std::max(N, 1.0);
    if ((rho_m - rho_m.adjoint()).cwiseAbs().maxCoeff() > tol * sm) throw ValidationError("rho_m is not Hermitian");
    if ((rho_g - rho_g.adjoint()).cwiseAbs().maxCoeff() > tol * sg) throw ValidationError("rho_g is not Hermitian");
    if (std::abs(rho_m.trace().real() - n) > tol * sm) throw ValidationError("trace(rho_m) != n");
    if (std::abs(rho_g.trace().real() - N) > tol * sg) throw ValidationError("trace(rho_g) != N");
    if (rho_m.diagonal().real().minCoeff() < -tol * sm || rho_g.diagonal().real().minCoeff() < -tol * sg)
        throw ValidationError("negative population");
}

ExchangeRates ExchangeRates::from(double gamma_exc, double n, double N) {
    if (!(gamma_exc >= 0) || !(n >= 0) || !(N > 0)) throw ValidationError("exchange rates need gamma_exc >= 0, n >= 0, N > 0");
    return {gamma_exc, N * gamma_exc, n * gamma_exc};
}

double clebsch_gordan(int j1, int m1, int j2, int m2, int j, int m) {
    if (m1 + m2 != m) return 0.0;
    if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m) > j) return 0.0;
    if (j < std::abs(j1 - j2) || j > j1 + j2) return 0.0;
    if ((j1 + j2 + j) % 2 != 0 || (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j + m) % 2 != 0) return 0.0;
    auto f = [](int twice) { return factorial(twice / 2); };
    const double pre = std::sqrt((j + 1) * f(j + j1 - j2) * f(j - j1 + j2) * f(j1 + j2 - j) / f(j1 + j2 + j + 2));
    const double norm = std::sqrt(f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2));
    double sum = 0;
    for (int k = 0; k <= j1 + j2 + j; k += 2) {
        const int a = j1 + j2 - j - k, b = j1 - m1 - k, c = j2 + m2 - k, d = j - j2 + m1 + k, e = j - j1 - m2 + k;
        if (a < 0 || b < 0 || c < 0 || d < 0 || e < 0) continue;
        const double term = 1.0 / (f(k) * f(a) * f(b) * f(c) * f(d) * f(e));
        sum += ((k / 2) % 2 == 0) ? term : -term;
    }
    return pre * norm * sum;
}

Eigen::Matrix<double, 6, 6> hyperfine_basis() {
    // (2F, 2m_F) of levels 1..6
    static const int levels[6][2] = {{3, -3}, {3, -1}, {3, 1}, {3, 3}, {1, -1}, {1, 1}};
    Eigen::Matrix<double, 6, 6> U = Eigen::Matrix<double, 6, 6>::Zero();
    for (int h = 0; h < 6; ++h)
        for (int e = 0; e < 3; ++e)
            for (int i = 0; i < 2; ++i) {
                const int mJ2 = 2 * (1 - e), mI2 = i == 0 ? 1 : -1;
                U(2 * e + i, h) = clebsch_gordan(2, mJ2, 1, mI2, levels[h][0], levels[h][1]);
            }
    return U;
}

std::pair<CMatrix, CMatrix> collision_update(const CMatrix& rho_g_at, const CMatrix& rho_m_at) {
    if (rho_g_at.rows() != 2 || rho_g_at.cols() != 2 || rho_m_at.rows() != 6 || rho_m_at.cols() != 6)
        throw ValidationError("collision_update expects 2x2 and 6x6 matrices");
    check_density(rho_g_at, "rho_g", 1e-10);
    check_density(rho_m_at, "rho_m", 1e-10);

    const CMatrix U = hyperfine_basis().cast<cplx>();
    const CMatrix rd = U * rho_m_at * U.transpose();
    CMatrix tr_n = CMatrix::Zero(3, 3);
    CMatrix tr_e = CMatrix::Zero(2, 2);  // nuclear order (+1/2, -1/2)
    for (int e = 0; e < 3; ++e)
        for (int f = 0; f < 3; ++f)
            for (int i = 0; i < 2; ++i) tr_n(e, f) += rd(2 * e + i, 2 * f + i);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int e = 0; e < 3; ++e) tr_e(i, j) += rd(2 * e + i, 2 * e + j);

    // ground order (9, 0) is nuclear order reversed
    CMatrix g_nuc(2, 2);
    g_nuc << rho_g_at(1, 1), rho_g_at(1, 0), rho_g_at(0, 1), rho_g_at(0, 0);
    CMatrix rho_g_new(2, 2);
    rho_g_new << tr_e(1, 1), tr_e(1, 0), tr_e(0, 1), tr_e(0, 0);

    CMatrix prod = CMatrix::Zero(6, 6);
    for (int e = 0; e < 3; ++e)
        for (int f = 0; f < 3; ++f)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) prod(2 * e + i, 2 * f + j) = tr_n(e, f) * g_nuc(i, j);
    CMatrix rho_m_new = U.transpose() * prod * U;
    return {rho_g_new, rho_m_new};
}

bool secular(int k, int l) { return (k <= 4) == (l <= 4); }

DensityState me_rhs(const DensityState& s, const ExchangeRates& rates) {
    const double N = s.N, n = s.n;
    auto r = [&](int k, int l) { return s.m(k, l); };
    auto g = [&](int a, int b) { return s.g(a, b); };

    // recurring combinations
    const cplx A = r(2, 2) + 3.0 * r(1, 1) + 2.0 * r(5, 5);
    const cplx B = (r(2, 3) + r(5, 6)) * kSqrt3 + 3.0 * r(1, 2);
    const cplx Cc = r(1, 3) + r(2, 4);
    const cplx E = 2.0 * r(2, 2) + r(5, 5) + r(6, 6) + 2.0 * r(3, 3);
    const cplx F = kSqrt3 * r(2, 1) + r(6, 5) + r(3, 2);
    const cplx Fc = kSqrt3 * r(1, 2) + r(2, 3) + r(5, 6);
    const cplx G = kSqrt3 * r(3, 4) + r(5, 6) + r(2, 3);
    const cplx H = 2.0 * r(6, 6) + r(3, 3) + 3.0 * r(4, 4);
    const cplx K = kSqrt3 * r(4, 3) + r(6, 5) + r(3, 2);
    const cplx L = kSqrt3 * (r(2, 3) + r(5, 6)) + 3.0 * r(3, 4);

    DensityState d;
    d.n = n;
    d.N = N;
    auto set = [&](int k, int l, cplx v) {
        d.m(k, l) = v;
        d.m(l, k) = std::conj(v);
    };
    set(1, 1, -N * r(1, 1) + g(9, 9) * A / 3.0);
    set(1, 2, -N * r(1, 2) + 2.0 / 9 * g(9, 9) * B + kSqrt3 / 9 * g(9, 0) * A);
    set(1, 3, -N * r(1, 3) + g(9, 9) * Cc / 3.0 + 2.0 / 9 * g(9, 0) * B);
    set(1, 4, -N * r(1, 4) + kSqrt3 / 3 * g(9, 0) * Cc);
    set(2, 2, -N * r(2, 2) + 2.0 / 9 * g(9, 9) * E + 2.0 / 9 * g(9, 0) * F + 2.0 / 9 * g(0, 9) * Fc +
                  g(0, 0) * A / 9.0);
    set(2, 3, -N * r(2, 3) + 2.0 / 9 * g(9, 9) * G + 2.0 / 9 * g(9, 0) * E + kSqrt3 / 9 * g(0, 9) * Cc +
                  2.0 / 9 * g(0, 0) * Fc);
    set(2, 4, -N * r(2, 4) + 2.0 / 9 * g(9, 0) * L + g(0, 0) * Cc / 3.0);
    set(3, 3, -N * r(3, 3) + g(9, 9) * H / 9.0 + 2.0 / 9 * g(9, 0) * K + 2.0 / 9 * g(0, 9) * G +
                  2.0 / 9 * g(0, 0) * E);
    set(3, 4, -N * r(3, 4) + kSqrt3 / 9 * g(9, 0) * H + 2.0 / 9 * g(0, 0) * L);
    set(4, 4, -N * r(4, 4) + g(0, 0) * H / 3.0);
    set(5, 5, -N * r(5, 5) + g(9, 9) * E / 9.0 - 2.0 / 9 * g(9, 0) * F - 2.0 / 9 * g(0, 9) * Fc +
                  2.0 / 9 * g(0, 0) * A);
    set(5, 6, -N * r(5, 6) + 2.0 / 9 * g(9, 9) * G - g(9, 0) * E / 9.0 - 2.0 * kSqrt3 / 9 * g(0, 9) * Cc +
                  2.0 / 9 * g(0, 0) * Fc);
    set(6, 6, -N * r(6, 6) + 2.0 / 9 * g(9, 9) * H - 2.0 / 9 * g(9, 0) * K - 2.0 / 9 * g(0, 9) * G +
                  g(0, 0) * E / 9.0);

    d.g(0, 0) = -n * g(0, 0) + N / 3.0 * (3.0 * r(4, 4) + r(6, 6) + r(2, 2) + 2.0 * r(5, 5) + 2.0 * r(3, 3));
    d.g(9, 9) = -n * g(9, 9) + N / 3.0 * (r(3, 3) + 2.0 * r(2, 2) + 3.0 * r(1, 1) + r(5, 5) + 2.0 * r(6, 6));
    const cplx g09 = -n * g(0, 9) + N / 3.0 * ((r(4, 3) + r(2, 1)) * kSqrt3 + 2.0 * r(3, 2) - r(6, 5));
    d.g(0, 9) = g09;
    d.g(9, 0) = std::conj(g09);

    d.rho_m *= rates.gamma_exc;
    d.rho_g *= rates.gamma_exc;
    // populations are real by construction
    for (int k = 0; k < 6; ++k) d.rho_m(k, k) = d.rho_m(k, k).real();
    for (int k = 0; k < 2; ++k) d.rho_g(k, k) = d.rho_g(k, k).real();
    return d;
}

DensityState integrate_nonlinear(const DensityState& state0, const ExchangeRates& rates, double t_final,
                                 double tol) {
    namespace ode = boost::numeric::odeint;
    if (!(tol > 0)) throw ValidationError("integrate_nonlinear: tol must be > 0");
    if (!(t_final >= 0) || !std::isfinite(t_final)) throw ValidationError("integrate_nonlinear: t_final must be >= 0");
    state0.validate(1e-8);

    DensityState work = state0;
    auto rhs = [&](const OdeState& x, OdeState& dx, double) {
        unpack(x, work);
        // Loss rates from the current totals: with frozen n, N the trace
        // subspace is a saddle and roundoff grows without bound.
        work.n = work.rho_m.trace().real();
        work.N = work.rho_g.trace().real();
        pack(me_rhs(work, rates), dx);
    };

    OdeState x;
    pack(state0, x);
    const double pop = std::max(std::min(state0.n, state0.N), 1e-300);
    auto stepper = ode::make_controlled(tol * pop, tol, ode::runge_kutta_dopri5<OdeState>());

    double t = 0;
    const double fastest = rates.gamma_exc * (state0.n + state0.N) + 1e-300;
    double dt = std::min(t_final, 0.1 / fastest);
    const double dt_min = 1e-14 * std::max(t_final, 1e-300);
    long steps = 0;
    while (t < t_final) {
        if (t + dt > t_final) dt = t_final - t;
        const auto res = stepper.try_step(rhs, x, t, dt);
        if (res == ode::fail && dt < dt_min)
            throw IntegrationError("integrate_nonlinear: step size underflow at t = " + std::to_string(t));
        if (++steps > 50'000'000) throw IntegrationError("integrate_nonlinear: step budget exhausted");
    }
    for (double v : x)
        if (!std::isfinite(v)) throw IntegrationError("integrate_nonlinear: non-finite state");

    DensityState out;
    out.n = state0.n;
    out.N = state0.N;
    unpack(x, out);
    return out;
}

ExchangeLinearization linearize_exchange(double n, double N, double gamma_exc) {
    if (!(n > 0) || !(N > 0)) throw ValidationError("linearize_exchange: n and N must be > 0");
    if (!(gamma_exc >= 0)) throw ValidationError("linearize_exchange: gamma_exc must be >= 0");
    const double gm = N * gamma_exc, gf = n * gamma_exc;

    ComplexLangevinModel model({"S21", "S32", "S65", "S43", "I09"});
    enum { S21, S32, S65, S43, I09 };
    auto& M = model.drift;
    M(S21, S21) = -gm;
    M(S32, S32) = -7.0 / 9 * gm;
    M(S32, S21) = 2.0 * kSqrt3 / 9 * gm;
    M(S32, S65) = 2.0 / 9 * gm;
    M(S65, S65) = -7.0 / 9 * gm;
    M(S65, S21) = 2.0 * kSqrt3 / 9 * gm;
    M(S65, S32) = 2.0 / 9 * gm;
    M(S43, S43) = -gm / 3;
    M(S43, S32) = 2.0 * kSqrt3 / 9 * gm;
    M(S43, S65) = 2.0 * kSqrt3 / 9 * gm;
    M(S43, I09) = kSqrt3 / 3 * gf;
    M(I09, I09) = -gf;
    M(I09, S32) = 2.0 / 3 * gm;
    M(I09, S65) = -gm / 3;
    M(I09, S43) = kSqrt3 / 3 * gm;
    M(I09, S21) = kSqrt3 / 3 * gm;

    const OperatorDiffusion D = diffusion_exchange(n, gm);
    model.normal(S43, S43) = D.at("43", "34");
    model.normal(S43, I09) = D.at("43", "90");
    model.normal(I09, S43) = D.at("09", "34");
    model.normal(I09, I09) = D.at("09", "90");
    model.reference << n / 4, n / 4, n / 4, n / 4, N / 4;

    ExchangeLinearization out;
    out.variables = model.names;
    out.complex_drift = model.drift;
    out.system = model.to_real(Matrix::Zero(0, 0));
    return out;
}

double OperatorDiffusion::at(const std::string& a, const std::string& b) const {
    int ia = -1, ib = -1;
    for (int k = 0; k < 4; ++k) {
        if (operators[k] == a) ia = k;
        if (operators[k] == b) ib = k;
    }
    if (ia < 0 || ib < 0) throw ValidationError("unknown operator label in diffusion lookup");
    return D(ia, ib);
}

Eigen::Matrix4d OperatorDiffusion::quadrature() const {
    ComplexLangevinModel m({"S43", "I09"});
    m.normal(0, 0) = at("43", "34");
    m.normal(0, 1) = at("43", "90");
    m.normal(1, 0) = at("09", "34");
    m.normal(1, 1) = at("09", "90");
    return m.to_real(Matrix::Zero(0, 0)).diffusion;
}

OperatorDiffusion diffusion_exchange(double n, double gamma_m) {
    if (!(n >= 0)) throw ValidationError("diffusion_exchange: n must be >= 0");
    OperatorDiffusion out;
    out.D(0, 1) = 2.0 / 3 * gamma_m * n;
    out.D(2, 1) = -2.0 * kSqrt3 / 3 * gamma_m * n;
    out.D(0, 3) = -2.0 * kSqrt3 / 3 * gamma_m * n;
    out.D(2, 3) = 2.0 * gamma_m * n;
    return out;
}

LinearLangevinSystem exchange_pair_system(double n, double N, double gamma_exc) {
    if (!(n > 0) || !(N > 0) || !(gamma_exc > 0)) throw ValidationError("exchange pair needs n, N, gamma_exc > 0");
    const double gm = N * gamma_exc, gf = n * gamma_exc;
    ComplexLangevinModel m({"S43", "I09"});
    m.drift(0, 0) = -gm / 3;
    m.drift(0, 1) = kSqrt3 / 3 * gf;
    m.drift(1, 0) = kSqrt3 / 3 * gm;
    m.drift(1, 1) = -gf;
    const OperatorDiffusion D = diffusion_exchange(n, gm);
    m.normal(0, 0) = D.at("43", "34");
    m.normal(0, 1) = D.at("43", "90");
    m.normal(1, 0) = D.at("09", "34");
    m.normal(1, 1) = D.at("09", "90");
    m.reference << n / 4, N / 4;
    return m.to_real(Matrix::Zero(0, 0));
}

CovarianceMatrix exchange_initial_covariance(double n, double N, double r) {
    CovarianceMatrix c{{"S43.x", "S43.y", "I09.x", "I09.y"}, Matrix::Zero(4, 4)};
    c.entries(0, 0) = c.entries(1, 1) = n / 4;
    c.entries(2, 2) = N / 4 * std::exp(2 * r);
    c.entries(3, 3) = N / 4 * std::exp(-2 * r);
    return c;
}

std::pair<double, double> exchange_steady_variances(double n, double N, double r) {
    if (!(n > 0) || !(N > 0)) throw ValidationError("exchange_steady_variances: n, N must be > 0");
    const double s = 1 - std::exp(-2 * r);
    const double den = (3 * n + N) * (3 * n + N);
    return {1 - s * 3 * n * N / den, 1 - s * N * N / den};
}

std::pair<double, double> exchange_correlation_functions(double n, double N, double r) {
    if (!(n > 0) || !(N > 0)) throw ValidationError("exchange_correlation_functions: n, N must be > 0");
    // (normΔ² − 1)/(4·count) without the cancellation
    const double s = 1 - std::exp(-2 * r);
    const double den = 4 * (3 * n + N) * (3 * n + N);
    return {-s * 3 * N / den, -s * N / den};
}

ExchangeSpectra exchange_spectra(double n, double N, double r, double gamma_exc, const std::vector<double>& omega) {
    if (!(n > 0) || !(N > 0) || !(gamma_exc > 0)) throw ValidationError("exchange_spectra: n, N, gamma_exc must be > 0");
    const double pi = std::numbers::pi;
    const double e = std::exp(-2 * r);
    const double S = N + 3 * n;
    const double a = S * gamma_exc;

    ExchangeSpectra out;
    out.S_II.delta_weight = pi * N * N * (N * e + 3 * n) / (2 * S * S);
    out.S_SS.delta_weight = 3 * pi * n * n * (N * e + 3 * n) / (2 * S * S);
    out.S_II.smooth = [=](double w) { return 9 * gamma_exc * n * N / (18 * w * w + 2 * a * a); };
    out.S_SS.smooth = [=](double w) { return 3 * gamma_exc * n * N / (18 * w * w + 2 * a * a); };
    // (1/2π)∫ c/(18ω² + 2a²) dω = c/(12a)
    out.smooth_integral_II = 9 * gamma_exc * n * N / (12 * a);
    out.smooth_integral_SS = 3 * gamma_exc * n * N / (12 * a);
    for (SpectrumResult* s : {&out.S_II, &out.S_SS}) {
        s->omega = omega;
        for (double w : omega) s->values.push_back(s->smooth(w));
    }
    return out;
}

}  // namespace spinxfer
