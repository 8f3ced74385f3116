#include <doctest.h>

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "oracles.hpp"
#include "spinxfer/errors.hpp"
#include "spinxfer/langevin.hpp"

using namespace spinxfer;

namespace {

LinearLangevinSystem make(const Matrix& M, const Matrix& D) {
    LinearLangevinSystem s;
    for (Eigen::Index k = 0; k < M.rows(); ++k) s.labels.push_back("x" + std::to_string(k));
    s.drift = M;
    s.diffusion = D;
    return s;
}

// Stable drift with spread-out eigenvalues and a random PSD diffusion.
LinearLangevinSystem random_system(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g;
    Matrix A(n, n), B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            A(i, j) = g(rng);
            B(i, j) = g(rng);
        }
    Eigen::EigenSolver<Matrix> es(A, false);
    const double shift = es.eigenvalues().real().maxCoeff() + 0.5;
    return make(A - shift * Matrix::Identity(n, n), B * B.transpose());
}

}  // namespace

TEST_CASE("scalar balance: M=-I, D=2I gives C=I") {
    const auto c = steady_covariance(make(-Matrix::Identity(2, 2), 2 * Matrix::Identity(2, 2)));
    CHECK((c.entries - Matrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("steady covariance agrees with the eigenbasis oracle") {
    for (unsigned seed : {1u, 2u, 3u}) {
        const auto sys = random_system(6, seed);
        const auto c = steady_covariance(sys);
        const Matrix ref = oracle::lyapunov_by_eigenbasis(sys.drift, sys.diffusion);
        CHECK((c.entries - ref).norm() / ref.norm() < 1e-10);
        CHECK(lyapunov_residual(sys, c.entries) < 1e-10);
        CHECK((c.entries - c.entries.transpose()).norm() == 0.0);
    }
}

TEST_CASE("steady covariance is invariant under badly scaled coordinates") {
    auto sys = random_system(4, 7);
    Vector s(4);
    s << 1e-6, 1, 1e5, 1e9;
    const Matrix S = s.asDiagonal(), Si = s.cwiseInverse().asDiagonal();
    LinearLangevinSystem scaled = make(S * sys.drift * Si, S * sys.diffusion * S);
    scaled.reference = s.cwiseAbs2();
    const Matrix back = Si * steady_covariance(scaled).entries * Si;
    CHECK((back - steady_covariance(sys).entries).norm() / back.norm() < 1e-10);
}

TEST_CASE("non-Hurwitz drift is rejected") {
    Matrix M(2, 2);
    M << -1, 1, 1, -1;  // one zero eigenvalue
    CHECK_THROWS_AS(steady_covariance(make(M, Matrix::Identity(2, 2))), SingularSystemError);
    CHECK_THROWS_AS(steady_covariance(make(Matrix::Identity(1, 1), Matrix::Identity(1, 1))), SingularSystemError);
}

TEST_CASE("invalid systems are rejected") {
    CHECK_THROWS_AS(make(-Matrix::Identity(2, 2), Matrix::Identity(3, 3)).validate(), ValidationError);
    Matrix D(2, 2);
    D << 1, 0, 0, -1;
    CHECK_THROWS_AS(steady_covariance(make(-Matrix::Identity(2, 2), D)), ValidationError);
    Matrix A(2, 2);
    A << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(steady_covariance(make(-Matrix::Identity(2, 2), A)), ValidationError);
}

TEST_CASE("covariance evolution") {
    SUBCASE("frozen system keeps C0") {
        LinearLangevinSystem s = make(Matrix::Zero(2, 2), Matrix::Zero(2, 2));
        CovarianceMatrix c0{s.labels, Matrix::Identity(2, 2) * 3};
        CHECK((evolve_covariance(s, c0, 5.0).entries - c0.entries).norm() < 1e-14);
    }
    SUBCASE("Ornstein-Uhlenbeck closed form") {
        const double a = 2.5, d = 0.7, c0 = 4.0, t = 0.9;
        LinearLangevinSystem s = make(Matrix::Constant(1, 1, -a), Matrix::Constant(1, 1, d));
        const double expect = c0 * std::exp(-2 * a * t) + d / (2 * a) * (1 - std::exp(-2 * a * t));
        const double got = evolve_covariance(s, {s.labels, Matrix::Constant(1, 1, c0)}, t).entries(0, 0);
        CHECK(oracle::rel(got, expect) < 1e-12);
    }
    SUBCASE("long time limit equals the steady state") {
        const auto sys = random_system(5, 11);
        const CovarianceMatrix c0{sys.labels, Matrix::Identity(5, 5)};
        const auto late = evolve_covariance(sys, c0, 200.0);
        const auto st = steady_covariance(sys);
        CHECK((late.entries - st.entries).norm() / st.entries.norm() < 1e-10);
    }
    SUBCASE("direct integral of the propagator") {
        const auto sys = random_system(3, 5);
        const double t = 0.8;
        const CovarianceMatrix c0{sys.labels, Matrix::Identity(3, 3)};
        // C(t) = Φ C0 Φᵀ + ∫_0^t Φ(s) D Φ(s)ᵀ ds by Simpson on a fine grid
        const int K = 2000;
        Matrix acc = Matrix::Zero(3, 3);
        for (int k = 0; k <= K; ++k) {
            const double s = t * k / K;
            const Matrix P = (sys.drift * s).exp();
            const double w = (k == 0 || k == K) ? 1 : (k % 2 ? 4 : 2);
            acc += w * P * sys.diffusion * P.transpose();
        }
        acc *= t / (3 * K);
        const Matrix P = (sys.drift * t).exp();
        const Matrix expect = P * c0.entries * P.transpose() + acc;
        CHECK((evolve_covariance(sys, c0, t).entries - expect).norm() / expect.norm() < 1e-10);
        CHECK((propagator(sys, t) - P).norm() < 1e-12);
    }
    SUBCASE("negative time is rejected") {
        const auto sys = random_system(2, 1);
        CHECK_THROWS_AS(evolve_covariance(sys, {sys.labels, Matrix::Identity(2, 2)}, -1.0), ValidationError);
    }
}

TEST_CASE("noise spectrum of an Ornstein-Uhlenbeck process") {
    const double gamma = 3.0;
    LinearLangevinSystem s = make(Matrix::Constant(1, 1, -gamma), Matrix::Constant(1, 1, 2 * gamma));
    const auto sp = noise_spectrum(s, steady_covariance(s), 0, 0, {0.0, 1.0, 10.0});
    CHECK(sp.delta_weight == 0.0);
    for (std::size_t k = 0; k < sp.omega.size(); ++k) {
        const double w = sp.omega[k];
        CHECK(oracle::rel(sp.values[k], 2 * gamma / (gamma * gamma + w * w)) < 1e-12);
    }
    CHECK(oracle::rel(oracle::spectral_integral(sp.smooth, gamma), 1.0) < 1e-9);
}

TEST_CASE("spectrum sum rule with a conserved mode") {
    // exchange-like pair: total x0 + x1 conserved, difference relaxes
    const double a = 2.0, b = 0.5;
    Matrix M(2, 2);
    M << -a, b, a, -b;
    Matrix D(2, 2);
    D << 1.0, -1.0, -1.0, 1.0;
    const auto s = make(M, D);
    Matrix C0(2, 2);
    C0 << 0.7, 0.1, 0.1, 1.3;
    const CovarianceMatrix c0{s.labels, C0};
    const auto late = evolve_covariance(s, c0, 100.0);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            const auto sp = noise_spectrum(s, c0, i, j);
            const double total = sp.delta_weight / (2 * M_PI) + oracle::spectral_integral(sp.smooth, a + b);
            CHECK(oracle::rel(total, late.entries(i, j)) < 1e-8);
        }
}

TEST_CASE("spectrum rejects growing modes") {
    const auto s = make(Matrix::Constant(1, 1, 0.5), Matrix::Identity(1, 1));
    CHECK_THROWS_AS(noise_spectrum(s, {s.labels, Matrix::Identity(1, 1)}, 0, 0), NumericError);
}

TEST_CASE("squeezed vacuum passes through an empty cavity") {
    const double kappa = 1e3, r = 0.4;
    ComplexLangevinModel m({"A"}, 1);
    m.drift(0, 0) = -kappa;
    m.input(0, 0) = std::sqrt(2 * kappa);
    m.scale << 2;
    m.reference << 1;
    const auto sys = m.to_real(squeezed_vacuum(r));
    const auto c = steady_covariance(sys);
    CHECK(oracle::rel(quadrature_variance(c, "A.x", 1.0), std::exp(-2 * r)) < 1e-12);
    CHECK(oracle::rel(quadrature_variance(c, "A.y", 1.0), std::exp(2 * r)) < 1e-12);
    CHECK(c("A.x", "A.y") == doctest::Approx(0.0).epsilon(1e-14));

    const auto vac = steady_covariance(m.to_real(squeezed_vacuum(0)));
    CHECK(oracle::rel(quadrature_variance(vac, "A.x", 1.0), 1.0) < 1e-12);
}

TEST_CASE("spin vacuum noise from normal-ordered correlations") {
    // coherent spin relaxing at rate g with <F F†> = 2 g n, <F† F> = 0 keeps variance n/4
    const double g = 5.0, n = 1e6;
    ComplexLangevinModel m({"S"});
    m.drift(0, 0) = -g;
    m.normal(0, 0) = 2 * g * n;
    m.reference << n / 4;
    const auto c = steady_covariance(m.to_real(Matrix::Zero(0, 0)));
    CHECK(oracle::rel(quadrature_variance(c, "S.x", n / 4), 1.0) < 1e-12);
    CHECK(oracle::rel(quadrature_variance(c, "S.y", n / 4), 1.0) < 1e-12);
}

TEST_CASE("output correlation of a driven mode") {
    // x' = -a x + b u, y = h x + d u, <u u> = δ: steady smooth part h e^{-aτ}(h C + b d), τ ≥ 0
    const double a = 1.5, b = 0.8, h = 0.6, d = -1.0;
    LinearLangevinSystem s = make(Matrix::Constant(1, 1, -a), Matrix::Zero(1, 1));
    s.input_coupling = Matrix::Constant(1, 1, b);
    s.input_spectrum = Matrix::Identity(1, 1);
    const double C = b * b / (2 * a);
    const CovarianceMatrix c0{s.labels, Matrix::Constant(1, 1, C)};
    for (double tau : {0.0, 0.3, 2.0}) {
        const double expect = h * std::exp(-a * tau) * (h * C + b * d);
        const double t0 = 0.4;
        CHECK(oracle::rel(output_correlation(s, c0, Vector::Constant(1, h), Vector::Constant(1, d), t0 + tau, t0),
                          expect) < 1e-12);
        CHECK(oracle::rel(output_correlation(s, c0, Vector::Constant(1, h), Vector::Constant(1, d), t0, t0 + tau),
                          expect) < 1e-12);
    }
}

TEST_CASE("best quadrature is the smaller eigenvalue") {
    const double th = 0.3;
    Eigen::Matrix2d R;
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Eigen::Matrix2d C = R * Eigen::Vector2d(0.2, 3.0).asDiagonal() * R.transpose();
    const CovarianceMatrix c{{"x", "y"}, C};
    const auto [theta, v] = best_quadrature_variance(c, "x", "y", 1.0);
    CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(std::cos(theta) * std::cos(th) + std::sin(theta) * std::sin(th) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(quadrature_variance(c, "z", 1.0), ValidationError);
}

TEST_CASE("minimum normalized eigenvalue") {
    const CovarianceMatrix c{{"a", "b"}, Eigen::Vector2d(2.0, 0.5).asDiagonal()};
    CHECK(min_normalized_eigenvalue(c, Eigen::Vector2d(4.0, 1.0)) == doctest::Approx(0.5));
}
