#pragma once

// Linear Langevin systems dx/dt = M x + B u + f in a real quadrature basis,
// with white input noise <u uᵀ> = Σ_in δ and Langevin forces <f fᵀ> = D δ.

#include <complex>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace spinxfer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using cplx = std::complex<double>;

std::size_t find_label(const std::vector<std::string>& labels, std::string_view label);

struct LinearLangevinSystem {
    std::vector<std::string> labels;
    Matrix drift;
    Matrix diffusion;
    Matrix input_coupling;  // dim x k
    Matrix input_spectrum;  // k x k
    // Coherent-state variance of each coordinate. Only used to condition the
    // solvers; results never depend on it beyond roundoff.
    Vector reference;

    std::size_t dim() const { return static_cast<std::size_t>(drift.rows()); }
    Matrix total_diffusion() const;
    std::size_t index_of(std::string_view label) const { return find_label(labels, label); }
    // Throws ValidationError on shape mismatch, asymmetry or a non-PSD D_total.
    void validate() const;
};

struct CovarianceMatrix {
    std::vector<std::string> labels;
    Matrix entries;

    std::size_t index_of(std::string_view label) const { return find_label(labels, label); }
    double operator()(std::string_view a, std::string_view b) const {
        return entries(index_of(a), index_of(b));
    }
};

struct SpectrumResult {
    // Total weight of the δ(ω) term, i.e. S(ω) ⊃ delta_weight·δ(ω).
    double delta_weight = 0.0;
    std::function<double(double)> smooth;
    std::vector<double> omega;   // grid requested by the caller
    std::vector<double> values;  // smooth(omega[k])
};

// Complex amplitude model dz/dt = drift z + input·a_in + F, converted to real
// quadratures (x, y) = q·(Re z, Im z). Noise is given by its normal-ordered
// correlations: normal(a,b) = <F_a F_b†>, anti(a,b) = <F_a† F_b>, pair(a,b) = <F_a F_b>.
struct ComplexLangevinModel {
    std::vector<std::string> names;
    CMatrix drift;
    CMatrix normal;
    CMatrix anti;
    CMatrix pair;
    CMatrix input;            // dim x m, couples to complex input modes
    Vector scale;             // q per variable: 1 for spins, 2 for fields (X = A + A†)
    Vector reference;         // coherent variance of each quadrature, per variable

    explicit ComplexLangevinModel(std::vector<std::string> variable_names, int inputs = 0);
    std::size_t size() const { return names.size(); }
    std::size_t index_of(std::string_view name) const { return find_label(names, name); }
    // input_spectrum is 2m x 2m over (X_1, Y_1, X_2, Y_2, ...), X = a + a†.
    LinearLangevinSystem to_real(const Matrix& input_spectrum) const;
};

// Σ_in for one squeezed vacuum mode: diag(e^{-2r}, e^{2r}).
Matrix squeezed_vacuum(double r);

CovarianceMatrix steady_covariance(const LinearLangevinSystem& sys);

// ‖M C + C Mᵀ + D_total‖_F
double lyapunov_residual(const LinearLangevinSystem& sys, const Matrix& C);

CovarianceMatrix evolve_covariance(const LinearLangevinSystem& sys, const CovarianceMatrix& C0,
                                   double t_final, double tol = 1e-12);

// Exact propagator e^{M t}.
Matrix propagator(const LinearLangevinSystem& sys, double t);

SpectrumResult noise_spectrum(const LinearLangevinSystem& sys, const CovarianceMatrix& C0,
                              std::size_t i, std::size_t j,
                              const std::vector<double>& omega_grid = {});

// Smooth part of <y(t) y(t')> for the output y = h·x + d·u, t, t' measured
// from the moment the state covariance was C0. The δ(t−t') part is d Σ_in dᵀ.
double output_correlation(const LinearLangevinSystem& sys, const CovarianceMatrix& C0,
                          const Vector& h, const Vector& d, double t, double t_prime);

double quadrature_variance(const CovarianceMatrix& C, std::string_view label, double normalization);

// Minimum over θ of Var(x cosθ + y sinθ)/normalization, θ in (−π/2, π/2].
std::pair<double, double> best_quadrature_variance(const CovarianceMatrix& C,
                                                   std::string_view x_label,
                                                   std::string_view y_label,
                                                   double normalization);

// Smallest eigenvalue of the symmetric part, scaled by the reference variances.
double min_normalized_eigenvalue(const CovarianceMatrix& C, const Vector& reference);

}  // namespace spinxfer
