#include "spinxfer/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "spinxfer/errors.hpp"

namespace spinxfer {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Vector sqrt_reference(const LinearLangevinSystem& sys) {
    if (sys.reference.size() == 0) return Vector::Ones(sys.dim());
    return sys.reference.array().sqrt();
}

// Coordinates rescaled so that a coherent state has unit covariance.
struct Normalized {
    Vector s;
    Matrix M;
    Matrix D;
};

Normalized normalize(const LinearLangevinSystem& sys) {
    Normalized out;
    out.s = sqrt_reference(sys);
    const Vector inv = out.s.cwiseInverse();
    out.M = inv.asDiagonal() * sys.drift * out.s.asDiagonal();
    out.D = inv.asDiagonal() * sys.total_diffusion() * inv.asDiagonal();
    out.D = 0.5 * (out.D + out.D.transpose());
    return out;
}

Matrix to_normalized(const Matrix& C, const Vector& s) {
    const Vector inv = s.cwiseInverse();
    return inv.asDiagonal() * C * inv.asDiagonal();
}

Matrix from_normalized(const Matrix& C, const Vector& s) {
    Matrix out = s.asDiagonal() * C * s.asDiagonal();
    return 0.5 * (out + out.transpose());
}

std::string describe(cplx z) {
    std::ostringstream os;
    os.precision(6);
    os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
    return os.str();
}

double stability_tolerance(const Matrix& M) {
    return 64.0 * kEps * std::max(1.0, M.cwiseAbs().rowwise().sum().maxCoeff());
}

// e^{Mt} and ∫_0^t e^{Ms} D e^{Mᵀs} ds via a small Van Loan step and repeated doubling.
std::pair<Matrix, Matrix> discrete_propagator(const Matrix& M, const Matrix& D, double t) {
    const Eigen::Index n = M.rows();
    const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
    int doublings = 0;
    if (norm * t > 0.5) doublings = static_cast<int>(std::ceil(std::log2(norm * t / 0.5)));
    if (doublings > 2000) throw IntegrationError("evolve_covariance: t_final too large for the drift scale");
    const double h = std::ldexp(t, -doublings);

    Matrix H = Matrix::Zero(2 * n, 2 * n);
    H.topLeftCorner(n, n) = -M * h;
    H.topRightCorner(n, n) = D * h;
    H.bottomRightCorner(n, n) = M.transpose() * h;
    const Matrix E = H.exp();
    Matrix Phi = E.bottomRightCorner(n, n).transpose();
    Matrix Q = Phi * E.topRightCorner(n, n);
    Q = 0.5 * (Q + Q.transpose());
    for (int k = 0; k < doublings; ++k) {
        Q = Phi * Q * Phi.transpose() + Q;
        Q = 0.5 * (Q + Q.transpose());
        Phi = Phi * Phi;
    }
    return {Phi, Q};
}

}  // namespace

std::size_t find_label(const std::vector<std::string>& labels, std::string_view label) {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw ValidationError("unknown label '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - labels.begin());
}

Matrix LinearLangevinSystem::total_diffusion() const {
    Matrix total = diffusion;
    if (input_coupling.cols() > 0) total += input_coupling * input_spectrum * input_coupling.transpose();
    return total;
}

void LinearLangevinSystem::validate() const {
    const auto n = drift.rows();
    if (drift.cols() != n || diffusion.rows() != n || diffusion.cols() != n)
        throw ValidationError("drift and diffusion must be square with equal size");
    if (static_cast<std::size_t>(n) != labels.size())
        throw ValidationError("label count does not match system dimension");
    if (input_coupling.cols() > 0) {
        if (input_coupling.rows() != n) throw ValidationError("input coupling has wrong row count");
        if (input_spectrum.rows() != input_coupling.cols() || input_spectrum.cols() != input_coupling.cols())
            throw ValidationError("input spectrum size does not match input coupling");
    }
    if (reference.size() != 0 && (reference.size() != n || (reference.array() <= 0).any()))
        throw ValidationError("reference variances must be positive, one per coordinate");
    if (!drift.allFinite() || !diffusion.allFinite()) throw ValidationError("system contains non-finite entries");

    const Normalized z = normalize(*this);
    const Matrix raw = to_normalized(total_diffusion(), z.s);
    const double scale = std::max(raw.norm(), 1e-300);
    if ((raw - raw.transpose()).norm() > 1e-10 * scale) throw ValidationError("total diffusion is not symmetric");
    if (n > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(z.D, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-12 * scale)
            throw ValidationError("total diffusion is not positive semidefinite");
    }
}

ComplexLangevinModel::ComplexLangevinModel(std::vector<std::string> variable_names, int inputs)
    : names(std::move(variable_names)) {
    const auto n = static_cast<Eigen::Index>(names.size());
    drift = CMatrix::Zero(n, n);
    normal = CMatrix::Zero(n, n);
    anti = CMatrix::Zero(n, n);
    pair = CMatrix::Zero(n, n);
    input = CMatrix::Zero(n, inputs);
    scale = Vector::Ones(n);
    reference = Vector::Ones(n);
}

LinearLangevinSystem ComplexLangevinModel::to_real(const Matrix& input_spectrum) const {
    const auto k = static_cast<Eigen::Index>(size());
    const auto m = input.cols();
    if (input_spectrum.rows() != 2 * m || input_spectrum.cols() != 2 * m)
        throw ValidationError("input spectrum must be 2m x 2m for m complex inputs");

    LinearLangevinSystem sys;
    sys.drift = Matrix::Zero(2 * k, 2 * k);
    sys.input_coupling = Matrix::Zero(2 * k, 2 * m);
    sys.input_spectrum = input_spectrum;
    sys.reference = Vector(2 * k);
    for (Eigen::Index a = 0; a < k; ++a) {
        sys.labels.push_back(names[a] + ".x");
        sys.labels.push_back(names[a] + ".y");
        sys.reference(2 * a) = sys.reference(2 * a + 1) = reference(a);
        for (Eigen::Index b = 0; b < k; ++b) {
            const cplx c = drift(a, b) * (scale(a) / scale(b));
            sys.drift(2 * a, 2 * b) = c.real();
            sys.drift(2 * a, 2 * b + 1) = -c.imag();
            sys.drift(2 * a + 1, 2 * b) = c.imag();
            sys.drift(2 * a + 1, 2 * b + 1) = c.real();
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            const cplx c = input(a, j) * scale(a);
            sys.input_coupling(2 * a, 2 * j) = c.real() / 2;
            sys.input_coupling(2 * a, 2 * j + 1) = -c.imag() / 2;
            sys.input_coupling(2 * a + 1, 2 * j) = c.imag() / 2;
            sys.input_coupling(2 * a + 1, 2 * j + 1) = c.real() / 2;
        }
    }

    // w = (F, F†); Re F = (F + F†)/2, Im F = (F − F†)/(2i).
    CMatrix G(2 * k, 2 * k);
    G << pair, normal, anti, pair.conjugate().transpose();
    CMatrix T = CMatrix::Zero(2 * k, 2 * k);
    const cplx half_over_i = 1.0 / cplx(0.0, 2.0);
    for (Eigen::Index a = 0; a < k; ++a) {
        T(2 * a, a) = T(2 * a, k + a) = 0.5 * scale(a);
        T(2 * a + 1, a) = half_over_i * scale(a);
        T(2 * a + 1, k + a) = -half_over_i * scale(a);
    }
    CMatrix R = T * G * T.transpose();
    R = 0.5 * (R + R.transpose()).eval();
    const double mag = std::max(R.cwiseAbs().maxCoeff(), 1e-300);
    if (R.imag().cwiseAbs().maxCoeff() > 1e-9 * mag)
        throw ValidationError("noise correlations do not yield a real quadrature diffusion matrix");
    sys.diffusion = R.real();
    sys.validate();
    return sys;
}

Matrix squeezed_vacuum(double r) {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = std::exp(-2 * r);
    s(1, 1) = std::exp(2 * r);
    return s;
}

CovarianceMatrix steady_covariance(const LinearLangevinSystem& sys) {
    sys.validate();
    const Normalized z = normalize(sys);
    const auto n = z.M.rows();

    Eigen::EigenSolver<Matrix> es(z.M, false);
    const double tol = stability_tolerance(z.M);
    for (Eigen::Index k = 0; k < n; ++k) {
        const cplx lam = es.eigenvalues()(k);
        if (!(lam.real() < -tol)) {
            // report in physical units; the similarity transform keeps eigenvalues
            throw SingularSystemError("steady_covariance: drift is not Hurwitz, eigenvalue " + describe(lam) +
                                      " s^-1 has non-negative real part");
        }
    }

    const Matrix I = Matrix::Identity(n, n);
    const Matrix K = Eigen::kroneckerProduct(I, z.M) + Eigen::kroneckerProduct(z.M, I);
    const Vector b = -Eigen::Map<const Vector>(z.D.data(), n * n);
    Eigen::PartialPivLU<Matrix> lu(K);
    Vector x = lu.solve(b);
    for (int it = 0; it < 3; ++it) x += lu.solve(b - K * x);

    Matrix Cn = Eigen::Map<Matrix>(x.data(), n, n);
    Cn = 0.5 * (Cn + Cn.transpose());
    if (!Cn.allFinite()) throw SingularSystemError("steady_covariance: non-finite solution");

    CovarianceMatrix out{sys.labels, from_normalized(Cn, z.s)};
    const double res = lyapunov_residual(sys, out.entries);
    if (res > 1e-10)
        throw SingularSystemError("steady_covariance: Lyapunov residual " + std::to_string(res) +
                                  " exceeds 1e-10 (ill-conditioned drift)");
    return out;
}

double lyapunov_residual(const LinearLangevinSystem& sys, const Matrix& C) {
    const Normalized z = normalize(sys);
    const Matrix Cn = to_normalized(C, z.s);
    const Matrix R = z.M * Cn + Cn * z.M.transpose() + z.D;
    return R.norm() / std::max(z.D.norm(), 1e-300);
}

CovarianceMatrix evolve_covariance(const LinearLangevinSystem& sys, const CovarianceMatrix& C0,
                                   double t_final, double tol) {
    if (!(tol > 0)) throw ValidationError("evolve_covariance: tol must be > 0");
    if (!(t_final >= 0) || !std::isfinite(t_final)) throw ValidationError("evolve_covariance: t_final must be finite and >= 0");
    sys.validate();
    if (C0.entries.rows() != static_cast<Eigen::Index>(sys.dim()) || C0.entries.cols() != C0.entries.rows())
        throw ValidationError("evolve_covariance: initial covariance has wrong size");
    if (t_final == 0) return {sys.labels, C0.entries};

    const Normalized z = normalize(sys);
    const auto [Phi, Q] = discrete_propagator(z.M, z.D, t_final);
    const Matrix C0n = to_normalized(C0.entries, z.s);
    Matrix Cn = Phi * C0n * Phi.transpose() + Q;
    if (!Cn.allFinite())
        throw IntegrationError("evolve_covariance: covariance became non-finite; reduce t_final or the step "
                               "(drift may be unstable)");
    const double asym = (Cn - Cn.transpose()).norm();
    if (asym > std::max(tol, 1e-8) * std::max(Cn.norm(), 1.0))
        throw IntegrationError("evolve_covariance: symmetry lost during propagation; use a smaller step");
    return {sys.labels, from_normalized(Cn, z.s)};
}

Matrix propagator(const LinearLangevinSystem& sys, double t) {
    const Normalized z = normalize(sys);
    const auto Phi = discrete_propagator(z.M, Matrix::Zero(z.M.rows(), z.M.cols()), t).first;
    return z.s.asDiagonal() * Phi * z.s.cwiseInverse().asDiagonal();
}

SpectrumResult noise_spectrum(const LinearLangevinSystem& sys, const CovarianceMatrix& C0,
                              std::size_t i, std::size_t j, const std::vector<double>& omega_grid) {
    sys.validate();
    const auto n = static_cast<Eigen::Index>(sys.dim());
    if (i >= sys.dim() || j >= sys.dim()) throw ValidationError("noise_spectrum: index out of range");
    if (C0.entries.rows() != n) throw ValidationError("noise_spectrum: initial covariance has wrong size");

    const Normalized z = normalize(sys);
    const double tol = stability_tolerance(z.M);
    Eigen::EigenSolver<Matrix> es(z.M, false);
    double rate_scale = 0;
    int stable = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const cplx lam = es.eigenvalues()(k);
        if (lam.real() > tol)
            throw SingularSystemError("noise_spectrum: drift eigenvalue " + describe(lam) + " has positive real part");
        if (lam.real() < -tol) {
            rate_scale += std::abs(lam);
            ++stable;
        }
    }
    rate_scale = stable > 0 ? rate_scale / stable : 1.0;

    // conserved subspace: exact null space of the drift
    Eigen::JacobiSVD<Matrix> svd(z.M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    Eigen::Index null_dim = 0;
    for (Eigen::Index k = 0; k < n; ++k)
        if (sv(k) <= tol) ++null_dim;
    Matrix P0 = Matrix::Zero(n, n);
    if (null_dim > 0) {
        const Matrix V0 = svd.matrixV().rightCols(null_dim);
        const Matrix L0 = svd.matrixU().rightCols(null_dim);
        const Matrix G = L0.transpose() * V0;
        Eigen::FullPivLU<Matrix> glu(G);
        if (!glu.isInvertible())
            throw SingularSystemError("noise_spectrum: drift is not diagonalizable on its null space");
        P0 = V0 * glu.inverse() * L0.transpose();
        if ((P0 * z.D).norm() > 1e-8 * std::max(z.D.norm(), 1e-300))
            throw SingularSystemError("noise_spectrum: conserved mode receives diffusion; no stationary spectrum");
    }

    const Matrix Mp = z.M - rate_scale * P0;
    const Matrix D = z.D;
    const double si = z.s(static_cast<Eigen::Index>(i));
    const double sj = z.s(static_cast<Eigen::Index>(j));
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);

    SpectrumResult out;
    const Matrix C0n = to_normalized(C0.entries, z.s);
    out.delta_weight = 2 * std::numbers::pi * si * sj * (P0 * C0n * P0.transpose())(ii, jj);
    out.smooth = [Mp, D, si, sj, ii, jj](double w) {
        const auto m = Mp.rows();
        const CMatrix I = CMatrix::Identity(m, m);
        const CMatrix left = (cplx(0, -w) * I - Mp.cast<cplx>()).partialPivLu().solve(I);
        const CMatrix right = (cplx(0, w) * I - Mp.transpose().cast<cplx>()).partialPivLu().solve(I);
        const cplx val = (left.row(ii) * D.cast<cplx>() * right.col(jj))(0, 0);
        return si * sj * val.real();
    };
    out.omega = omega_grid;
    out.values.reserve(omega_grid.size());
    for (double w : omega_grid) out.values.push_back(out.smooth(w));
    return out;
}

double output_correlation(const LinearLangevinSystem& sys, const CovarianceMatrix& C0, const Vector& h,
                          const Vector& d, double t, double t_prime) {
    if (h.size() != static_cast<Eigen::Index>(sys.dim()) || d.size() != sys.input_coupling.cols())
        throw ValidationError("output_correlation: output map has wrong size");
    if (t < t_prime) std::swap(t, t_prime);
    const Matrix Ct = evolve_covariance(sys, C0, t_prime).entries;
    const Matrix Phi = propagator(sys, t - t_prime);
    const Vector cross = Ct * h + sys.input_coupling * sys.input_spectrum * d;
    return h.dot(Phi * cross);
}

double quadrature_variance(const CovarianceMatrix& C, std::string_view label, double normalization) {
    if (!(normalization > 0)) throw ValidationError("normalization must be > 0");
    const auto k = static_cast<Eigen::Index>(C.index_of(label));
    return C.entries(k, k) / normalization;
}

std::pair<double, double> best_quadrature_variance(const CovarianceMatrix& C, std::string_view x_label,
                                                   std::string_view y_label, double normalization) {
    if (!(normalization > 0)) throw ValidationError("normalization must be > 0");
    const auto ix = static_cast<Eigen::Index>(C.index_of(x_label));
    const auto iy = static_cast<Eigen::Index>(C.index_of(y_label));
    const double a = C.entries(ix, ix) / normalization;
    const double b = C.entries(iy, iy) / normalization;
    const double c = 0.5 * (C.entries(ix, iy) + C.entries(iy, ix)) / normalization;
    const double lam = 0.5 * (a + b) - std::hypot(0.5 * (a - b), c);
    double theta = 0.5 * std::atan2(-2 * c, b - a);
    if (theta <= -std::numbers::pi / 2) theta += std::numbers::pi;
    return {theta, lam};
}

double min_normalized_eigenvalue(const CovarianceMatrix& C, const Vector& reference) {
    const Vector s = reference.array().sqrt();
    Matrix Cn = to_normalized(C.entries, s);
    Cn = 0.5 * (Cn + Cn.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(Cn, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace spinxfer
