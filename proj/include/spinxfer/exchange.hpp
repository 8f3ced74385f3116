#pragma once

// Metastability-exchange collisions between metastable (2³S₁, levels 1..6) and
// ground (1¹S₀, levels 9 and 0) helium-3 atoms.
//
// Metastable levels in the hyperfine basis |F, m_F>:
//   1 = |3/2,-3/2>  2 = |3/2,-1/2>  3 = |3/2,1/2>  4 = |3/2,3/2>
//   5 = |1/2,-1/2>  6 = |1/2,1/2>
// Ground levels: 9 = m_I -1/2 (index 0), 0 = m_I +1/2 (index 1).
// Collective operators obey rho_kl = <S_lk>.

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "spinxfer/langevin.hpp"

namespace spinxfer {

// Row/column index of a metastable level (1..6) or ground level (9 or 0).
int metastable_index(int level);
int ground_index(int level);

struct DensityState {
    CMatrix rho_m = CMatrix::Zero(6, 6);
    CMatrix rho_g = CMatrix::Zero(2, 2);
    double n = 0;
    double N = 0;

    cplx& m(int k, int l) { return rho_m(metastable_index(k), metastable_index(l)); }
    cplx m(int k, int l) const { return rho_m(metastable_index(k), metastable_index(l)); }
    cplx& g(int a, int b) { return rho_g(ground_index(a), ground_index(b)); }
    cplx g(int a, int b) const { return rho_g(ground_index(a), ground_index(b)); }

    // rho_44 = n, rho_00 = N.
    static DensityState polarized(double n, double N);
    void validate(double tol = 1e-9) const;
};

struct ExchangeRates {
    double gamma_exc = 0;
    double gamma_m = 0;  // N·gamma_exc
    double gamma_f = 0;  // n·gamma_exc

    static ExchangeRates from(double gamma_exc, double n, double N);
};

// Clebsch–Gordan coefficient <j1 m1; j2 m2 | j m>; all arguments are doubled
// (2j, 2m) so half-integers stay exact.
double clebsch_gordan(int j1, int m1, int j2, int m2, int j, int m);

// Columns: hyperfine levels 1..6; rows: decoupled |m_J> ⊗ |m_I> with
// m_J = 1, 0, -1 and m_I = +1/2, -1/2 (row = 2·(1 − m_J) + (m_I < 0)).
Eigen::Matrix<double, 6, 6> hyperfine_basis();

// One collision for unit-trace one-body matrices: the ground atom leaves with the
// nuclear state of the metastable, the new metastable carries the old electronic
// state and the ground atom's nucleus.
std::pair<CMatrix, CMatrix> collision_update(const CMatrix& rho_g_at, const CMatrix& rho_m_at);

// Secular projection used by the rate equations: F=3/2 / F=1/2 coherences dropped.
bool secular(int k, int l);

DensityState me_rhs(const DensityState& state, const ExchangeRates& rates);

DensityState integrate_nonlinear(const DensityState& state0, const ExchangeRates& rates, double t_final,
                                 double tol = 1e-9);

struct ExchangeLinearization {
    std::vector<std::string> variables;  // S21, S32, S65, S43, I09
    CMatrix complex_drift;
    LinearLangevinSystem system;         // quadrature doubling
};

ExchangeLinearization linearize_exchange(double n, double N, double gamma_exc);

// Diffusion over the operators (S43, S34, I09, I90): entry (a,b) = D_{a,b†}.
struct OperatorDiffusion {
    std::array<std::string, 4> operators{"43", "34", "09", "90"};
    Eigen::Matrix4d D = Eigen::Matrix4d::Zero();
    double at(const std::string& a, const std::string& b) const;
    // Quadrature diffusion over (S43.x, S43.y, I09.x, I09.y).
    Eigen::Matrix4d quadrature() const;
};

OperatorDiffusion diffusion_exchange(double n, double gamma_m);

// Reduced exchange pair (S43, I09), Eqs. for the polarized linearization.
LinearLangevinSystem exchange_pair_system(double n, double N, double gamma_exc);
// Coherent metastable spin with a squeezed ground y-quadrature (e^{-2r}).
CovarianceMatrix exchange_initial_covariance(double n, double N, double r);

std::pair<double, double> exchange_steady_variances(double n, double N, double r);
std::pair<double, double> exchange_correlation_functions(double n, double N, double r);

struct ExchangeSpectra {
    SpectrumResult S_II;
    SpectrumResult S_SS;
    // (1/2π)∫ smooth dω in closed form
    double smooth_integral_II = 0;
    double smooth_integral_SS = 0;
};

ExchangeSpectra exchange_spectra(double n, double N, double r, double gamma_exc,
                                 const std::vector<double>& omega = {});

}  // namespace spinxfer
