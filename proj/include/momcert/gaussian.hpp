#pragma once

#include <optional>
#include <string>
#include <vector>

#include "momcert/certificates.hpp"

namespace momcert {

/// V_P(xi) = (xi - xi*)^T P (xi - xi*) + f(x) - f*, with P of size 2d x 2d.
double lyapunov_value(const Objective& obj, const Mat& P, const StateVec& xi);

/// Law N(mean, cov) of xi_k = (x_k, x_{k-1}).
struct GaussianChainState {
  Vec mean;
  Mat cov;
  long k = 0;

  static GaussianChainState point_mass(const StateVec& xi);
};

/// diag-block(alpha^2 Sigma, 0).
Mat noise_injection(double alpha, const Mat& sigma);

GaussianChainState propagate_gaussian(Method method, const QuadraticObjective& obj,
                                      const MomentumParams& params, const Mat& sigma,
                                      GaussianChainState state, long steps);

struct StationaryReport {
  Method method = Method::AG;
  Mat X;                     // covariance of xi_inf - xi*
  double trace = 0.0;        // Tr(X)
  std::string solver;        // "vectorized" or "per-eigenvalue"
  bool isotropic = false;    // Sigma = c^2 I; the closed forms below are set only then
  double c_sq = 0.0;
  std::optional<double> trace_closed_form;  // published per-eigenvalue formula
  std::vector<double> per_eigenvalue_terms;
  std::optional<double> trace_block_form;   // exact 2x2-block formula
  std::vector<double> per_eigenvalue_block_terms;
  std::optional<double> V_prefactor;
};

/// Published closed-form trace term for one eigenvalue (c = 1):
///   HB: 2 alpha (1+beta) / ((1-beta) lambda (2 + 2beta - alpha lambda))
///   AG: alpha / (lambda (1 - beta (1 - alpha lambda)))
///   GD: 2 alpha / (lambda (2 - alpha lambda))
double closed_form_trace_term(Method method, double lambda, double alpha, double beta);

/// Exact trace of the stationary 2x2 block for one eigenvalue (c = 1).
double block_trace_term(Method method, double lambda, double alpha, double beta);

/// Solves X = A_Q X A_Q^T + diag-block(alpha^2 Sigma, 0). When Sigma is
/// diagonal in Q's eigenbasis and 2d > 40 the per-eigenvalue 2x2 path is
/// used; otherwise the dense vectorized solve.
StationaryReport stationary_cov(Method method, const QuadraticObjective& obj,
                                const MomentumParams& params, const Mat& sigma);

/// E||xi0 - xi*||^2 for the start (exact for point masses, mean offset plus
/// Tr(cov) for Gaussian starts), plus alpha^2 ||Sigma|| / (1 - rho^2).
double v_prefactor(const GaussianChainState& start, const Vec& xi_star, double alpha,
                   const Mat& sigma, double rho);

/// (L/2) Tr(X) + V C_k^2 rho^(2k).
double subopt_bound_quadratic(long k, double ell, const StationaryReport& report, double V,
                              double c_k, double rho);

/// (L/2) (Tr(X) + V C_k^2 rho^(2k)). This is what bounding E f(x_k) - f* by
/// (L/2) E||xi_k - xi*||^2 yields; the form above omits L/2 on the transient
/// term and undershoots by up to that factor when L > 2.
double subopt_bound_quadratic_scaled(long k, double ell, const StationaryReport& report,
                                     double V, double c_k, double rho);

/// E f(x_k) - f* for a Gaussian chain: 1/2 Tr(Q C_xx) + 1/2 (m - x*)^T Q (m - x*).
double expected_subopt(const QuadraticObjective& obj, const GaussianChainState& state);

}  // namespace momcert
