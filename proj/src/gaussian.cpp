#include "momcert/gaussian.hpp"

#include <cmath>

namespace momcert {

namespace {

void require_sigma_shape(const Mat& sigma, Eigen::Index d, const char* where) {
  if (sigma.rows() != d || sigma.cols() != d)
    throw Error(ErrorKind::InvalidInput, std::string(where) + ": Sigma has wrong shape");
}

// Stationary variance of the first coordinate for T = [[a, b], [1, 0]] driven
// by q on the (1,1) entry: X = [[x, y], [y, x]] with y = a x / (1 - b).
double block_variance(double a, double b, double q) {
  return q * (1.0 - b) / ((1.0 + b) * ((1.0 - b) * (1.0 - b) - a * a));
}

}  // namespace

double lyapunov_value(const Objective& obj, const Mat& P, const StateVec& xi) {
  const Eigen::Index d = obj.dim();
  if (P.rows() != 2 * d || P.cols() != 2 * d)
    throw Error(ErrorKind::InvalidInput, "lyapunov_value: P must be 2d x 2d");
  if (xi.dim() != d) throw Error(ErrorKind::InvalidInput, "lyapunov_value: dimension mismatch");
  const Vec off = xi.stacked() - StateVec::at(obj.minimizer()).stacked();
  return off.dot(P * off) + obj.value(xi.x_curr) - obj.f_star();
}

GaussianChainState GaussianChainState::point_mass(const StateVec& xi) {
  const Eigen::Index n = 2 * xi.dim();
  return {xi.stacked(), Mat::Zero(n, n), 0};
}

Mat noise_injection(double alpha, const Mat& sigma) {
  const Eigen::Index d = sigma.rows();
  Mat q = Mat::Zero(2 * d, 2 * d);
  q.topLeftCorner(d, d) = alpha * alpha * sigma;
  return q;
}

GaussianChainState propagate_gaussian(Method method, const QuadraticObjective& obj,
                                      const MomentumParams& params, const Mat& sigma,
                                      GaussianChainState state, long steps) {
  const Eigen::Index d = obj.dim();
  require_sigma_shape(sigma, d, "propagate_gaussian");
  if (state.mean.size() != 2 * d || state.cov.rows() != 2 * d || state.cov.cols() != 2 * d)
    throw Error(ErrorKind::InvalidInput, "propagate_gaussian: state has wrong shape");
  if (steps < 0) throw Error(ErrorKind::InvalidInput, "propagate_gaussian: steps must be >= 0");
  const Mat a = closed_loop_matrix(method, obj, params).matrix;
  const Mat q = noise_injection(params.alpha, detail::checked_symmetric(sigma, "propagate_gaussian"));
  const Vec star = StateVec::at(obj.minimizer()).stacked();
  Vec off = state.mean - star;
  for (long s = 0; s < steps; ++s) {
    off = (a * off).eval();
    state.cov = (a * state.cov * a.transpose() + q).eval();
    state.cov = (state.cov + state.cov.transpose()) / 2.0;
  }
  state.mean = star + off;
  state.k += steps;
  return state;
}

double closed_form_trace_term(Method method, double lambda, double alpha, double beta) {
  switch (method) {
    case Method::HB:
      return 2.0 * alpha * (1.0 + beta) /
             ((1.0 - beta) * lambda * (2.0 + 2.0 * beta - alpha * lambda));
    case Method::AG: return alpha / (lambda * (1.0 - beta * (1.0 - alpha * lambda)));
    case Method::GD: return 2.0 * alpha / (lambda * (2.0 - alpha * lambda));
    case Method::ASPG: break;
  }
  throw Error(ErrorKind::Unsupported, "closed-form trace: projection is nonlinear");
}

double block_trace_term(Method method, double lambda, double alpha, double beta) {
  const Eigen::Matrix2d t = closed_loop_block(method, lambda, alpha, beta);
  return 2.0 * block_variance(t(0, 0), t(0, 1), alpha * alpha);
}

StationaryReport stationary_cov(Method method, const QuadraticObjective& obj,
                                const MomentumParams& params, const Mat& sigma) {
  const Eigen::Index d = obj.dim();
  require_sigma_shape(sigma, d, "stationary_cov");
  const Mat sig = detail::checked_symmetric(sigma, "stationary_cov");
  const ClosedLoop cl = closed_loop_matrix(method, obj, params);
  const Mat& v = obj.spectrum().eigenvectors;
  const Vec& lam = obj.spectrum().eigenvalues;

  StationaryReport rep;
  rep.method = method;

  const Mat rotated = v.transpose() * sig * v;
  const double sig_scale = std::max(detail::max_abs(sig), 1e-300);
  const Mat off_diag = rotated - Mat(rotated.diagonal().asDiagonal());
  const bool commutes = detail::max_abs(off_diag) <= 1e-12 * sig_scale;

  if (commutes && 2 * d > 40) {
    rep.solver = "per-eigenvalue";
    Mat blocks = Mat::Zero(2 * d, 2 * d);  // in (v_i (+) v_i) coordinates
    for (Eigen::Index i = 0; i < d; ++i) {
      const Eigen::Matrix2d& t = cl.blocks[static_cast<std::size_t>(i)];
      if (spectral_radius(t) >= 1.0 - 1e-10)
        throw Error(ErrorKind::Unstable, "stationary_cov: closed loop is not stable");
      Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
      q(0, 0) = params.alpha * params.alpha * rotated(i, i);
      const Eigen::Matrix2d x = solve_discrete_lyapunov_2x2(t, q);
      blocks(i, i) = x(0, 0);
      blocks(i, d + i) = blocks(d + i, i) = x(0, 1);
      blocks(d + i, d + i) = x(1, 1);
    }
    Mat w = Mat::Zero(2 * d, 2 * d);
    w.topLeftCorner(d, d) = v;
    w.bottomRightCorner(d, d) = v;
    rep.X = w * blocks * w.transpose();
    rep.X = (rep.X + rep.X.transpose()) / 2.0;
  } else {
    rep.solver = "vectorized";
    rep.X = solve_discrete_lyapunov(cl.matrix, noise_injection(params.alpha, sig));
  }
  rep.trace = rep.X.trace();

  const double c_sq = sig.trace() / static_cast<double>(d);
  rep.isotropic = detail::max_abs(Mat(sig - c_sq * Mat::Identity(d, d))) <=
                  1e-12 * std::max(std::abs(c_sq), 1e-300);
  if (rep.isotropic) {
    rep.c_sq = c_sq;
    double closed = 0.0;
    double block = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double tc = c_sq * closed_form_trace_term(method, lam(i), params.alpha, params.beta);
      const double tb = c_sq * block_trace_term(method, lam(i), params.alpha, params.beta);
      rep.per_eigenvalue_terms.push_back(tc);
      rep.per_eigenvalue_block_terms.push_back(tb);
      closed += tc;
      block += tb;
    }
    rep.trace_closed_form = closed;
    rep.trace_block_form = block;
  }
  return rep;
}

double v_prefactor(const GaussianChainState& start, const Vec& xi_star, double alpha,
                   const Mat& sigma, double rho) {
  if (start.mean.size() != xi_star.size())
    throw Error(ErrorKind::InvalidInput, "v_prefactor: dimension mismatch");
  if (!(rho >= 0.0 && rho < 1.0))
    throw Error(ErrorKind::InvalidInput, "v_prefactor: rho must lie in [0, 1)");
  const double start_term = (start.mean - xi_star).squaredNorm() + start.cov.trace();
  const double sig_norm = sigma.size() == 0 ? 0.0 : spectral_norm(sigma);
  return start_term + alpha * alpha * sig_norm / (1.0 - rho * rho);
}

double subopt_bound_quadratic(long k, double ell, const StationaryReport& report, double V,
                              double c_k, double rho) {
  if (k < 0) throw Error(ErrorKind::InvalidInput, "subopt_bound_quadratic: k must be >= 0");
  return ell / 2.0 * report.trace + V * c_k * c_k * std::pow(rho, 2.0 * static_cast<double>(k));
}

double subopt_bound_quadratic_scaled(long k, double ell, const StationaryReport& report,
                                     double V, double c_k, double rho) {
  if (k < 0) throw Error(ErrorKind::InvalidInput, "subopt_bound_quadratic: k must be >= 0");
  return ell / 2.0 *
         (report.trace + V * c_k * c_k * std::pow(rho, 2.0 * static_cast<double>(k)));
}

double expected_subopt(const QuadraticObjective& obj, const GaussianChainState& state) {
  const Eigen::Index d = obj.dim();
  const Mat q = obj.hessian();
  const Vec m = state.mean.head(d) - obj.minimizer();
  const Mat cxx = state.cov.topLeftCorner(d, d);
  return 0.5 * (q.cwiseProduct(cxx)).sum() + 0.5 * m.dot(obj.hessian_apply(m));
}

}  // namespace momcert
