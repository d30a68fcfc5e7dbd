#include "momcert/engines.hpp"

#include <cmath>
#include <sstream>

#include "momcert/io.hpp"

namespace momcert {

const char* to_string(Method m) {
  switch (m) {
    case Method::GD: return "gd";
    case Method::HB: return "hb";
    case Method::AG: return "ag";
    case Method::ASPG: return "aspg";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "gd") return Method::GD;
  if (s == "hb" || s == "shb") return Method::HB;
  if (s == "ag" || s == "asg") return Method::AG;
  if (s == "aspg") return Method::ASPG;
  throw Error(ErrorKind::InvalidInput, "unknown method '" + s + "'");
}

void MomentumParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw Error(ErrorKind::InvalidInput, "params: alpha must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw Error(ErrorKind::InvalidInput, "params: beta must be non-negative");
  if (method == Method::GD && beta != 0.0)
    throw Error(ErrorKind::InvalidInput, "params: GD requires beta = 0");
}

Vec StateVec::stacked() const {
  Vec out(2 * dim());
  out << x_curr, x_prev;
  return out;
}

StateVec step(Method method, const StateVec& xi, const Objective& obj,
              const MomentumParams& params, const Vec& eps, const ConstraintSet* set) {
  const Eigen::Index d = obj.dim();
  if (xi.x_curr.size() != d || xi.x_prev.size() != d || eps.size() != d)
    throw Error(ErrorKind::InvalidInput, "step: dimension mismatch");
  const double a = params.alpha;
  const double b = params.beta;

  switch (method) {
    case Method::GD:
      return {xi.x_curr - a * (obj.gradient(xi.x_curr) + eps), xi.x_curr};
    case Method::HB:
      return {xi.x_curr - a * (obj.gradient(xi.x_curr) + eps) + b * (xi.x_curr - xi.x_prev),
              xi.x_curr};
    case Method::AG: {
      const Vec y = (1.0 + b) * xi.x_curr - b * xi.x_prev;
      return {y - a * (obj.gradient(y) + eps), xi.x_curr};
    }
    case Method::ASPG: {
      if (set == nullptr)
        throw Error(ErrorKind::InvalidInput, "step: ASPG requires a constraint set");
      if (set->dim() != d) throw Error(ErrorKind::InvalidInput, "step: set dimension mismatch");
      const Vec y = (1.0 + b) * xi.x_curr - b * xi.x_prev;
      return {set->project(y - a * (obj.gradient(y) + eps)), xi.x_curr};
    }
  }
  throw Error(ErrorKind::InvalidInput, "step: unknown method");
}

TrajectoryRecord run_path(Method method, const StateVec& xi0, const Objective& obj,
                          const MomentumParams& params, const NoiseOracle& noise,
                          long k_max, std::uint64_t seed, const RunOptions& opts) {
  if (k_max < 0) throw Error(ErrorKind::InvalidInput, "run_path: k_max must be >= 0");
  if (noise.dim() != obj.dim())
    throw Error(ErrorKind::InvalidInput, "run_path: noise dimension mismatch");
  params.validate();

  TrajectoryRecord rec;
  rec.seed = seed;
  rec.method = method;
  rec.params = params;
  rec.objective_id = opts.objective_id;
  const auto n = static_cast<std::size_t>(k_max) + 1;
  rec.subopt.reserve(n);
  rec.x_gap.reserve(n);
  if (opts.record_states) rec.states.reserve(n);

  const Vec& xs = obj.minimizer();
  const double fs = obj.f_star();
  CounterRng rng(seed);
  StateVec xi = xi0;
  for (long k = 0;; ++k) {
    if (!xi.x_curr.allFinite() || xi.x_curr.norm() > kDivergenceThreshold) {
      if (opts.throw_on_divergence)
        throw DivergedError(k, "run_path: iterate diverged at step " + std::to_string(k));
      rec.diverged_at = k;
      break;
    }
    rec.subopt.push_back(obj.value(xi.x_curr) - fs);
    rec.x_gap.push_back((xi.x_curr - xs).norm());
    if (opts.record_states) rec.states.push_back(xi);
    if (k == k_max) break;
    xi = step(method, xi, obj, params, noise.sample(rng), opts.set);
  }
  rec.final_state = std::move(xi);
  return rec;
}

std::string TrajectoryRecord::to_csv() const {
  std::ostringstream out;
  out << "k,f_gap,x_norm_gap\n";
  for (std::size_t k = 0; k < subopt.size(); ++k)
    out << k << ',' << format_double(subopt[k]) << ',' << format_double(x_gap[k]) << '\n';
  return out.str();
}

Eigen::Matrix2d closed_loop_block(Method method, double lambda, double alpha, double beta) {
  Eigen::Matrix2d t;
  const double s = 1.0 - alpha * lambda;
  switch (method) {
    case Method::GD: t << s, 0.0, 1.0, 0.0; break;
    case Method::HB: t << 1.0 + beta - alpha * lambda, -beta, 1.0, 0.0; break;
    case Method::AG: t << (1.0 + beta) * s, -beta * s, 1.0, 0.0; break;
    case Method::ASPG:
      throw Error(ErrorKind::Unsupported, "closed loop: projection is nonlinear");
  }
  return t;
}

ClosedLoop closed_loop_matrix(Method method, const QuadraticObjective& obj,
                              const MomentumParams& params) {
  if (method == Method::ASPG)
    throw Error(ErrorKind::Unsupported, "closed loop: projection is nonlinear");
  const Eigen::Index d = obj.dim();
  const double a = params.alpha;
  const double b = params.beta;
  const Mat q = obj.hessian();
  const Mat id = Mat::Identity(d, d);

  ClosedLoop out;
  out.matrix = Mat::Zero(2 * d, 2 * d);
  out.matrix.bottomLeftCorner(d, d) = id;
  switch (method) {
    case Method::GD: out.matrix.topLeftCorner(d, d) = id - a * q; break;
    case Method::HB:
      out.matrix.topLeftCorner(d, d) = (1.0 + b) * id - a * q;
      out.matrix.topRightCorner(d, d) = -b * id;
      break;
    case Method::AG:
      out.matrix.topLeftCorner(d, d) = (1.0 + b) * (id - a * q);
      out.matrix.topRightCorner(d, d) = -b * (id - a * q);
      break;
    case Method::ASPG: break;
  }
  out.blocks.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i)
    out.blocks.push_back(closed_loop_block(method, obj.spectrum().eigenvalues(i), a, b));
  return out;
}

}  // namespace momcert
