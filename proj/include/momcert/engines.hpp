#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "momcert/problems.hpp"

namespace momcert {

enum class Method { GD, HB, AG, ASPG };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

/// A rate rho together with the 2x2 matrix P~ certifying it.
struct Certificate {
  double rho;
  Eigen::Matrix2d p_tilde;
};

struct MomentumParams {
  double alpha = 0.0;
  double beta = 0.0;
  Method method = Method::AG;
  std::optional<Certificate> certified;

  /// Throws InvalidInput unless alpha > 0, beta >= 0 and GD has beta = 0.
  void validate() const;
};

/// xi_k = (x_k, x_{k-1}).
struct StateVec {
  Vec x_curr;
  Vec x_prev;

  static StateVec at(const Vec& x) { return {x, x}; }
  Eigen::Index dim() const { return x_curr.size(); }
  Vec stacked() const;
};

/// One iteration. `eps` is the gradient noise of this step (zero for the
/// deterministic methods); ASPG needs `set`.
StateVec step(Method method, const StateVec& xi, const Objective& obj,
              const MomentumParams& params, const Vec& eps,
              const ConstraintSet* set = nullptr);

struct TrajectoryRecord {
  std::vector<StateVec> states;  // empty unless record_states
  std::vector<double> subopt;    // f(x_k) - f*, k = 0..k_max
  std::vector<double> x_gap;     // ||x_k - x*||
  StateVec final_state;
  std::uint64_t seed = 0;
  Method method = Method::AG;
  MomentumParams params;
  std::string objective_id;
  std::optional<long> diverged_at;  // set only when RunOptions::throw_on_divergence is off

  std::string to_csv() const;
};

inline constexpr double kDivergenceThreshold = 1e12;

struct RunOptions {
  const ConstraintSet* set = nullptr;
  bool record_states = true;
  std::string objective_id;
  bool throw_on_divergence = true;  // otherwise stop early and set diverged_at
};

/// Runs k_max steps drawing noise from CounterRng(seed). Throws DivergedError
/// when an iterate is non-finite or exceeds kDivergenceThreshold in norm,
/// unless opts.throw_on_divergence is off.
TrajectoryRecord run_path(Method method, const StateVec& xi0, const Objective& obj,
                          const MomentumParams& params, const NoiseOracle& noise,
                          long k_max, std::uint64_t seed, const RunOptions& opts = {});

struct ClosedLoop {
  Mat matrix;                           // 2d x 2d, acting on xi - xi*
  std::vector<Eigen::Matrix2d> blocks;  // T_i in ascending eigenvalue order
};

Eigen::Matrix2d closed_loop_block(Method method, double lambda, double alpha, double beta);

/// A_Q with xi_{k+1} - xi* = A_Q (xi_k - xi*) + (-alpha eps; 0).
ClosedLoop closed_loop_matrix(Method method, const QuadraticObjective& obj,
                              const MomentumParams& params);

}  // namespace momcert
