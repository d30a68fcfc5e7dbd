#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>
#include "json.hpp"

#include "momcert/mat_core.hpp"
#include "momcert/rng.hpp"

namespace momcert {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A member of S_{mu,L}: L-smooth and mu-strongly convex.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  virtual double mu() const = 0;
  virtual double ell() const = 0;
  virtual const Vec& minimizer() const = 0;
  virtual double f_star() const = 0;
  virtual nlohmann::json to_json() const = 0;

  double kappa() const { return ell() / mu(); }
};

/// f(x) = 1/2 x^T Q x + a^T x + b with Q held through its spectrum, so Q x is
/// evaluated as V diag(lambda) V^T x.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Spectrum<double> spectrum, Vec a, double b);

  static QuadraticObjective diagonal(const Vec& eigenvalues);
  static QuadraticObjective diagonal(const Vec& eigenvalues, Vec a, double b);
  static QuadraticObjective from_matrix(const Mat& q, Vec a, double b);

  Eigen::Index dim() const override { return spectrum_.size(); }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  double mu() const override { return spectrum_.min(); }
  double ell() const override { return spectrum_.max(); }
  const Vec& minimizer() const override { return minimizer_; }
  double f_star() const override { return f_star_; }
  nlohmann::json to_json() const override;

  const Spectrum<double>& spectrum() const { return spectrum_; }
  const Vec& linear() const { return a_; }
  double offset() const { return b_; }
  Mat hessian() const { return spectrum_.reconstruct(); }
  Vec hessian_apply(const Vec& x) const;

 private:
  Spectrum<double> spectrum_;
  Vec a_;
  double b_;
  Vec minimizer_;
  double f_star_;
};

struct QuadraticEval {
  double value;
  Vec gradient;
  Vec minimizer;
  double f_star;
};

QuadraticEval quadratic_eval(const QuadraticObjective& obj, const Vec& x);

/// f(x) = mu/2 ||x||^2 + sum_i softplus(a_i^T x), declared smoothness
/// L = mu + ||A^T A|| / 4.
class SoftplusObjective final : public Objective {
 public:
  SoftplusObjective(Eigen::Index dim, double mu, Mat rows);

  Eigen::Index dim() const override { return dim_; }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  double mu() const override { return mu_; }
  double ell() const override { return ell_; }
  const Vec& minimizer() const override { return minimizer_; }
  double f_star() const override { return f_star_; }
  nlohmann::json to_json() const override;

  const Mat& rows() const { return rows_; }

 private:
  Mat hessian(const Vec& x) const;
  void solve_minimizer();

  Eigen::Index dim_;
  double mu_;
  Mat rows_;
  double ell_;
  Vec minimizer_;
  double f_star_ = 0.0;
};

SoftplusObjective make_test_objective(Eigen::Index dim, double mu,
                                      const Mat& data_matrix);

/// Parses {"type":"quadratic",...} or {"type":"softplus",...}.
std::unique_ptr<Objective> objective_from_json(const nlohmann::json& j);

enum class NoiseKind { Gaussian, ScaledRademacher, UniformBall };

/// Zero-mean i.i.d. gradient noise with E||eps||^2 = sigma_sq. The Rademacher
/// and ball kinds take sigma as the total scale (sigma_sq = sigma^2).
class NoiseOracle {
 public:
  static NoiseOracle gaussian(const Mat& covariance);
  /// N(0, sigma^2 I_d), so E||eps||^2 = d sigma^2.
  static NoiseOracle isotropic_gaussian(Eigen::Index dim, double sigma);
  static NoiseOracle scaled_rademacher(Eigen::Index dim, double sigma);
  static NoiseOracle uniform_ball(Eigen::Index dim, double sigma);

  NoiseKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  double sigma_sq() const { return sigma_sq_; }
  /// E[eps eps^T]; isotropic sigma^2/d I for the non-Gaussian kinds.
  const Mat& covariance() const { return covariance_; }
  bool is_zero() const { return sigma_sq_ == 0.0; }

  Vec sample(CounterRng& rng) const;

 private:
  NoiseOracle(NoiseKind kind, Eigen::Index dim, double sigma_sq, Mat cov);

  NoiseKind kind_;
  Eigen::Index dim_;
  double sigma_sq_;
  Mat covariance_;
  Mat cov_sqrt_;
};

Vec noise_sample(const NoiseOracle& oracle, CounterRng& rng);

enum class SetKind { EuclideanBall, Box };

class ConstraintSet {
 public:
  static ConstraintSet ball(Vec center, double radius);
  static ConstraintSet box(Vec lower, Vec upper);

  SetKind kind() const { return kind_; }
  Eigen::Index dim() const { return a_.size(); }
  /// Center for balls, lower corner for boxes.
  const Vec& first() const { return a_; }
  /// Upper corner for boxes; unused for balls.
  const Vec& second() const { return b_; }
  double radius() const { return radius_; }
  double diameter() const;
  bool contains(const Vec& x, double tol = 0.0) const;
  Vec project(const Vec& x) const;

  nlohmann::json to_json() const;
  static ConstraintSet from_json(const nlohmann::json& j);

 private:
  ConstraintSet(SetKind kind, Vec a, Vec b, double radius)
      : kind_(kind), a_(std::move(a)), b_(std::move(b)), radius_(radius) {}

  SetKind kind_;
  Vec a_;
  Vec b_;
  double radius_;
};

inline Vec project(const ConstraintSet& set, const Vec& x) { return set.project(x); }

/// Certified upper bound on max_{x in C} ||Q x + a||, via
/// ||Q(x - x*)|| <= L ||x - x*|| and the farthest point of C from x*.
double grad_sup_bound(const QuadraticObjective& obj, const ConstraintSet& set);

}  // namespace momcert
