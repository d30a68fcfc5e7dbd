#include "momcert/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace momcert {

namespace {

Spectrum<double> sorted_spectrum(Spectrum<double> s) {
  const Eigen::Index n = s.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(), [&s](Eigen::Index i, Eigen::Index j) {
    return s.eigenvalues(i) < s.eigenvalues(j);
  });
  Spectrum<double> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = s.eigenvalues(order[k]);
    out.eigenvectors.col(k) = s.eigenvectors.col(order[k]);
  }
  return out;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vec json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> std_vec(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

// ---------------------------------------------------------------- quadratic

QuadraticObjective::QuadraticObjective(Spectrum<double> spectrum, Vec a, double b)
    : spectrum_(sorted_spectrum(std::move(spectrum))), a_(std::move(a)), b_(b) {
  const Eigen::Index d = spectrum_.size();
  if (d == 0 || spectrum_.eigenvectors.rows() != d || spectrum_.eigenvectors.cols() != d)
    throw Error(ErrorKind::InvalidInput, "QuadraticObjective: bad spectrum shape");
  if (a_.size() == 0) a_ = Vec::Zero(d);
  if (a_.size() != d)
    throw Error(ErrorKind::InvalidInput, "QuadraticObjective: a has wrong length");
  detail::require_finite(spectrum_.eigenvalues, "QuadraticObjective");
  detail::require_finite(a_, "QuadraticObjective");
  if (!std::isfinite(b_))
    throw Error(ErrorKind::InvalidInput, "QuadraticObjective: b is not finite");
  if (spectrum_.min() <= 0.0)
    throw Error(ErrorKind::InvalidInput, "QuadraticObjective: Q must be positive definite");

  const Vec coeffs = spectrum_.eigenvectors.transpose() * a_;
  minimizer_ = -(spectrum_.eigenvectors * coeffs.cwiseQuotient(spectrum_.eigenvalues));
  f_star_ = b_ - 0.5 * coeffs.dot(coeffs.cwiseQuotient(spectrum_.eigenvalues));
}

QuadraticObjective QuadraticObjective::diagonal(const Vec& eigenvalues) {
  return diagonal(eigenvalues, Vec::Zero(eigenvalues.size()), 0.0);
}

QuadraticObjective QuadraticObjective::diagonal(const Vec& eigenvalues, Vec a, double b) {
  Spectrum<double> s;
  s.eigenvalues = eigenvalues;
  s.eigenvectors = Mat::Identity(eigenvalues.size(), eigenvalues.size());
  return QuadraticObjective(std::move(s), std::move(a), b);
}

QuadraticObjective QuadraticObjective::from_matrix(const Mat& q, Vec a, double b) {
  return QuadraticObjective(sym_eig(q), std::move(a), b);
}

Vec QuadraticObjective::hessian_apply(const Vec& x) const {
  const Vec c = spectrum_.eigenvectors.transpose() * x;
  return spectrum_.eigenvectors * spectrum_.eigenvalues.cwiseProduct(c);
}

double QuadraticObjective::value(const Vec& x) const {
  if (x.size() != dim()) throw Error(ErrorKind::InvalidInput, "value: dimension mismatch");
  return 0.5 * x.dot(hessian_apply(x)) + a_.dot(x) + b_;
}

Vec QuadraticObjective::gradient(const Vec& x) const {
  if (x.size() != dim()) throw Error(ErrorKind::InvalidInput, "gradient: dimension mismatch");
  return hessian_apply(x) + a_;
}

nlohmann::json QuadraticObjective::to_json() const {
  nlohmann::json j;
  j["type"] = "quadratic";
  j["eigenvalues"] = std_vec(spectrum_.eigenvalues);
  if (!spectrum_.eigenvectors.isIdentity(0.0)) {
    nlohmann::json cols = nlohmann::json::array();
    for (Eigen::Index k = 0; k < dim(); ++k)
      cols.push_back(std_vec(spectrum_.eigenvectors.col(k)));
    j["eigenvectors"] = cols;
  }
  j["a"] = std_vec(a_);
  j["b"] = b_;
  return j;
}

QuadraticEval quadratic_eval(const QuadraticObjective& obj, const Vec& x) {
  return {obj.value(x), obj.gradient(x), obj.minimizer(), obj.f_star()};
}

// ----------------------------------------------------------------- softplus

SoftplusObjective::SoftplusObjective(Eigen::Index dim, double mu, Mat rows)
    : dim_(dim), mu_(mu), rows_(std::move(rows)) {
  if (dim_ < 1) throw Error(ErrorKind::InvalidInput, "SoftplusObjective: dim must be >= 1");
  if (!(mu_ > 0.0) || !std::isfinite(mu_))
    throw Error(ErrorKind::InvalidInput, "SoftplusObjective: mu must be positive");
  if (rows_.size() == 0) rows_.resize(0, dim_);
  if (rows_.cols() != dim_)
    throw Error(ErrorKind::InvalidInput, "SoftplusObjective: rows have wrong width");
  detail::require_finite(rows_, "SoftplusObjective");
  const Mat gram = rows_.transpose() * rows_;
  ell_ = mu_ + (rows_.rows() > 0 ? sym_eig(gram).max() : 0.0) / 4.0;
  solve_minimizer();
}

double SoftplusObjective::value(const Vec& x) const {
  if (x.size() != dim_) throw Error(ErrorKind::InvalidInput, "value: dimension mismatch");
  double v = 0.5 * mu_ * x.squaredNorm();
  const Vec z = rows_ * x;
  for (Eigen::Index i = 0; i < z.size(); ++i) v += softplus(z(i));
  return v;
}

Vec SoftplusObjective::gradient(const Vec& x) const {
  if (x.size() != dim_) throw Error(ErrorKind::InvalidInput, "gradient: dimension mismatch");
  const Vec z = rows_ * x;
  const Vec s = z.unaryExpr([](double t) { return sigmoid(t); });
  return mu_ * x + rows_.transpose() * s;
}

Mat SoftplusObjective::hessian(const Vec& x) const {
  const Vec z = rows_ * x;
  const Vec w = z.unaryExpr([](double t) {
    const double s = sigmoid(t);
    return s * (1.0 - s);
  });
  return mu_ * Mat::Identity(dim_, dim_) + rows_.transpose() * w.asDiagonal() * rows_;
}

// Newton's method; the objective is mu-strongly convex so the Hessian is
// always invertible and a halving line search guarantees descent.
void SoftplusObjective::solve_minimizer() {
  Vec x = Vec::Zero(dim_);
  for (int it = 0; it < 100; ++it) {
    const Vec g = gradient(x);
    if (g.norm() <= 1e-14 * std::max(1.0, ell_)) break;
    const Vec step = hessian(x).llt().solve(g);
    double t = 1.0;
    const double f0 = value(x);
    while (t > 1e-12 && value(x - t * step) > f0 - 0.25 * t * g.dot(step)) t *= 0.5;
    x -= t * step;
    if (t * step.norm() <= 1e-16 * std::max(1.0, x.norm())) break;
  }
  minimizer_ = x;
  f_star_ = value(x);
}

nlohmann::json SoftplusObjective::to_json() const {
  nlohmann::json j;
  j["type"] = "softplus";
  j["mu"] = mu_;
  j["dim"] = dim_;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < rows_.rows(); ++i)
    rows.push_back(std_vec(rows_.row(i).transpose()));
  j["rows"] = rows;
  return j;
}

SoftplusObjective make_test_objective(Eigen::Index dim, double mu, const Mat& data_matrix) {
  return SoftplusObjective(dim, mu, data_matrix);
}

std::unique_ptr<Objective> objective_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "quadratic") {
    Vec a = j.contains("a") ? json_vec(j.at("a")) : Vec();
    const double b = j.value("b", 0.0);
    if (j.contains("matrix")) {
      const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
      Mat q(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size())
          throw Error(ErrorKind::InvalidInput, "objective: matrix must be square");
        for (std::size_t c = 0; c < rows.size(); ++c)
          q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
      return std::make_unique<QuadraticObjective>(
          QuadraticObjective::from_matrix(q, std::move(a), b));
    }
    Spectrum<double> s;
    s.eigenvalues = json_vec(j.at("eigenvalues"));
    const Eigen::Index d = s.eigenvalues.size();
    s.eigenvectors = Mat::Identity(d, d);
    if (j.contains("eigenvectors")) {
      const auto cols = j.at("eigenvectors").get<std::vector<std::vector<double>>>();
      if (static_cast<Eigen::Index>(cols.size()) != d)
        throw Error(ErrorKind::InvalidInput, "objective: eigenvectors shape");
      for (Eigen::Index k = 0; k < d; ++k) {
        if (static_cast<Eigen::Index>(cols[k].size()) != d)
          throw Error(ErrorKind::InvalidInput, "objective: eigenvectors shape");
        for (Eigen::Index i = 0; i < d; ++i) s.eigenvectors(i, k) = cols[k][i];
      }
      const double orth = (s.eigenvectors.transpose() * s.eigenvectors - Mat::Identity(d, d))
                              .cwiseAbs()
                              .maxCoeff();
      if (orth > 1e-10)
        throw Error(ErrorKind::InvalidInput, "objective: eigenvectors are not orthonormal");
    }
    return std::make_unique<QuadraticObjective>(std::move(s), std::move(a), b);
  }
  if (type == "softplus") {
    const double mu = j.at("mu").get<double>();
    const auto rows = j.value("rows", std::vector<std::vector<double>>{});
    Eigen::Index d = j.contains("dim") ? j.at("dim").get<Eigen::Index>()
                     : rows.empty()    ? 0
                                       : static_cast<Eigen::Index>(rows[0].size());
    Mat a(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<Eigen::Index>(rows[r].size()) != d)
        throw Error(ErrorKind::InvalidInput, "objective: ragged rows");
      for (Eigen::Index c = 0; c < d; ++c) a(static_cast<Eigen::Index>(r), c) = rows[r][c];
    }
    return std::make_unique<SoftplusObjective>(d, mu, std::move(a));
  }
  throw Error(ErrorKind::InvalidInput, "objective: unknown type '" + type + "'");
}

// -------------------------------------------------------------------- noise

NoiseOracle::NoiseOracle(NoiseKind kind, Eigen::Index dim, double sigma_sq, Mat cov)
    : kind_(kind), dim_(dim), sigma_sq_(sigma_sq), covariance_(std::move(cov)) {
  if (dim_ < 1) throw Error(ErrorKind::InvalidInput, "NoiseOracle: dim must be >= 1");
  if (kind_ == NoiseKind::Gaussian) cov_sqrt_ = psd_sqrt(covariance_);
}

NoiseOracle NoiseOracle::gaussian(const Mat& covariance) {
  const Mat sym = detail::checked_symmetric(covariance, "NoiseOracle::gaussian");
  const auto spec = sym_eig(sym);
  const double scale = std::max(std::abs(spec.min()), std::abs(spec.max()));
  if (spec.min() < -1e-10 * std::max(scale, 1.0))
    throw Error(ErrorKind::NotPSD, "NoiseOracle::gaussian: covariance is not PSD");
  return NoiseOracle(NoiseKind::Gaussian, sym.rows(), sym.trace(), sym);
}

NoiseOracle NoiseOracle::isotropic_gaussian(Eigen::Index dim, double sigma) {
  if (dim < 1) throw Error(ErrorKind::InvalidInput, "NoiseOracle: dim must be >= 1");
  return gaussian(Mat::Identity(dim, dim) * (sigma * sigma));
}

NoiseOracle NoiseOracle::scaled_rademacher(Eigen::Index dim, double sigma) {
  if (dim < 1 || !(sigma >= 0.0))
    throw Error(ErrorKind::InvalidInput, "NoiseOracle: need dim >= 1 and sigma >= 0");
  return NoiseOracle(NoiseKind::ScaledRademacher, dim, sigma * sigma,
                     Mat::Identity(dim, dim) * (sigma * sigma / static_cast<double>(dim)));
}

NoiseOracle NoiseOracle::uniform_ball(Eigen::Index dim, double sigma) {
  if (dim < 1 || !(sigma >= 0.0))
    throw Error(ErrorKind::InvalidInput, "NoiseOracle: need dim >= 1 and sigma >= 0");
  return NoiseOracle(NoiseKind::UniformBall, dim, sigma * sigma,
                     Mat::Identity(dim, dim) * (sigma * sigma / static_cast<double>(dim)));
}

Vec NoiseOracle::sample(CounterRng& rng) const {
  if (is_zero()) return Vec::Zero(dim_);
  const double sigma = std::sqrt(sigma_sq_);
  const double d = static_cast<double>(dim_);
  switch (kind_) {
    case NoiseKind::Gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      Vec z(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) z(i) = normal(rng);
      return cov_sqrt_ * z;
    }
    case NoiseKind::ScaledRademacher: {
      const double h = sigma / std::sqrt(d);
      Vec z(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) z(i) = (rng() >> 63) ? h : -h;
      return z;
    }
    case NoiseKind::UniformBall: {
      std::normal_distribution<double> normal(0.0, 1.0);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      Vec z(dim_);
      double n2 = 0.0;
      do {
        for (Eigen::Index i = 0; i < dim_; ++i) z(i) = normal(rng);
        n2 = z.squaredNorm();
      } while (n2 == 0.0);
      const double radius = sigma * std::sqrt((d + 2.0) / d);
      return z * (radius * std::pow(unif(rng), 1.0 / d) / std::sqrt(n2));
    }
  }
  return Vec::Zero(dim_);
}

Vec noise_sample(const NoiseOracle& oracle, CounterRng& rng) { return oracle.sample(rng); }

// ----------------------------------------------------------- constraint sets

ConstraintSet ConstraintSet::ball(Vec center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius) || center.size() == 0)
    throw Error(ErrorKind::InvalidSet, "ball: radius must be positive");
  detail::require_finite(center, "ball");
  return ConstraintSet(SetKind::EuclideanBall, std::move(center), Vec(), radius);
}

ConstraintSet ConstraintSet::box(Vec lower, Vec upper) {
  if (lower.size() == 0 || lower.size() != upper.size())
    throw Error(ErrorKind::InvalidSet, "box: bounds must be non-empty and of equal length");
  detail::require_finite(lower, "box");
  detail::require_finite(upper, "box");
  if ((upper - lower).minCoeff() < 0.0 || (upper - lower).norm() <= 0.0)
    throw Error(ErrorKind::InvalidSet, "box: need lower <= upper and positive diameter");
  return ConstraintSet(SetKind::Box, std::move(lower), std::move(upper), 0.0);
}

double ConstraintSet::diameter() const {
  return kind_ == SetKind::EuclideanBall ? 2.0 * radius_ : (b_ - a_).norm();
}

bool ConstraintSet::contains(const Vec& x, double tol) const {
  if (x.size() != dim()) throw Error(ErrorKind::InvalidInput, "contains: dimension mismatch");
  if (kind_ == SetKind::EuclideanBall) return (x - a_).norm() <= radius_ + tol;
  return (x - a_).minCoeff() >= -tol && (b_ - x).minCoeff() >= -tol;
}

Vec ConstraintSet::project(const Vec& x) const {
  if (x.size() != dim()) throw Error(ErrorKind::InvalidInput, "project: dimension mismatch");
  if (kind_ == SetKind::Box) return x.cwiseMax(a_).cwiseMin(b_);
  const Vec off = x - a_;
  const double n = off.norm();
  if (n <= radius_) return x;
  return a_ + off * (radius_ / n);
}

nlohmann::json ConstraintSet::to_json() const {
  if (kind_ == SetKind::EuclideanBall)
    return {{"type", "ball"}, {"center", std_vec(a_)}, {"radius", radius_}};
  return {{"type", "box"}, {"lower", std_vec(a_)}, {"upper", std_vec(b_)}};
}

ConstraintSet ConstraintSet::from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "ball") return ball(json_vec(j.at("center")), j.at("radius").get<double>());
  if (type == "box") return box(json_vec(j.at("lower")), json_vec(j.at("upper")));
  throw Error(ErrorKind::InvalidSet, "constraint set: unknown type '" + type + "'");
}

double grad_sup_bound(const QuadraticObjective& obj, const ConstraintSet& set) {
  if (set.dim() != obj.dim())
    throw Error(ErrorKind::InvalidInput, "grad_sup_bound: dimension mismatch");
  const Vec& xs = obj.minimizer();
  if (set.kind() == SetKind::EuclideanBall)
    return obj.ell() * ((set.first() - xs).norm() + set.radius());
  // Farthest corner from x*: per coordinate the farther of the two faces.
  const Vec far = (set.first() - xs).cwiseAbs().cwiseMax((set.second() - xs).cwiseAbs());
  return obj.ell() * far.norm();
}

}  // namespace momcert
