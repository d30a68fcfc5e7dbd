#include "momcert/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "momcert/io.hpp"

namespace momcert {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool is_pd(const Mat& m) {
  if (detail::max_abs(m) == 0.0) return false;
  const auto spec = sym_eig(m);
  return spec.min() > 1e-12 * spec.max();
}

void require_psd(const Mat& m, const char* where) {
  if (m.size() == 0 || detail::max_abs(m) == 0.0) return;
  const auto spec = sym_eig(m);
  if (spec.min() < -1e-10 * std::max(std::abs(spec.max()), 1.0))
    throw Error(ErrorKind::NotPSD, std::string(where) + ": covariance is not PSD");
}

double bures_textbook(const Mat& c1, const Mat& c2) {
  const Mat r = psd_sqrt(c1);
  const Mat mid = r * c2 * r;
  const double v = c1.trace() + c2.trace() - 2.0 * psd_sqrt((mid + mid.transpose()) / 2.0).trace();
  return std::max(v, 0.0);
}

// Bures^2 between T c T and T (c + d) T.
double bures_mapped(const Mat& c, const Mat& d, const Mat& t) {
  const Mat cm = t * c * t;
  const Mat dm = t * d * t;
  const Mat c2m = cm + dm;
  if (detail::max_abs(cm) == 0.0) return std::max(c2m.trace(), 0.0);
  if (detail::max_abs(dm) == 0.0) return 0.0;
  if (is_pd(cm)) return bures_sq_offset(cm, dm);
  if (is_pd(c2m)) return bures_sq_offset(c2m, -dm);
  return bures_textbook(cm, c2m);
}

}  // namespace

WeightedNorm build_weighted_norm(const Eigen::Matrix2d& p_tilde, const QuadraticObjective& obj) {
  const auto pt = max_eig_and_psd(p_tilde);
  if (pt.min_eigenvalue < -1e-12 * std::max(std::abs(pt.max_eigenvalue), 1.0))
    throw Error(ErrorKind::NotPSD, "build_weighted_norm: P~ is not PSD");
  if (p_tilde(1, 1) == 0.0)
    throw Error(ErrorKind::DegenerateWeight, "build_weighted_norm: P~(2,2) = 0");
  const Eigen::Index d = obj.dim();
  WeightedNorm w;
  w.S = kron(Mat(p_tilde), Mat::Identity(d, d));
  w.S.topLeftCorner(d, d) += obj.hessian() / 2.0;
  w.S = (w.S + w.S.transpose()) / 2.0;
  if (!max_eig_and_psd(w.S, 0.0).is_pos_definite)
    throw Error(ErrorKind::Degenerate,
                "build_weighted_norm: internal consistency, S is not positive definite");
  w.sqrt_S = psd_sqrt(w.S);
  return w;
}

double bures_sq_offset(const Mat& C, const Mat& D) {
  const Eigen::Index n = C.rows();
  if (C.cols() != n || D.rows() != n || D.cols() != n)
    throw Error(ErrorKind::InvalidInput, "bures_sq_offset: dimension mismatch");
  const auto spec = sym_eig(C);
  if (!(spec.min() > 0.0)) throw Error(ErrorKind::NotPSD, "bures_sq_offset: C must be PD");
  const Vec& lam = spec.eigenvalues;
  const Mat& u = spec.eigenvectors;

  // In C's eigenbasis, sqrt(C^1/2 (C + D) C^1/2) = Lambda + Y with
  // Lambda Y + Y Lambda + Y^2 = E := Lambda^1/2 D~ Lambda^1/2, and
  // Bures^2 = Tr(D) - 2 Tr(Y) = Tr(Lambda^-1 Y^2), a sum of squares.
  Mat dt = u.transpose() * D * u;
  dt = (dt + dt.transpose()) / 2.0;
  const Vec root = lam.cwiseSqrt();
  const Mat e = root.asDiagonal() * dt * root.asDiagonal();
  const Mat big_lam = lam.asDiagonal();

  Mat y(n, n);
  if (detail::max_abs(e) <= 1e-2 * spec.max() * spec.max()) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) y(i, j) = e(i, j) / (lam(i) + lam(j));
  } else {
    // C + D may be singular, so judge rounding against ||C||^2, not ||C + D||.
    const Mat sq = big_lam * big_lam + e;
    const auto ss = sym_eig(Mat((sq + sq.transpose()) / 2.0));
    const double scale = spec.max() * spec.max();
    if (ss.min() < -1e-8 * scale) throw Error(ErrorKind::NotPSD, "bures_sq_offset: C + D is not PSD");
    y = ss.apply([scale](double x) { return x > 1e-15 * scale ? std::sqrt(x) : 0.0; }) - big_lam;
  }

  auto residual = [&](const Mat& yy) -> Mat {
    return e - (big_lam * yy + yy * big_lam + yy * yy);
  };
  Mat r = residual(y);
  double r_norm = r.norm();
  const double target = 4.0 * kEps * std::max(e.norm(), 1e-300);
  for (int it = 0; it < 60 && r_norm > target; ++it) {
    // Newton step: (Lambda + Y) Z + Z (Lambda + Y) = R.
    const Mat m = big_lam + (y + y.transpose()) / 2.0;
    const auto ms = sym_eig(m);
    const Mat& w = ms.eigenvectors;
    Mat z = w.transpose() * r * w;
    bool ok = true;
    for (Eigen::Index i = 0; i < n && ok; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double s = ms.eigenvalues(i) + ms.eigenvalues(j);
        if (!(s > 1e-14 * spec.max())) {
          ok = false;
          break;
        }
        z(i, j) /= s;
      }
    if (!ok) break;
    Mat y_next = y + w * z * w.transpose();
    y_next = (y_next + y_next.transpose()) / 2.0;
    const Mat r_next = residual(y_next);
    const double next_norm = r_next.norm();
    if (!(next_norm < r_norm)) break;
    y = y_next;
    r = r_next;
    r_norm = next_norm;
  }

  double out = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) out += y.row(i).squaredNorm() / lam(i);
  return out;
}

double bures_sq(const Mat& c1, const Mat& c2) {
  if (c1.rows() != c2.rows() || c1.cols() != c2.cols())
    throw Error(ErrorKind::InvalidInput, "bures_sq: dimension mismatch");
  require_psd(c1, "bures_sq");
  require_psd(c2, "bures_sq");
  return bures_mapped(c1, c2 - c1, Mat::Identity(c1.rows(), c1.rows()));
}

double w2_sq_gaussian(const GaussianMeasure& g1, const GaussianMeasure& g2,
                      const WeightedNorm* weight) {
  const Eigen::Index n = g1.mean.size();
  if (g2.mean.size() != n || g1.cov.rows() != n || g1.cov.cols() != n || g2.cov.rows() != n ||
      g2.cov.cols() != n)
    throw Error(ErrorKind::InvalidInput, "w2_gaussian: dimension mismatch");
  if (weight && weight->S.rows() != n)
    throw Error(ErrorKind::InvalidInput, "w2_gaussian: weight has wrong dimension");
  require_psd(g1.cov, "w2_gaussian");
  require_psd(g2.cov, "w2_gaussian");
  const Vec dm = g1.mean - g2.mean;
  const double mean_term = weight ? dm.dot(weight->S * dm) : dm.squaredNorm();
  const Mat t = weight ? weight->sqrt_S : Mat(Mat::Identity(n, n));
  return mean_term + bures_mapped(g1.cov, g2.cov - g1.cov, t);
}

double w2_gaussian(const GaussianMeasure& g1, const GaussianMeasure& g2,
                   const WeightedNorm* weight) {
  return std::sqrt(w2_sq_gaussian(g1, g2, weight));
}

double wp_empirical_1d(std::vector<double> xs, std::vector<double> ys, double p) {
  if (xs.size() != ys.size())
    throw Error(ErrorKind::InvalidInput, "wp_empirical_1d: sample counts differ");
  if (xs.empty()) throw Error(ErrorKind::InvalidInput, "wp_empirical_1d: empty samples");
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidInput, "wp_empirical_1d: p must be >= 1");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) acc += std::pow(std::abs(xs[i] - ys[i]), p);
  return std::pow(acc / static_cast<double>(xs.size()), 1.0 / p);
}

C0Pair c0_constant(const Eigen::Matrix2d& p_tilde, double mu, double psi) {
  if (!(psi > 0.0)) throw Error(ErrorKind::InvalidInput, "c0_constant: psi must be > 0");
  Eigen::Matrix2d m = p_tilde;
  m(0, 0) += mu / 2.0;
  const auto spec = sym_eig(m);
  const double floor = 1e-14 * std::max(std::abs(spec.max()), std::abs(spec.min()));
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double v = spec.eigenvalues(i);
    if (v > floor) return {std::min(v * psi, 1.0), v};
  }
  throw Error(ErrorKind::Degenerate, "c0_constant: no positive eigenvalue");
}

double compact_wp_bound(double d_psi_value, double D_C, double p) {
  if (!(d_psi_value >= 0.0))
    throw Error(ErrorKind::InvalidInput, "compact_wp_bound: d_psi must be >= 0");
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidInput, "compact_wp_bound: p must be >= 1");
  if (!(D_C >= 0.0)) throw Error(ErrorKind::InvalidInput, "compact_wp_bound: D_C must be >= 0");
  return std::sqrt(2.0) * D_C * std::pow(d_psi_value, 1.0 / p);
}

std::string ContractionCurve::to_csv() const {
  std::ostringstream out;
  out << "k,w2_sq,rho_pow_k,ratio\n";
  for (const auto& p : points)
    out << p.k << ',' << format_double(p.w2_sq) << ',' << format_double(p.rho_pow_k) << ','
        << format_double(p.ratio) << '\n';
  return out.str();
}

ContractionCurve contraction_curve(Method method, const QuadraticObjective& obj,
                                   const MomentumParams& params, const Mat& sigma,
                                   const GaussianChainState& start, long k_max, double rho,
                                   const WeightedNorm* weight) {
  const Eigen::Index n = 2 * obj.dim();
  if (k_max < 0) throw Error(ErrorKind::InvalidInput, "contraction_curve: k_max must be >= 0");
  if (!(rho >= 0.0 && rho <= 1.0))
    throw Error(ErrorKind::InvalidInput, "contraction_curve: rho must lie in [0, 1]");
  if (start.mean.size() != n || start.cov.rows() != n || start.cov.cols() != n)
    throw Error(ErrorKind::InvalidInput, "contraction_curve: start has wrong shape");
  if (weight && weight->S.rows() != n)
    throw Error(ErrorKind::InvalidInput, "contraction_curve: weight has wrong dimension");
  require_psd(start.cov, "contraction_curve");

  const StationaryReport rep = stationary_cov(method, obj, params, sigma);
  const Mat a = closed_loop_matrix(method, obj, params).matrix;
  const Vec star = StateVec::at(obj.minimizer()).stacked();
  const Mat t = weight ? weight->sqrt_S : Mat(Mat::Identity(n, n));

  // C_k - X obeys Delta_{k+1} = A Delta_k A^T exactly.
  Vec off = start.mean - star;
  Mat delta = start.cov - rep.X;

  ContractionCurve curve;
  curve.rho = rho;
  double rho_k = 1.0;
  for (long k = 0; k <= k_max; ++k) {
    const double mean_term = weight ? off.dot(weight->S * off) : off.squaredNorm();
    const double w2 = mean_term + bures_mapped(rep.X, delta, t);
    if (k == 0) curve.w2_sq_0 = w2;
    const double w0 = curve.w2_sq_0;
    double ratio;
    if (w0 > 0.0)
      ratio = w2 / (rho_k * w0);
    else
      ratio = w2 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    curve.points.push_back({k, w2, rho_k, ratio});
    if (k >= 1) {
      curve.max_ratio = std::max(curve.max_ratio, ratio);
      if (w2 > rho_k * w0 * (1.0 + 1e-9)) curve.squared_holds = false;
      if (std::sqrt(w2) > rho_k * std::sqrt(w0) * (1.0 + 1e-9)) curve.unsquared_holds = false;
    }
    off = (a * off).eval();
    delta = (a * delta * a.transpose()).eval();
    delta = (delta + delta.transpose()) / 2.0;
    rho_k *= rho;
  }
  return curve;
}

}  // namespace momcert
