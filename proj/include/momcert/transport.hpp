#pragma once

#include <string>
#include <vector>

#include "momcert/gaussian.hpp"

namespace momcert {

/// ||z||_S = sqrt(z^T S z) with S positive definite.
struct WeightedNorm {
  Mat S;
  Mat sqrt_S;

  double norm(const Vec& z) const { return std::sqrt(z.dot(S * z)); }
};

/// S = P~ (x) I_d + diag-block(Q/2, 0). Throws DegenerateWeight when
/// P~(2,2) = 0, NotPSD when P~ is not PSD, and Degenerate if S fails the
/// positive-definiteness check anyway.
WeightedNorm build_weighted_norm(const Eigen::Matrix2d& p_tilde, const QuadraticObjective& obj);

struct GaussianMeasure {
  Vec mean;
  Mat cov;

  static GaussianMeasure from_state(const GaussianChainState& s) { return {s.mean, s.cov}; }
};

/// Squared Bures distance between C and C + D, computed from the offset D so
/// that tiny offsets keep their relative accuracy. C must be PD.
double bures_sq_offset(const Mat& C, const Mat& D);

/// Squared Bures distance between two PSD matrices.
double bures_sq(const Mat& c1, const Mat& c2);

/// Closed-form W2 between Gaussians; with a weight, in the geometry of ||.||_S.
double w2_gaussian(const GaussianMeasure& g1, const GaussianMeasure& g2,
                   const WeightedNorm* weight = nullptr);
double w2_sq_gaussian(const GaussianMeasure& g1, const GaussianMeasure& g2,
                      const WeightedNorm* weight = nullptr);

/// W_p between two equal-size 1-D samples via the sorted coupling.
double wp_empirical_1d(std::vector<double> xs, std::vector<double> ys, double p);

struct C0Pair {
  double c0;
  double c_hat0;
};

/// c^_0 is the smallest positive eigenvalue of P~ + diag(mu/2, 0) (the 2d x 2d
/// matrix is its Kronecker product with I_d); c_0 = min(c^_0 psi, 1).
C0Pair c0_constant(const Eigen::Matrix2d& p_tilde, double mu, double psi);

/// sqrt(2) D_C d_psi^(1/p): W_p on the product set C x C from d_psi.
double compact_wp_bound(double d_psi_value, double D_C, double p);

struct ContractionPoint {
  long k;
  double w2_sq;
  double rho_pow_k;
  double ratio;  // w2_sq / (rho^k w2_sq_0)
};

struct ContractionCurve {
  std::vector<ContractionPoint> points;
  double rho = 0.0;
  double w2_sq_0 = 0.0;
  double max_ratio = 0.0;  // over k >= 1
  bool squared_holds = true;    // w2_sq_k <= rho^k w2_sq_0 (1 + 1e-9) for all k >= 1
  bool unsquared_holds = true;  // w2_k <= rho^k w2_0 (1 + 1e-9), reported only

  /// k,w2_sq,rho_pow_k,ratio
  std::string to_csv() const;
};

/// Exact W2^2 between the law of xi_k and the stationary law for k = 0..k_max,
/// by propagating the mean offset and the covariance offset C_k - X through
/// A_Q. rho is the rate the ratios are measured against.
ContractionCurve contraction_curve(Method method, const QuadraticObjective& obj,
                                   const MomentumParams& params, const Mat& sigma,
                                   const GaussianChainState& start, long k_max, double rho,
                                   const WeightedNorm* weight = nullptr);

}  // namespace momcert
