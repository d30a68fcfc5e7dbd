#pragma once

#include <limits>
#include <optional>
#include <string>

#include "momcert/engines.hpp"

namespace momcert {

enum class Preset { AG, AG_STAR, HB, AYBAT };

const char* to_string(Preset p);
Preset preset_from_string(const std::string& s);

/// A constant together with the formula it came from.
struct Constant {
  double value = 0.0;
  std::string provenance;

  operator double() const { return value; }
};

struct CertificatePair {
  Preset preset = Preset::AG;
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  double mu = 0.0;
  double ell = 0.0;
  std::optional<Eigen::Matrix2d> p_tilde;

  double kappa() const { return ell / mu; }
  /// Params for running the method the preset was designed for.
  MomentumParams params() const;
};

/// Throws KappaOne when mu == L and InvalidInput unless 0 < mu < L.
void require_certifiable(double mu, double ell);

/// The AG preset's rank-one P~ = u u^T, u = (sqrt(L/2), sqrt(mu/2) - sqrt(L/2)).
Eigen::Matrix2d p_tilde_ag(double mu, double ell);

CertificatePair preset_params(Preset preset, double mu, double ell, double aybat_alpha = 0.0);

/// The two 3x3 matrices X~_1 and X~_2 of the dissipation inequality.
Eigen::Matrix3d lmi_x1(double alpha, double beta, double mu, double ell);
Eigen::Matrix3d lmi_x2(double alpha, double beta, double mu, double ell);

Eigen::Matrix3d build_lmi(double alpha, double beta, double rho, double mu, double ell,
                          const Eigen::Matrix2d& p_tilde);
/// Throws NoCertificate when the pair carries no P~.
Eigen::Matrix3d build_lmi(const CertificatePair& cert);

struct LmiVerdict {
  bool feasible;
  double max_eigenvalue;
};

LmiVerdict verify_lmi(const CertificatePair& cert, double tol = 1e-8);

/// Best P~ found by a coarse grid over Cholesky factors of the PSD cone
/// followed by pattern-search refinement from the best grid points.
struct PTildeSearch {
  Eigen::Matrix2d p_tilde;
  double max_eigenvalue;
  bool feasible;
};

PTildeSearch search_p_tilde(double alpha, double beta, double rho, double mu, double ell,
                            double tol = 1e-8);

/// Smallest rho in [lo, hi] (to within rho_tol) for which search_p_tilde finds a
/// feasible P~. Returns nullopt when even rho = hi is not certified.
std::optional<CertificatePair> bisect_rate(double alpha, double beta, double mu, double ell,
                                           double lo = 0.0, double hi = 1.0 - 1e-9,
                                           double rho_tol = 1e-4);

/// C_k (HB) or C*_k (AG_STAR) for k >= 1; k = 0 throws OutOfDomain.
Constant prefactor_ck(Preset method, long k, double mu, double ell, const Vec& spectrum);

/// C_k rho^k with the k = 0 value fixed to 1.
double deterministic_factor(Preset method, long k, double mu, double ell, const Vec& spectrum);

struct DriftConstants {
  Constant gamma;
  Constant K;
};

DriftConstants drift_constants(const CertificatePair& cert, double sigma);

struct ErgodicityBudget {
  double eta = 0.0;
  double R = 0.0;
  double M = std::numeric_limits<double>::quiet_NaN();
  Constant K;
  Constant psi;
  Constant eta_bar;
  double gamma = 0.0;
  double slack = 0.0;  // 1/2 - rho/2 - K/R
};

/// Throws InfeasibleError (carrying the slack) when eta_bar <= 0.
ErgodicityBudget ergodicity_budget(double eta, double R, double rho, double K);

enum class NoiseVariant { UNCONSTRAINED, ASPG };

struct NoiseBudgetInputs {
  double R = 0.0;
  double mu = 0.0;
  double ell = 0.0;
  double D_C = 0.0;  // ASPG only
  double G_M = 0.0;  // ASPG only
};

Constant noise_budget(NoiseVariant variant, const NoiseBudgetInputs& in);

struct Minorization {
  Constant M;
  Constant R;
};

/// Closed-form (M, R) for N(0, Sigma) noise; Sigma must be PD with Sigma < L^2 I.
Minorization gaussian_minorization(double mu, double ell, const Mat& sigma);

struct AspgExtras {
  double mu = 0.0;
  double D_C = 0.0;
  double G_M = 0.0;
};

/// K~ in its closed form at alpha = 1/L with the built-in projected P.
Constant aspg_k_tilde_closed(double sigma, const AspgExtras& ex, double ell);

double subopt_bound(NoiseVariant variant, double V0, double kappa, double sigma, double ell,
                    long k, const AspgExtras& extras = {});

/// ||P|| for P = (mu/2) v v^T (x) I with v = (1 - sqrt(kappa), sqrt(kappa)).
double aspg_p_norm(double mu, double ell);

struct AspgInputs {
  double alpha = 0.0;
  double beta = 0.0;
  double p_norm = 0.0;
  double sigma = 0.0;
  double D_C = 0.0;
  double G_M = 0.0;
  double mu = 0.0;
  double ell = 0.0;
  double rho = 0.0;
  double R = 0.0;
  double eta = 0.0;
};

struct AspgBudget {
  Constant k_tilde;
  Constant eta_tilde;
  Constant psi_tilde;  // +inf when sigma = 0
  Constant a1;
  Constant b1;
  Constant sigma_max;
  bool feasible = false;  // eta_tilde > 0
};

AspgBudget aspg_constants(const AspgInputs& in);

struct RegularizationPlan {
  double epsilon = 0.0;
  double mu_eps = 0.0;
  double ell_eps = 0.0;
  double kappa_eps = 0.0;
  long k_required = 0;
  double k_tilde_eps = 0.0;
  bool noise_ok = false;
  double guaranteed_gap = std::numeric_limits<double>::infinity();
};

/// grad_sup is G_M for the regularised objective on C (0 if unknown, which
/// only matters when sigma > 0).
RegularizationPlan weakly_convex_plan(double epsilon, double ell, double D_C, double V0,
                                      double sigma, double grad_sup = 0.0);

}  // namespace momcert
