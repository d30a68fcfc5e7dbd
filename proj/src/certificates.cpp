#include "momcert/certificates.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace momcert {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw Error(ErrorKind::InvalidInput, std::string(what) + " must be positive and finite");
}

void require_nonneg(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw Error(ErrorKind::InvalidInput, std::string(what) + " must be non-negative and finite");
}

double eta_bar_formula(double eta, double R, double rho, double K) {
  const double slack = 0.5 - rho / 2.0 - K / R;
  return std::min(eta / 2.0, slack * R * eta / (4.0 * K + R * eta));
}

// sqrt(kappa) terms of the projected certificate: (1 - sqrt(kappa))^2 + kappa.
double projected_shape(double kappa) {
  const double s = std::sqrt(kappa);
  return (1.0 - s) * (1.0 - s) + kappa;
}

}  // namespace

const char* to_string(Preset p) {
  switch (p) {
    case Preset::AG: return "ag";
    case Preset::AG_STAR: return "ag_star";
    case Preset::HB: return "hb";
    case Preset::AYBAT: return "aybat";
  }
  return "?";
}

Preset preset_from_string(const std::string& s) {
  if (s == "ag") return Preset::AG;
  if (s == "ag_star" || s == "ag*" || s == "agstar") return Preset::AG_STAR;
  if (s == "hb") return Preset::HB;
  if (s == "aybat") return Preset::AYBAT;
  throw Error(ErrorKind::InvalidInput, "unknown preset '" + s + "'");
}

MomentumParams CertificatePair::params() const {
  MomentumParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.method = preset == Preset::HB ? Method::HB : Method::AG;
  if (p_tilde) p.certified = Certificate{rho, *p_tilde};
  return p;
}

void require_certifiable(double mu, double ell) {
  require_positive(mu, "mu");
  require_positive(ell, "L");
  if (mu == ell) throw Error(ErrorKind::KappaOne, "certificates require mu < L (kappa = 1)");
  if (mu > ell) throw Error(ErrorKind::InvalidInput, "mu must not exceed L");
}

Eigen::Matrix2d p_tilde_ag(double mu, double ell) {
  const Eigen::Vector2d u(std::sqrt(ell / 2.0), std::sqrt(mu / 2.0) - std::sqrt(ell / 2.0));
  return u * u.transpose();
}

CertificatePair preset_params(Preset preset, double mu, double ell, double aybat_alpha) {
  require_certifiable(mu, ell);
  CertificatePair c;
  c.preset = preset;
  c.mu = mu;
  c.ell = ell;
  const double kappa = ell / mu;
  const double sk = std::sqrt(kappa);
  switch (preset) {
    case Preset::AG:
      c.alpha = 1.0 / ell;
      c.beta = (sk - 1.0) / (sk + 1.0);
      c.rho = 1.0 - 1.0 / sk;
      c.p_tilde = p_tilde_ag(mu, ell);
      break;
    case Preset::AG_STAR: {
      const double s3 = std::sqrt(3.0 * kappa + 1.0);
      c.alpha = 4.0 / (3.0 * ell + mu);
      c.beta = (s3 - 2.0) / (s3 + 2.0);
      c.rho = 1.0 - 2.0 / s3;
      break;
    }
    case Preset::HB: {
      const double r = (sk - 1.0) / (sk + 1.0);
      const double root_sum = std::sqrt(mu) + std::sqrt(ell);
      c.alpha = 4.0 / (root_sum * root_sum);
      c.beta = r * r;
      c.rho = r;
      break;
    }
    case Preset::AYBAT: {
      if (!(aybat_alpha > 0.0) || aybat_alpha > 1.0 / ell)
        throw Error(ErrorKind::InvalidInput, "aybat preset needs alpha in (0, 1/L]");
      const double q = std::sqrt(aybat_alpha * mu);
      c.alpha = aybat_alpha;
      c.beta = (1.0 - q) / (1.0 + q);
      c.rho = 1.0 - q;
      break;
    }
  }
  return c;
}

Eigen::Matrix3d lmi_x1(double alpha, double beta, double mu, double ell) {
  const double b2m = beta * beta * mu;
  const double c = alpha * (2.0 - ell * alpha);
  Eigen::Matrix3d x;
  x << b2m, -b2m, -beta,
      -b2m, b2m, beta,
      -beta, beta, c;
  return x / 2.0;
}

Eigen::Matrix3d lmi_x2(double alpha, double beta, double mu, double ell) {
  const double c = alpha * (2.0 - ell * alpha);
  Eigen::Matrix3d x;
  x << (1 + beta) * (1 + beta) * mu, -beta * (1 + beta) * mu, -(1 + beta),
      -beta * (1 + beta) * mu, beta * beta * mu, beta,
      -(1 + beta), beta, c;
  return x / 2.0;
}

Eigen::Matrix3d build_lmi(double alpha, double beta, double rho, double mu, double ell,
                          const Eigen::Matrix2d& p) {
  Eigen::Matrix2d a;
  a << 1.0 + beta, -beta, 1.0, 0.0;
  const Eigen::Vector2d b(-alpha, 0.0);
  Eigen::Matrix3d m;
  m.topLeftCorner<2, 2>() = a.transpose() * p * a - rho * p;
  m.topRightCorner<2, 1>() = a.transpose() * p * b;
  m.bottomLeftCorner<1, 2>() = b.transpose() * p * a;
  m(2, 2) = b.dot(p * b);
  m -= rho * lmi_x1(alpha, beta, mu, ell) + (1.0 - rho) * lmi_x2(alpha, beta, mu, ell);
  return (m + m.transpose()) / 2.0;
}

Eigen::Matrix3d build_lmi(const CertificatePair& cert) {
  if (!cert.p_tilde)
    throw Error(ErrorKind::NoCertificate, std::string("preset ") + to_string(cert.preset) +
                                              " carries no P~ matrix");
  return build_lmi(cert.alpha, cert.beta, cert.rho, cert.mu, cert.ell, *cert.p_tilde);
}

LmiVerdict verify_lmi(const CertificatePair& cert, double tol) {
  const auto r = max_eig_and_psd(build_lmi(cert), tol);
  return {r.is_neg_semidefinite, r.max_eigenvalue};
}

PTildeSearch search_p_tilde(double alpha, double beta, double rho, double mu, double ell,
                            double tol) {
  const double scale = std::sqrt(ell);
  auto make_p = [](const std::array<double, 3>& l) {
    Eigen::Matrix2d low;
    low << l[0], 0.0, l[1], l[2];
    return Eigen::Matrix2d(low * low.transpose());
  };
  auto objective = [&](const std::array<double, 3>& l) {
    return sym_eig(build_lmi(alpha, beta, rho, mu, ell, make_p(l))).max();
  };

  constexpr int kGrid = 13;
  std::vector<std::pair<double, std::array<double, 3>>> cands;
  cands.reserve(kGrid * kGrid * kGrid);
  for (int i = 0; i < kGrid; ++i)
    for (int j = 0; j < kGrid; ++j)
      for (int k = 0; k < kGrid; ++k) {
        const std::array<double, 3> l{scale * (-2.0 + 4.0 * i / (kGrid - 1)),
                                      scale * (-2.0 + 4.0 * j / (kGrid - 1)),
                                      scale * (2.0 * k / (kGrid - 1))};
        cands.emplace_back(objective(l), l);
      }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  double best_val = cands.front().first;
  std::array<double, 3> best = cands.front().second;
  const std::size_t starts = std::min<std::size_t>(6, cands.size());
  for (std::size_t s = 0; s < starts && best_val > tol; ++s) {
    auto cur = cands[s].second;
    double val = cands[s].first;
    double h = scale / 3.0;
    for (int it = 0; it < 4000 && h > 1e-12 * scale && val > tol; ++it) {
      bool improved = false;
      for (int c = 0; c < 3; ++c)
        for (double dir : {1.0, -1.0}) {
          auto trial = cur;
          trial[c] += dir * h;
          const double v = objective(trial);
          if (v < val) {
            val = v;
            cur = trial;
            improved = true;
          }
        }
      if (!improved) h /= 2.0;
    }
    if (val < best_val) {
      best_val = val;
      best = cur;
    }
  }
  return {make_p(best), best_val, best_val <= tol};
}

std::optional<CertificatePair> bisect_rate(double alpha, double beta, double mu, double ell,
                                           double lo, double hi, double rho_tol) {
  require_certifiable(mu, ell);
  if (!(lo >= 0.0) || !(hi < 1.0) || lo > hi)
    throw Error(ErrorKind::InvalidInput, "bisect_rate: need 0 <= lo <= hi < 1");
  auto top = search_p_tilde(alpha, beta, hi, mu, ell);
  if (!top.feasible) return std::nullopt;
  Eigen::Matrix2d best_p = top.p_tilde;
  double feasible_rho = hi;
  double infeasible_rho = lo;
  if (auto bottom = search_p_tilde(alpha, beta, lo, mu, ell); bottom.feasible) {
    feasible_rho = lo;
    best_p = bottom.p_tilde;
  }
  while (feasible_rho - infeasible_rho > rho_tol) {
    const double mid = 0.5 * (feasible_rho + infeasible_rho);
    auto r = search_p_tilde(alpha, beta, mid, mu, ell);
    if (r.feasible) {
      feasible_rho = mid;
      best_p = r.p_tilde;
    } else {
      infeasible_rho = mid;
    }
  }
  CertificatePair c;
  c.preset = Preset::AG;
  c.alpha = alpha;
  c.beta = beta;
  c.rho = feasible_rho;
  c.mu = mu;
  c.ell = ell;
  c.p_tilde = best_p;
  return c;
}

Constant prefactor_ck(Preset method, long k, double mu, double ell, const Vec& spectrum) {
  require_certifiable(mu, ell);
  if (k < 1) throw Error(ErrorKind::OutOfDomain, "prefactor_ck: the closed form needs k >= 1");
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const double lam = spectrum(i);
    if (!(lam >= mu * (1.0 - 1e-12)) || !(lam <= ell * (1.0 + 1e-12)))
      throw Error(ErrorKind::InvalidInput, "prefactor_ck: eigenvalue outside [mu, L]");
  }
  const double kd = static_cast<double>(k);
  const double ninf = -std::numeric_limits<double>::infinity();

  if (method == Preset::HB) {
    const double ratio = (ell + mu) / (ell - mu);
    const double linear = std::sqrt(4.0 * kd * kd * ratio * ratio + 2.0);
    double cbar = ninf;
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
      const double lam = spectrum(i);
      if (lam > mu && lam < ell)
        cbar = std::max(cbar, (mu + ell) / (2.0 * std::sqrt((lam - mu) * (ell - lam))));
    }
    return {std::max(cbar, linear),
            "heavy-ball prefactor max{Cbar, sqrt(4k^2((L+mu)/(L-mu))^2 + 2)}"};
  }
  if (method == Preset::AG_STAR) {
    const double kappa = ell / mu;
    const double s3 = std::sqrt(3.0 * kappa + 1.0);
    const double rho = 1.0 - 2.0 / s3;
    const double r2p1 = rho * rho + 1.0;
    const double linear = std::sqrt(kd * kd * r2p1 * r2p1 + 2.0 * rho * rho);
    const double knot = (3.0 * ell + mu) / 4.0;
    double ctilde = ninf;
    for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
      const double lam = spectrum(i);
      if (lam > mu && lam < ell && lam != knot)
        ctilde = std::max(ctilde, std::sqrt(mu * (3.0 * ell + mu)) /
                                      std::sqrt((lam - mu) * std::abs(3.0 * ell + mu - 4.0 * lam)));
    }
    const double cbar = ctilde == ninf ? ninf : (s3 + 2.0) / 2.0 * r2p1 * ctilde;
    return {std::max(cbar, linear),
            "AG* prefactor max{Cbar*, sqrt(k^2(rho*^2+1)^2 + 2 rho*^2)}"};
  }
  throw Error(ErrorKind::InvalidInput, "prefactor_ck: method must be hb or ag_star");
}

double deterministic_factor(Preset method, long k, double mu, double ell, const Vec& spectrum) {
  if (k == 0) return 1.0;
  const double rho = preset_params(method, mu, ell).rho;
  return prefactor_ck(method, k, mu, ell, spectrum).value * std::pow(rho, static_cast<double>(k));
}

DriftConstants drift_constants(const CertificatePair& cert, double sigma) {
  if (!cert.p_tilde)
    throw Error(ErrorKind::NoCertificate, "drift constants need a certified P~");
  require_nonneg(sigma, "sigma");
  const double p11 = (*cert.p_tilde)(0, 0);
  const double K = (cert.ell / 2.0 + p11) * cert.alpha * cert.alpha * sigma * sigma;
  return {{cert.rho, "drift rate gamma = rho"},
          {K, "drift offset (L/2 + P11) alpha^2 sigma^2"}};
}

ErgodicityBudget ergodicity_budget(double eta, double R, double rho, double K) {
  if (!(eta > 0.0 && eta < 1.0))
    throw Error(ErrorKind::InvalidInput, "ergodicity_budget: eta must lie in (0, 1)");
  require_positive(R, "R");
  require_positive(K, "K");
  if (!(rho >= 0.0 && rho < 1.0))
    throw Error(ErrorKind::InvalidInput, "ergodicity_budget: rho must lie in [0, 1)");
  ErgodicityBudget b;
  b.eta = eta;
  b.R = R;
  b.gamma = rho;
  b.K = {K, "drift offset K"};
  b.slack = 0.5 - rho / 2.0 - K / R;
  b.psi = {eta / (2.0 * K), "weight psi = eta / (2K)"};
  b.eta_bar = {eta_bar_formula(eta, R, rho, K),
               "contraction min{eta/2, (1/2 - rho/2 - K/R) R eta / (4K + R eta)}"};
  if (!(b.eta_bar.value > 0.0))
    throw InfeasibleError(b.slack, "ergodicity budget infeasible: 1/2 - rho/2 - K/R = " +
                                       std::to_string(b.slack));
  return b;
}

Constant noise_budget(NoiseVariant variant, const NoiseBudgetInputs& in) {
  require_certifiable(in.mu, in.ell);
  require_nonneg(in.R, "R");
  const double kappa = in.ell / in.mu;
  if (variant == NoiseVariant::UNCONSTRAINED)
    return {std::sqrt(in.R * in.ell / (4.0 * std::sqrt(kappa))),
            "noise budget sigma^2 <= R L / (4 sqrt(kappa))"};
  require_nonneg(in.D_C, "D_C");
  require_nonneg(in.G_M, "G_M");
  const double shape = projected_shape(kappa);
  const double a1 = (in.mu / 2.0 * shape + in.ell / 2.0) / (in.ell * in.ell);
  const double b1 = (in.D_C * in.mu * shape + in.G_M) / in.ell;
  return {(-b1 + std::sqrt(b1 * b1 + a1 * in.R / std::sqrt(kappa))) / (2.0 * a1),
          "projected noise budget: positive root of a1 s^2 + b1 s = R / (4 sqrt(kappa))"};
}

Minorization gaussian_minorization(double mu, double ell, const Mat& sigma) {
  require_certifiable(mu, ell);
  const auto spec = sym_eig(sigma);
  if (!(spec.min() > 0.0))
    throw Error(ErrorKind::NotPSD, "gaussian_minorization: Sigma must be positive definite");
  const double l2 = ell * ell;
  if (!(spec.max() < l2))
    throw Error(ErrorKind::NoiseTooLarge, "gaussian_minorization: need Sigma < L^2 I");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < spec.size(); ++i) logdet += std::log1p(-spec.eigenvalues(i) / l2);
  const double kappa = ell / mu;
  const double inner = std::log(1.0 - std::pow(kappa, -0.25)) + 0.5 * logdet;
  const double M = std::sqrt(-2.0 * inner);
  const double inv_norm = 1.0 / spec.min();
  const double root = -M + std::sqrt(M * M + std::log(ell / mu) / (2.0 * l2 * inv_norm));
  const double geo = 3.0 * std::sqrt(ell) - std::sqrt(mu);
  const double R = root * root * (ell - mu) * (ell - mu) / (8.0 * geo * geo * geo);
  return {{M, "Gaussian minorization radius M"}, {R, "Gaussian small-set level R"}};
}

double aspg_p_norm(double mu, double ell) {
  require_certifiable(mu, ell);
  return mu / 2.0 * projected_shape(ell / mu);
}

Constant aspg_k_tilde_closed(double sigma, const AspgExtras& ex, double ell) {
  require_certifiable(ex.mu, ell);
  require_nonneg(sigma, "sigma");
  const double shape = projected_shape(ell / ex.mu);
  const double v = (2.0 * sigma * ex.D_C * ell + sigma * sigma) / (2.0 * ell * ell) * ex.mu * shape +
                   sigma * ex.G_M / ell + sigma * sigma / (2.0 * ell);
  return {v, "projected noise offset at alpha = 1/L"};
}

double subopt_bound(NoiseVariant variant, double V0, double kappa, double sigma, double ell,
                    long k, const AspgExtras& extras) {
  require_nonneg(V0, "V0");
  require_nonneg(sigma, "sigma");
  require_positive(ell, "L");
  if (kappa == 1.0) throw Error(ErrorKind::KappaOne, "subopt_bound requires kappa > 1");
  if (!(kappa > 1.0)) throw Error(ErrorKind::InvalidInput, "subopt_bound: kappa must exceed 1");
  if (k < 0) throw Error(ErrorKind::InvalidInput, "subopt_bound: k must be >= 0");
  const double sk = std::sqrt(kappa);
  const double transient = V0 * std::pow(1.0 - 1.0 / sk, static_cast<double>(k));
  if (variant == NoiseVariant::UNCONSTRAINED) return transient + sk * sigma * sigma / ell;
  return transient + sk * aspg_k_tilde_closed(sigma, extras, ell).value;
}

AspgBudget aspg_constants(const AspgInputs& in) {
  require_positive(in.alpha, "alpha");
  require_nonneg(in.beta, "beta");
  require_nonneg(in.p_norm, "p_norm");
  require_nonneg(in.sigma, "sigma");
  require_nonneg(in.D_C, "D_C");
  require_nonneg(in.G_M, "G_M");
  require_positive(in.R, "R");
  if (!(in.eta > 0.0 && in.eta < 1.0))
    throw Error(ErrorKind::InvalidInput, "aspg_constants: eta must lie in (0, 1)");
  require_certifiable(in.mu, in.ell);

  AspgBudget b;
  const double as = in.alpha * in.sigma;
  const double kt = as * ((as + 2.0 * in.D_C) * in.p_norm + in.G_M + as * in.ell / 2.0);
  b.k_tilde = {kt, "projected drift offset alpha sigma((alpha sigma + 2 D_C)||P|| + G_M + alpha sigma L/2)"};
  b.eta_tilde = {eta_bar_formula(in.eta, in.R, in.rho, kt),
                 "projected contraction min{eta/2, (1/2 - rho/2 - K~/R) R eta / (4K~ + R eta)}"};
  b.psi_tilde = {kt > 0.0 ? in.eta / (2.0 * kt) : std::numeric_limits<double>::infinity(),
                 "projected weight eta / (2K~)"};
  const double shape = projected_shape(in.ell / in.mu);
  b.a1 = {(in.mu / 2.0 * shape + in.ell / 2.0) / (in.ell * in.ell), "sigma^2 coefficient a1"};
  b.b1 = {(in.D_C * in.mu * shape + in.G_M) / in.ell, "sigma coefficient b1"};
  b.sigma_max = noise_budget(NoiseVariant::ASPG, {in.R, in.mu, in.ell, in.D_C, in.G_M});
  b.feasible = b.eta_tilde.value > 0.0;
  return b;
}

RegularizationPlan weakly_convex_plan(double epsilon, double ell, double D_C, double V0,
                                      double sigma, double grad_sup) {
  require_positive(epsilon, "epsilon");
  require_positive(D_C, "D_C");
  require_positive(ell, "L");
  require_positive(V0, "V0");
  require_nonneg(sigma, "sigma");
  require_nonneg(grad_sup, "grad_sup");
  RegularizationPlan p;
  p.epsilon = epsilon;
  p.mu_eps = epsilon / (D_C * D_C);
  p.ell_eps = ell + epsilon / (D_C * D_C);
  p.kappa_eps = 1.0 + ell * D_C * D_C / epsilon;
  const double count = std::abs(std::log(epsilon) - std::log(V0)) /
                       std::abs(std::log(1.0 - 1.0 / std::sqrt(p.kappa_eps)));
  p.k_required = static_cast<long>(std::ceil(count));
  p.k_tilde_eps = aspg_k_tilde_closed(sigma, {p.mu_eps, D_C, grad_sup}, p.ell_eps).value;
  p.noise_ok = std::sqrt(p.kappa_eps) * p.k_tilde_eps <= epsilon / 2.0;
  if (p.noise_ok) p.guaranteed_gap = 2.0 * epsilon;
  return p;
}

}  // namespace momcert
