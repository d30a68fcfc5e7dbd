#include "doctest.h"

#include <functional>

#include "momcert/certificates.hpp"
#include "test_util.hpp"

using namespace momcert;
using testutil::Mat;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidInput;
}

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("preset parameters") {
  auto ag = preset_params(Preset::AG, 1, 4);
  CHECK(ag.alpha == doctest::Approx(0.25));
  CHECK(ag.beta == doctest::Approx(1.0 / 3.0));
  CHECK(ag.rho == doctest::Approx(0.5));
  REQUIRE(ag.p_tilde);
  Eigen::Matrix2d want;
  want << 2, -1, -1, 0.5;
  CHECK((*ag.p_tilde - want).norm() < 1e-14);

  auto hb = preset_params(Preset::HB, 1, 9);
  CHECK(hb.alpha == doctest::Approx(0.25));
  CHECK(hb.beta == doctest::Approx(0.25));
  CHECK(hb.rho == doctest::Approx(0.5));
  CHECK_FALSE(hb.p_tilde);

  auto st = preset_params(Preset::AG_STAR, 1, 4);
  CHECK(st.alpha == doctest::Approx(0.3076923076923077).epsilon(1e-14));
  CHECK(st.beta == doctest::Approx(0.28642165534933806).epsilon(1e-14));
  CHECK(st.rho == doctest::Approx(0.44529980377477085).epsilon(1e-14));

  auto ay = preset_params(Preset::AYBAT, 1, 4, 0.16);
  CHECK(ay.rho == doctest::Approx(0.6));
  CHECK(ay.beta == doctest::Approx(0.6 / 1.4));
  CHECK(kind_of([] { preset_params(Preset::AYBAT, 1, 4, 0.3); }) == ErrorKind::InvalidInput);

  CHECK(kind_of([] { preset_params(Preset::AG, 1, 1); }) == ErrorKind::KappaOne);
  CHECK(kind_of([] { preset_params(Preset::AG, 2, 1); }) == ErrorKind::InvalidInput);
}

TEST_CASE("LMI building blocks") {
  auto ag = preset_params(Preset::AG, 1, 4);
  const auto x1 = lmi_x1(ag.alpha, ag.beta, ag.mu, ag.ell);
  const auto x2 = lmi_x2(ag.alpha, ag.beta, ag.mu, ag.ell);
  CHECK(x1(0, 0) == doctest::Approx(1.0 / 18.0));
  CHECK(x1(2, 2) == doctest::Approx(0.125));
  CHECK(x2(0, 0) == doctest::Approx(8.0 / 9.0));

  // rho = 1 leaves only X~1; with P~ = 0 the residual is exactly -X~1.
  const auto m = build_lmi(ag.alpha, ag.beta, 1.0, 1, 4, Eigen::Matrix2d::Zero());
  CHECK((m + x1).norm() < 1e-15);
  CertificatePair zero = ag;
  zero.rho = 1.0;
  zero.p_tilde = Eigen::Matrix2d::Zero();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> oracle(Eigen::Matrix3d(-x1));
  const auto v = verify_lmi(zero);
  CHECK(v.max_eigenvalue == doctest::Approx(oracle.eigenvalues().maxCoeff()));
  CHECK(v.max_eigenvalue == doctest::Approx(0.117748984).epsilon(1e-8));
  CHECK_FALSE(v.feasible);

  auto hb = preset_params(Preset::HB, 1, 9);
  CHECK(kind_of([&] { build_lmi(hb); }) == ErrorKind::NoCertificate);
}

TEST_CASE("LMI is feasible at the AG preset and not at a faster rate") {
  for (double L : {1.5, 2.0, 4.0, 10.0, 100.0}) {
    const auto v = verify_lmi(preset_params(Preset::AG, 1, L));
    CHECK(v.feasible);
    CHECK(v.max_eigenvalue <= 1e-8);
  }
  auto fast = preset_params(Preset::AG, 1, 4);
  fast.rho = 0.3;
  const auto v = verify_lmi(fast);
  CHECK_FALSE(v.feasible);
  CHECK(v.max_eigenvalue == doctest::Approx(0.22705125230161552).epsilon(1e-10));
}

TEST_CASE("LMI feasibility across a (mu, L) grid") {
  for (double mu : {0.01, 0.3, 1.0, 7.0})
    for (double kappa : {1.001, 1.1, 2.0, 3.7, 10.0, 55.0, 300.0, 1e4}) {
      const auto v = verify_lmi(preset_params(Preset::AG, mu, mu * kappa));
      CHECK(v.feasible);
    }
}

TEST_CASE("preset rates depend only on kappa and HB is faster than AG") {
  std::mt19937_64 g(41);
  for (int t = 0; t < 50; ++t) {
    const double mu = testutil::uniform(g, 0.01, 10);
    const double kappa = std::exp(testutil::uniform(g, 0.001, 9));
    const double c = testutil::uniform(g, 0.01, 100);
    for (Preset p : {Preset::AG, Preset::AG_STAR, Preset::HB}) {
      const double r1 = preset_params(p, mu, mu * kappa).rho;
      const double r2 = preset_params(p, c * mu, c * mu * kappa).rho;
      CHECK(std::abs(r1 - r2) <= 1e-12);
    }
    CHECK(preset_params(Preset::HB, mu, mu * kappa).rho <
          preset_params(Preset::AG, mu, mu * kappa).rho);
  }
}

TEST_CASE("P~ search recovers a certificate at the AG rate") {
  for (double L : {2.0, 4.0, 10.0}) {
    auto ag = preset_params(Preset::AG, 1, L);
    const auto s = search_p_tilde(ag.alpha, ag.beta, ag.rho, 1, L);
    CHECK(s.feasible);
    CertificatePair c = ag;
    c.p_tilde = s.p_tilde;
    CHECK(verify_lmi(c).feasible);
    CHECK(sym_eig(s.p_tilde).min() >= -1e-12);
  }
  auto ag = preset_params(Preset::AG, 1, 4);
  auto best = bisect_rate(ag.alpha, ag.beta, 1, 4);
  REQUIRE(best);
  CHECK(best->rho <= ag.rho + 1e-3);
  CHECK(verify_lmi(*best).feasible);
}

TEST_CASE("heavy-ball prefactor") {
  CHECK(prefactor_ck(Preset::HB, 2, 1, 9, vec({1, 9})).value ==
        doctest::Approx(std::sqrt(27.0)).epsilon(1e-14));
  CHECK(prefactor_ck(Preset::HB, 2, 1, 9, vec({1, 5, 9})).value ==
        doctest::Approx(5.19615).epsilon(1e-6));
  CHECK(prefactor_ck(Preset::HB, 1, 1, 9, vec({1, 9})).value ==
        doctest::Approx(std::sqrt(8.25)).epsilon(1e-14));
  // An eigenvalue near an endpoint lets Cbar dominate: (1+9)/(2 sqrt(0.01*7.99)).
  CHECK(prefactor_ck(Preset::HB, 1, 1, 9, vec({1, 1.01, 9})).value ==
        doctest::Approx(10.0 / (2.0 * std::sqrt(0.01 * 7.99))));
  CHECK(kind_of([] { prefactor_ck(Preset::HB, 0, 1, 9, vec({1, 9})); }) == ErrorKind::OutOfDomain);
  CHECK(kind_of([] { prefactor_ck(Preset::HB, 1, 1, 1, vec({1})); }) == ErrorKind::KappaOne);
  CHECK(kind_of([] { prefactor_ck(Preset::HB, 1, 1, 9, vec({10})); }) == ErrorKind::InvalidInput);
  CHECK(deterministic_factor(Preset::HB, 0, 1, 9, vec({1, 9})) == 1.0);
  CHECK(deterministic_factor(Preset::HB, 1, 1, 9, vec({1, 9})) ==
        doctest::Approx(std::sqrt(8.25) * 0.5));
}

TEST_CASE("AG* prefactor") {
  const double r = 0.44529980377477085;
  const Vec ends = vec({1, 4});
  for (long k : {1L, 2L, 3L, 40L}) {
    const double lin = std::sqrt(k * k * (r * r + 1) * (r * r + 1) + 2 * r * r);
    CHECK(prefactor_ck(Preset::AG_STAR, k, 1, 4, ends).value == doctest::Approx(lin).epsilon(1e-14));
  }
  CHECK(prefactor_ck(Preset::AG_STAR, 1, 1, 4, vec({1, 2, 4})).value ==
        doctest::Approx(5.415488488856371).epsilon(1e-13));
  CHECK(prefactor_ck(Preset::AG_STAR, 3, 1, 4, vec({1, 2, 4})).value ==
        doctest::Approx(5.415488488856371).epsilon(1e-13));
  // The nilpotent eigenvalue (3L + mu)/4 is excluded from the maximum.
  CHECK(prefactor_ck(Preset::AG_STAR, 2, 1, 4, vec({1, 3.25, 4})).value ==
        doctest::Approx(2.47794226870192).epsilon(1e-13));
}

TEST_CASE("HB prefactor grows at most linearly") {
  std::mt19937_64 g(42);
  for (int t = 0; t < 30; ++t) {
    const double L = testutil::uniform(g, 1.5, 100);
    Vec spec(5);
    spec << 1, testutil::uniform(g, 1, L), testutil::uniform(g, 1, L), testutil::uniform(g, 1, L), L;
    const double slope = 2 * (L + 1) / (L - 1);
    double prev = prefactor_ck(Preset::HB, 1, 1, L, spec);
    for (long k = 2; k <= 300; ++k) {
      const double cur = prefactor_ck(Preset::HB, k, 1, L, spec);
      CHECK(cur - prev <= slope + 1e-9);
      CHECK(cur >= prev);
      prev = cur;
    }
  }
}

TEST_CASE("drift constants and ergodicity budget") {
  auto ag = preset_params(Preset::AG, 1, 4);
  const auto d = drift_constants(ag, 1.0);
  CHECK(d.K.value == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(d.gamma.value == 0.5);
  CHECK(drift_constants(ag, 0.0).K.value == 0.0);
  CHECK(!d.K.provenance.empty());

  CertificatePair custom = ag;
  custom.alpha = 0.1;
  custom.p_tilde = Eigen::Matrix2d::Identity() * 2.0;
  CHECK(drift_constants(custom, 0.5).K.value == doctest::Approx(0.01));
  CHECK(kind_of([] { drift_constants(preset_params(Preset::HB, 1, 9), 1.0); }) ==
        ErrorKind::NoCertificate);

  const auto b = ergodicity_budget(0.5, 10, 0.5, 0.25);
  CHECK(b.psi.value == doctest::Approx(1.0));
  CHECK(b.eta_bar.value == doctest::Approx(0.1875).epsilon(1e-14));

  const auto lim = ergodicity_budget(0.5, 10, 0.8, 1e-12);
  CHECK(lim.eta_bar.value == doctest::Approx(std::min(0.25, 0.1)).epsilon(1e-9));

  try {
    ergodicity_budget(0.5, 1.0, 0.99, 0.01);
    FAIL("expected Infeasible");
  } catch (const InfeasibleError& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
    CHECK(e.slack() == doctest::Approx(0.5 - 0.495 - 0.01));
  }
}

TEST_CASE("noise budgets") {
  CHECK(noise_budget(NoiseVariant::UNCONSTRAINED, {10, 1, 4}).value ==
        doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
  CHECK(noise_budget(NoiseVariant::ASPG, {1, 1, 4, 1, 4}).value ==
        doctest::Approx(0.05517502019881309).epsilon(1e-12));
  CHECK(noise_budget(NoiseVariant::UNCONSTRAINED, {0, 1, 4}).value == 0.0);
  CHECK(noise_budget(NoiseVariant::ASPG, {0, 1, 4, 1, 4}).value == 0.0);
}

TEST_CASE("Gaussian minorization") {
  const auto m = gaussian_minorization(1, 4, Mat::Ones(1, 1));
  CHECK(m.M.value == doctest::Approx(1.587587123825525).epsilon(1e-13));
  CHECK(m.R.value == doctest::Approx(1.6611536296906968e-06).epsilon(1e-12));

  const auto tiny = gaussian_minorization(1, 4, Mat::Identity(2, 2) * 1e-14);
  CHECK(tiny.M.value == doctest::Approx(std::sqrt(-2 * std::log(1 - std::pow(4.0, -0.25)))));

  CHECK(kind_of([] { gaussian_minorization(1, 4, Mat::Identity(1, 1) * 16.0); }) ==
        ErrorKind::NoiseTooLarge);
  CHECK(kind_of([] { gaussian_minorization(1, 1, Mat::Identity(1, 1)); }) == ErrorKind::KappaOne);
}

TEST_CASE("suboptimality bounds") {
  CHECK(subopt_bound(NoiseVariant::UNCONSTRAINED, 1, 4, 0.1, 4, 10) ==
        doctest::Approx(0.0059765625).epsilon(1e-14));
  CHECK(subopt_bound(NoiseVariant::UNCONSTRAINED, 1, 4, 0.0, 4, 2000) < 1e-300);
  CHECK(aspg_k_tilde_closed(0.1, {1, 1, 4}, 4).value == doctest::Approx(0.2278125).epsilon(1e-14));
  CHECK(subopt_bound(NoiseVariant::ASPG, 1, 4, 0.1, 4, 10, {1, 1, 4}) ==
        doctest::Approx(std::pow(0.5, 10) + 2 * 0.2278125));

  std::mt19937_64 g(43);
  for (int t = 0; t < 50; ++t) {
    const double kappa = testutil::uniform(g, 1.01, 1000);
    const double V0 = testutil::uniform(g, 0, 10);
    const double s = testutil::uniform(g, 0, 2);
    double prev = subopt_bound(NoiseVariant::UNCONSTRAINED, V0, kappa, s, 3, 0);
    for (long k = 1; k < 100; ++k) {
      const double cur = subopt_bound(NoiseVariant::UNCONSTRAINED, V0, kappa, s, 3, k);
      CHECK(cur <= prev);
      prev = cur;
    }
    CHECK(subopt_bound(NoiseVariant::UNCONSTRAINED, V0, kappa, s + 0.1, 3, 7) >=
          subopt_bound(NoiseVariant::UNCONSTRAINED, V0, kappa, s, 3, 7));
  }
}

TEST_CASE("ASPG constants") {
  CHECK(aspg_p_norm(1, 4) == doctest::Approx(2.5));
  AspgInputs in;
  in.alpha = 0.25;
  in.beta = 1.0 / 3;
  in.p_norm = 2.5;
  in.sigma = 0.1;
  in.D_C = 1;
  in.G_M = 4;
  in.mu = 1;
  in.ell = 4;
  in.rho = 0.5;
  in.R = 1;
  in.eta = 0.5;
  const auto b = aspg_constants(in);
  CHECK(b.k_tilde.value == doctest::Approx(0.2278125).epsilon(1e-14));
  CHECK(b.a1.value == doctest::Approx(0.28125));
  CHECK(b.b1.value == doctest::Approx(2.25));
  CHECK(b.sigma_max.value == doctest::Approx(0.05517502019881309).epsilon(1e-12));
  CHECK(b.psi_tilde.value == doctest::Approx(0.5 / (2 * 0.2278125)));
  CHECK(b.feasible == (b.eta_tilde.value > 0));

  in.sigma = 0;
  const auto z = aspg_constants(in);
  CHECK(z.k_tilde.value == 0.0);
  CHECK(std::isinf(z.psi_tilde.value));

  // Theorem-level and closed-form K~ agree at alpha = 1/L.
  std::mt19937_64 g(44);
  for (int t = 0; t < 100; ++t) {
    AspgInputs r;
    r.mu = testutil::uniform(g, 0.1, 5);
    r.ell = r.mu * testutil::uniform(g, 1.01, 200);
    r.alpha = 1 / r.ell;
    r.p_norm = aspg_p_norm(r.mu, r.ell);
    r.sigma = testutil::uniform(g, 0, 3);
    r.D_C = testutil::uniform(g, 0, 5);
    r.G_M = testutil::uniform(g, 0, 10);
    r.rho = 0.5;
    r.R = 1;
    r.eta = 0.5;
    const double a = aspg_constants(r).k_tilde.value;
    const double c = aspg_k_tilde_closed(r.sigma, {r.mu, r.D_C, r.G_M}, r.ell).value;
    CHECK(std::abs(a - c) <= 1e-12 * std::max(std::abs(c), 1e-300));
  }
}

TEST_CASE("weakly convex plan") {
  const auto p = weakly_convex_plan(0.01, 1, 1, 1, 0.0);
  CHECK(p.mu_eps == doctest::Approx(0.01));
  CHECK(p.ell_eps == doctest::Approx(1.01));
  CHECK(p.kappa_eps == doctest::Approx(101));
  CHECK(p.k_required == 44);
  CHECK(p.noise_ok);
  CHECK(p.guaranteed_gap == doctest::Approx(0.02));

  CHECK(weakly_convex_plan(2.0, 2, 1, 1, 0).kappa_eps == doctest::Approx(2.0));
  const auto noisy = weakly_convex_plan(0.01, 1, 1, 1, 1.0, 2.0);
  CHECK_FALSE(noisy.noise_ok);
  CHECK(std::isinf(noisy.guaranteed_gap));
}

TEST_CASE("deterministic AG* run respects the k = 50 bound") {
  Vec lam(2);
  lam << 1, 4;
  auto f = QuadraticObjective::diagonal(lam);
  auto st = preset_params(Preset::AG_STAR, 1, 4);
  MomentumParams p;
  p.method = Method::AG;
  p.alpha = st.alpha;
  p.beta = st.beta;
  const StateVec xi0 = StateVec::at(Vec::Ones(2));
  auto rec = run_path(Method::AG, xi0, f, p, NoiseOracle::gaussian(Mat::Zero(2, 2)), 50, 0);
  const double c50 = prefactor_ck(Preset::AG_STAR, 50, 1, 4, lam);
  const double bound = 2.0 * c50 * c50 * std::pow(st.rho, 100) * xi0.stacked().squaredNorm();
  CHECK(rec.subopt[50] <= bound);
}
