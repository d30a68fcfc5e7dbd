#include "doctest.h"

#include <unsupported/Eigen/KroneckerProduct>

#include "momcert/mat_core.hpp"
#include "test_util.hpp"

using namespace momcert;
using testutil::Mat;
using testutil::Vec;

TEST_CASE("sym_eig on small fixed matrices") {
  Mat d(2, 2);
  d << 4, 0, 0, 1;
  auto s = sym_eig(d);
  CHECK(s.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(s.eigenvalues(1) == doctest::Approx(4.0));

  auto id = sym_eig(Mat::Identity(2, 2));
  CHECK(id.eigenvalues(0) == 1.0);
  CHECK(id.eigenvalues(1) == 1.0);
  CHECK((id.eigenvectors.transpose() * id.eigenvectors - Mat::Identity(2, 2)).norm() < 1e-14);

  // Rank-one [[2,-1],[-1,0.5]]: trace 2.5, det 0.
  Mat p(2, 2);
  p << 2, -1, -1, 0.5;
  auto sp = sym_eig(p);
  CHECK(std::abs(sp.eigenvalues(0)) < 1e-14);
  CHECK(sp.eigenvalues(1) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("sym_eig rejects non-finite and asymmetric input") {
  Mat m = Mat::Identity(2, 2);
  m(0, 1) = m(1, 0) = std::nan("");
  CHECK_THROWS_AS(sym_eig(m), Error);
  try {
    sym_eig(m);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidInput);
  }
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  CHECK_THROWS_AS(sym_eig(a), Error);
}

TEST_CASE("sym_eig matches Eigen's self-adjoint solver on random matrices") {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = testutil::uniform_int(g, 1, 30);
    const Mat m = testutil::random_sym(g, n);
    const auto s = sym_eig(m);
    Eigen::SelfAdjointEigenSolver<Mat> oracle(m);
    const double scale = m.norm();
    CHECK((s.eigenvalues - oracle.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK((s.reconstruct() - m).norm() <= 1e-10 * scale);
    CHECK((s.eigenvectors.transpose() * s.eigenvectors - Mat::Identity(n, n)).norm() <= 1e-10);
    for (int i = 1; i < n; ++i) CHECK(s.eigenvalues(i - 1) <= s.eigenvalues(i));
  }
}

TEST_CASE("max_eig_and_psd verdicts") {
  auto r = max_eig_and_psd(Mat(-Mat::Identity(3, 3)), 0.0);
  CHECK(r.max_eigenvalue == doctest::Approx(-1.0));
  CHECK(r.is_neg_semidefinite);
  CHECK_FALSE(r.is_pos_definite);

  auto z = max_eig_and_psd(Mat(Mat::Zero(2, 2)), 1e-12);
  CHECK(z.max_eigenvalue == 0.0);
  CHECK(z.is_neg_semidefinite);
  CHECK_FALSE(z.is_pos_definite);

  Mat p(2, 2);
  p << 2, -1, -1, 0.5;
  auto rp = max_eig_and_psd(p, 1e-12);
  CHECK(rp.max_eigenvalue == doctest::Approx(2.5));
  CHECK_FALSE(rp.is_neg_semidefinite);
  CHECK_FALSE(rp.is_pos_definite);

  CHECK_THROWS_AS(max_eig_and_psd(p, -1.0), Error);
}

TEST_CASE("psd_sqrt examples") {
  CHECK((psd_sqrt(Mat(Mat::Identity(3, 3))) - Mat::Identity(3, 3)).norm() < 1e-14);
  Mat d(2, 2);
  d << 4, 0, 0, 9;
  Mat want(2, 2);
  want << 2, 0, 0, 3;
  CHECK((psd_sqrt(d) - want).norm() < 1e-14);

  Vec v(3);
  v << 1, 2, 2;
  v /= 3.0;
  const Mat r = psd_sqrt(Mat(4.0 * v * v.transpose()));
  CHECK((r - 2.0 * v * v.transpose()).norm() < 1e-12);

  Mat neg(2, 2);
  neg << 1, 0, 0, -1;
  try {
    psd_sqrt(neg);
    FAIL("expected NotPSD");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPSD);
  }
}

TEST_CASE("psd_sqrt squares back on random PSD matrices") {
  std::mt19937_64 g(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = testutil::uniform_int(g, 1, 20);
    const int rank = testutil::uniform_int(g, 1, n);
    const Mat m = testutil::random_psd(g, n, rank);
    const Mat r = psd_sqrt(m);
    CHECK((r * r - m).norm() <= 1e-9 * m.norm());
    CHECK((r - r.transpose()).norm() == 0.0);
    CHECK(sym_eig(r).min() >= -1e-10 * r.norm());
  }
}

TEST_CASE("kron agrees with Eigen's Kronecker product") {
  std::mt19937_64 g(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat a = testutil::random_matrix(g, testutil::uniform_int(g, 1, 4), testutil::uniform_int(g, 1, 4));
    const Mat b = testutil::random_matrix(g, testutil::uniform_int(g, 1, 4), testutil::uniform_int(g, 1, 4));
    const Mat want = Eigen::kroneckerProduct(a, b);
    CHECK((kron(a, b) - want).norm() == 0.0);
  }
}

TEST_CASE("discrete Lyapunov examples") {
  Mat a = 0.5 * Mat::Identity(1, 1);
  Mat q = Mat::Ones(1, 1);
  CHECK(solve_discrete_lyapunov(a, q)(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));

  std::mt19937_64 g(14);
  const Mat q3 = testutil::random_psd(g, 3, 3);
  CHECK((solve_discrete_lyapunov(Mat(Mat::Zero(3, 3)), q3) - q3).norm() < 1e-14);

  // Heavy-ball block at lambda = 1 with alpha = 4/9, beta = 1/9.
  const double al = 4.0 / 9.0, be = 1.0 / 9.0, lam = 1.0;
  Mat t(2, 2);
  t << 1 + be - al * lam, -be, 1, 0;
  Mat qin = Mat::Zero(2, 2);
  qin(0, 0) = al * al;
  const Mat x = solve_discrete_lyapunov(t, qin);
  const double per_coord = al * (1 + be) / ((1 - be) * lam * (2 + 2 * be - al * lam));
  CHECK(x(0, 0) == doctest::Approx(per_coord).epsilon(1e-13));
  CHECK(x(1, 1) == doctest::Approx(per_coord).epsilon(1e-13));
  CHECK(x.trace() == doctest::Approx(0.625).epsilon(1e-13));

  Eigen::Matrix2d t2 = t;
  Eigen::Matrix2d q2 = qin;
  CHECK((solve_discrete_lyapunov_2x2(t2, q2) - Eigen::Matrix2d(x)).norm() < 1e-14);
}

TEST_CASE("discrete Lyapunov rejects unstable A") {
  Mat a = Mat::Identity(2, 2);
  try {
    solve_discrete_lyapunov(a, Mat(Mat::Identity(2, 2)));
    FAIL("expected Unstable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Unstable);
  }
}

TEST_CASE("discrete Lyapunov residual on random stable pairs") {
  std::mt19937_64 g(15);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = testutil::uniform_int(g, 2, 20);
    Mat a = testutil::random_matrix(g, n, n);
    Eigen::EigenSolver<Mat> es(a, false);
    const double rad = es.eigenvalues().cwiseAbs().maxCoeff();
    a *= testutil::uniform(g, 0.05, 0.97) / rad;
    const Mat q = testutil::random_psd(g, n, testutil::uniform_int(g, 1, n));
    const Mat x = solve_discrete_lyapunov(a, q);
    CHECK((a * x * a.transpose() - x + q).norm() <= 1e-9 * q.norm());
    CHECK((x - x.transpose()).norm() == 0.0);
  }
}

TEST_CASE("power_norm_curve examples") {
  auto ones = power_norm_curve(Mat(Mat::Identity(3, 3)), 5);
  for (double v : ones) CHECK(v == doctest::Approx(1.0));

  auto half = power_norm_curve(Mat(0.5 * Mat::Identity(2, 2)), 3);
  CHECK(half[2] == doctest::Approx(0.125));

  Mat t(2, 2);
  t << 1, -0.25, 1, 0;
  const double got = power_norm_curve(t, 1)[0];
  Eigen::JacobiSVD<Mat> svd(t);
  CHECK(got == doctest::Approx(svd.singularValues()(0)).epsilon(1e-13));
  CHECK(got == doctest::Approx(1.42539).epsilon(1e-5));
  CHECK(got <= t.norm());

  CHECK_THROWS_AS(power_norm_curve(t, 0), Error);
}

TEST_CASE("power_norm_curve is submultiplicative") {
  std::mt19937_64 g(16);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = testutil::uniform_int(g, 1, 8);
    Mat a = testutil::random_matrix(g, n, n);
    a /= a.norm() / testutil::uniform(g, 0.5, 1.5);
    const auto c = power_norm_curve(a, 40);
    for (int j = 1; j <= 20; ++j)
      for (int k = 1; j + k <= 40; ++k)
        CHECK(c[j + k - 1] <= c[j - 1] * c[k - 1] + 1e-9);
  }
}

TEST_CASE("spectral radius and norm") {
  Mat rot(2, 2);
  rot << 0, -0.9, 0.9, 0;  // eigenvalues +-0.9i
  CHECK(spectral_radius(rot) == doctest::Approx(0.9));
  CHECK(spectral_norm(rot) == doctest::Approx(0.9));
}
