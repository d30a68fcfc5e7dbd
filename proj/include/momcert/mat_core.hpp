#pragma once

// Dense symmetric linear algebra for the small matrices that appear in
// momentum-method analysis (d up to ~100). Everything here is templated on
// the scalar type and takes Eigen expressions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "momcert/error.hpp"

namespace momcert {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Eigen-decomposition of a symmetric matrix: ascending eigenvalues and an
/// orthonormal basis of eigenvectors (one per column).
template <typename Scalar>
struct Spectrum {
  VectorX<Scalar> eigenvalues;
  MatrixX<Scalar> eigenvectors;

  Eigen::Index size() const { return eigenvalues.size(); }
  Scalar min() const { return eigenvalues(0); }
  Scalar max() const { return eigenvalues(eigenvalues.size() - 1); }

  MatrixX<Scalar> reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }

  /// V f(diag) V^T for a scalar function applied to the eigenvalues.
  template <typename Fn>
  MatrixX<Scalar> apply(Fn&& fn) const {
    VectorX<Scalar> mapped = eigenvalues.unaryExpr(fn);
    return eigenvectors * mapped.asDiagonal() * eigenvectors.transpose();
  }
};

namespace detail {

template <typename Derived>
typename Derived::Scalar max_abs(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return Scalar(0);
  return m.cwiseAbs().maxCoeff();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* where) {
  using std::isfinite;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!isfinite(m(i, j)))
        throw Error(ErrorKind::InvalidInput,
                    std::string(where) + ": non-finite entry");
}

template <typename Derived>
MatrixX<typename Derived::Scalar> checked_symmetric(
    const Eigen::MatrixBase<Derived>& m, const char* where) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols() || m.rows() == 0)
    throw Error(ErrorKind::InvalidInput,
                std::string(where) + ": matrix must be square and non-empty");
  require_finite(m, where);
  const Scalar scale = max_abs(m);
  const Scalar asym = max_abs(m - m.transpose());
  if (asym > Scalar(1e-10) * scale)
    throw Error(ErrorKind::InvalidInput,
                std::string(where) + ": matrix is not symmetric");
  MatrixX<Scalar> sym = (m + m.transpose()) / Scalar(2);
  return sym;
}

}  // namespace detail

/// Cyclic Jacobi eigensolver. Sweeps until the off-diagonal Frobenius norm
/// drops below off_tol * ||M||_F.
template <typename Derived>
Spectrum<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& m,
                                           typename Derived::Scalar off_tol =
                                               typename Derived::Scalar(1e-13)) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::sqrt;

  MatrixX<Scalar> a = detail::checked_symmetric(m, "sym_eig");
  const Eigen::Index n = a.rows();
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);

  const Scalar norm = a.norm();
  const Scalar target = off_tol * norm;
  constexpr int kMaxSweeps = 100;

  auto off_norm = [&a, n]() {
    Scalar s(0);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return sqrt(s);
  };

  for (int sweep = 0; sweep < kMaxSweeps && norm > Scalar(0); ++sweep) {
    if (off_norm() <= target) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar sgn = theta >= Scalar(0) ? Scalar(1) : Scalar(-1);
        const Scalar t = sgn / (abs(theta) + sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = Scalar(0);
        a(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p);
          const Scalar vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&a](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  Spectrum<Scalar> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = a(order[k], order[k]);
    out.eigenvectors.col(k) = v.col(order[k]);
  }
  return out;
}

template <typename Scalar>
struct DefinitenessReport {
  Scalar max_eigenvalue;
  Scalar min_eigenvalue;
  bool is_neg_semidefinite;
  bool is_pos_definite;
};

/// Extreme eigenvalues plus the two definiteness verdicts used by the LMI
/// check (max eigenvalue <= tol) and the weighted-norm check (min > tol).
template <typename Derived>
DefinitenessReport<typename Derived::Scalar> max_eig_and_psd(
    const Eigen::MatrixBase<Derived>& m,
    typename Derived::Scalar tol = typename Derived::Scalar(1e-10)) {
  using Scalar = typename Derived::Scalar;
  if (tol < Scalar(0))
    throw Error(ErrorKind::InvalidInput, "max_eig_and_psd: tol must be >= 0");
  const auto spec = sym_eig(m);
  return {spec.max(), spec.min(), spec.max() <= tol, spec.min() > tol};
}

/// Symmetric PSD square root. Eigenvalues down to -1e-8 * ||M|| are treated
/// as rounding and clamped to zero.
template <typename Derived>
MatrixX<typename Derived::Scalar> psd_sqrt(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::sqrt;
  const auto spec = sym_eig(m);
  const Scalar scale = std::max(abs(spec.min()), abs(spec.max()));
  if (spec.min() < -Scalar(1e-8) * scale)
    throw Error(ErrorKind::NotPSD, "psd_sqrt: matrix has a negative eigenvalue");
  // Eigenvalues within rounding of zero are zero; sqrt would inflate them
  // from ~eps*scale to ~sqrt(eps*scale).
  const Scalar floor = Scalar(m.rows()) * std::numeric_limits<Scalar>::epsilon() * scale;
  MatrixX<Scalar> r =
      spec.apply([floor](Scalar x) { return x > floor ? sqrt(x) : Scalar(0); });
  return (r + r.transpose()) / Scalar(2);
}

template <typename DA, typename DB>
MatrixX<typename DA::Scalar> kron(const Eigen::MatrixBase<DA>& a,
                                  const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  MatrixX<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Largest eigenvalue modulus of a general square matrix.
template <typename Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  if (a.rows() != a.cols() || a.rows() == 0)
    throw Error(ErrorKind::InvalidInput, "spectral_radius: matrix must be square");
  detail::require_finite(a, "spectral_radius");
  Eigen::EigenSolver<MatrixX<Scalar>> solver(MatrixX<Scalar>(a), false);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::InvalidInput, "spectral_radius: eigensolver failed");
  Scalar r(0);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    r = std::max<Scalar>(r, abs(solver.eigenvalues()(i)));
  return r;
}

/// Largest singular value, from the Jacobi spectrum of A^T A.
template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using std::sqrt;
  if (a.size() == 0) return Scalar(0);
  MatrixX<Scalar> gram = a.transpose() * a;
  const Scalar top = sym_eig(gram).max();
  return top > Scalar(0) ? sqrt(top) : Scalar(0);
}

/// Solves X = A X A^T + Q by vectorization: (I - A (x) A) vec(X) = vec(Q).
template <typename DA, typename DQ>
MatrixX<typename DA::Scalar> solve_discrete_lyapunov(
    const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DQ>& q) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n)
    throw Error(ErrorKind::InvalidInput,
                "solve_discrete_lyapunov: dimension mismatch");
  const MatrixX<Scalar> qs = detail::checked_symmetric(q, "solve_discrete_lyapunov");
  if (spectral_radius(a) >= Scalar(1) - Scalar(1e-10))
    throw Error(ErrorKind::Unstable,
                "solve_discrete_lyapunov: spectral radius of A is not below 1");

  const MatrixX<Scalar> ad = a;
  MatrixX<Scalar> system =
      MatrixX<Scalar>::Identity(n * n, n * n) - kron(ad, ad);
  const VectorX<Scalar> rhs = Eigen::Map<const VectorX<Scalar>>(qs.data(), n * n);
  const VectorX<Scalar> sol = system.partialPivLu().solve(rhs);
  MatrixX<Scalar> x = Eigen::Map<const MatrixX<Scalar>>(sol.data(), n, n);
  return (x + x.transpose()) / Scalar(2);
}

/// Closed-form solution of the 2x2 discrete Lyapunov equation
/// X = T X T^T + Q via the 3x3 system in (X11, X12, X22).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> solve_discrete_lyapunov_2x2(
    const Eigen::Matrix<Scalar, 2, 2>& t, const Eigen::Matrix<Scalar, 2, 2>& q) {
  const Scalar a = t(0, 0), b = t(0, 1), c = t(1, 0), e = t(1, 1);
  Eigen::Matrix<Scalar, 3, 3> sys;
  sys << Scalar(1) - a * a, -Scalar(2) * a * b, -b * b,
      -a * c, Scalar(1) - (a * e + b * c), -b * e,
      -c * c, -Scalar(2) * c * e, Scalar(1) - e * e;
  Eigen::Matrix<Scalar, 3, 1> rhs(q(0, 0), (q(0, 1) + q(1, 0)) / Scalar(2), q(1, 1));
  const Eigen::Matrix<Scalar, 3, 1> s = sys.fullPivLu().solve(rhs);
  Eigen::Matrix<Scalar, 2, 2> x;
  x << s(0), s(1), s(1), s(2);
  return x;
}

/// ||A^k|| (spectral norm) for k = 1..k_max by repeated multiplication.
template <typename Derived>
std::vector<typename Derived::Scalar> power_norm_curve(
    const Eigen::MatrixBase<Derived>& a, int k_max) {
  using Scalar = typename Derived::Scalar;
  if (k_max < 1)
    throw Error(ErrorKind::InvalidInput, "power_norm_curve: k_max must be >= 1");
  if (a.rows() != a.cols())
    throw Error(ErrorKind::InvalidInput, "power_norm_curve: matrix must be square");
  detail::require_finite(a, "power_norm_curve");
  std::vector<Scalar> out;
  out.reserve(static_cast<std::size_t>(k_max));
  MatrixX<Scalar> power = a;
  for (int k = 1; k <= k_max; ++k) {
    if (k > 1) power = (a * power).eval();
    out.push_back(spectral_norm(power));
  }
  return out;
}

}  // namespace momcert
