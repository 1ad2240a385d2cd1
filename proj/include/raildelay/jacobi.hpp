#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace raildelay {

template <typename Scalar>
struct SymmetricEigenResult {
  Eigen::Vector<Scalar, Eigen::Dynamic> eigenvalues;                 // ascending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eigenvectors;  // columns match eigenvalues
};

/// Cyclic Jacobi rotations on a dense symmetric matrix. Sweeps the upper
/// triangle until every off-diagonal magnitude drops below `tol`; throws if
/// the sweep cap is exhausted first. Eigenvectors come out orthonormal since
/// they are products of plane rotations.
template <typename Scalar>
SymmetricEigenResult<Scalar> jacobi_eigendecomposition(
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a,
    Scalar tol = Scalar(1e-12), int max_sweeps = 100) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument("jacobi: matrix must be square and non-empty");
  }
  const Eigen::Index n = a.rows();
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix v = Matrix::Identity(n, n);

  auto max_offdiag = [&]() {
    Scalar m = Scalar(0);
    for (Eigen::Index p = 0; p < n - 1; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) m = std::max(m, std::abs(a(p, q)));
    return m;
  };

  bool converged = (n == 1) || max_offdiag() < tol;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (std::abs(apq) < tol) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
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
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p);
          const Scalar vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = max_offdiag() < tol;
  }
  if (!converged) {
    throw std::runtime_error("jacobi: no convergence within sweep budget");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  SymmetricEigenResult<Scalar> res;
  res.eigenvalues.resize(n);
  res.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    res.eigenvalues(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    res.eigenvectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return res;
}

}  // namespace raildelay
