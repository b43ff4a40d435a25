#pragma once

#include <Eigen/Dense>

#include "hfi/common.hpp"

namespace hfi {

/// OLS coefficients of y on X via column-pivoted QR. Throws on rank
/// deficiency so callers see singular designs instead of garbage.
inline Vector ols_solve(const Matrix& X, const Vector& y) {
  require(X.rows() == y.size(), "ols_solve: row mismatch");
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < X.cols())
    throw std::runtime_error("ols_solve: rank-deficient design matrix");
  return qr.solve(y);
}

/// Multi-response OLS: returns the X.cols() x Y.cols() coefficient matrix.
inline Matrix ols_solve_multi(const Matrix& X, const Matrix& Y) {
  require(X.rows() == Y.rows(), "ols_solve_multi: row mismatch");
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < X.cols())
    throw std::runtime_error("ols_solve_multi: rank-deficient design matrix");
  return qr.solve(Y);
}

inline Matrix symmetrize(const Matrix& P) { return 0.5 * (P + P.transpose()); }

/// Symmetrize and clip negative eigenvalues at zero.
inline Matrix clip_psd(const Matrix& P, double tol = 0.0) {
  Matrix S = symmetrize(P);
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.eigenvalues().minCoeff() >= -tol) return S;
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Symmetric PSD square root.
inline Matrix sqrt_psd(const Matrix& P) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(P));
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline double spectral_radius(const Matrix& A) {
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

/// Solves P = A P A' + Q by doubling. Requires spectral_radius(A) < 1.
inline Matrix solve_discrete_lyapunov(const Matrix& A, const Matrix& Q,
                                      int max_doublings = 64) {
  Matrix P = symmetrize(Q);
  Matrix Ak = A;
  for (int i = 0; i < max_doublings; ++i) {
    Matrix incr = Ak * P * Ak.transpose();
    if (incr.cwiseAbs().maxCoeff() < 1e-300) break;
    P += incr;
    P = symmetrize(P);
    Ak = Ak * Ak;
    if (incr.cwiseAbs().maxCoeff() < 1e-16 * (1.0 + P.cwiseAbs().maxCoeff()))
      break;
  }
  return P;
}

/// Covariance of a unit-innovation AR(1): entries rho^|i-j| / (1 - rho^2).
inline Matrix ar1_autocov_matrix(Index n, double rho) {
  require(std::abs(rho) < 1.0, "ar1_autocov_matrix: |rho| must be < 1");
  const double scale = 1.0 / (1.0 - rho * rho);
  Matrix V(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      V(i, j) = scale * std::pow(rho, static_cast<double>(std::abs(i - j)));
  return V;
}

}  // namespace hfi
