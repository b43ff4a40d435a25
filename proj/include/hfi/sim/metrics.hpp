#pragma once

#include "hfi/common.hpp"
#include "hfi/linalg.hpp"

namespace hfi::sim {

/// Trace ratio M(F*, Fhat) = tr(F*' P F*) / tr(F*' F*) with P the projection
/// onto the column space of Fhat. Invariant to right-multiplication of Fhat
/// by any invertible matrix; 1 when the spaces coincide, 0 when orthogonal.
inline double metric_trace_ratio(const Matrix& Ftrue, const Matrix& Fhat) {
  require(Ftrue.rows() == Fhat.rows(), "metric_trace_ratio: row mismatch");
  Eigen::ColPivHouseholderQR<Matrix> qr(Fhat);
  if (qr.rank() < Fhat.cols())
    throw std::runtime_error("metric_trace_ratio: Fhat is rank deficient");
  Eigen::HouseholderQR<Matrix> hqr(Fhat);
  Matrix Q = hqr.householderQ() * Matrix::Identity(Fhat.rows(), Fhat.cols());
  const double sst = Ftrue.squaredNorm();
  require(sst > 0.0, "metric_trace_ratio: F* is identically zero");
  return (Q.transpose() * Ftrue).squaredNorm() / sst;
}

/// R^2 of the OLS regression (with intercept) of column j of F* on all
/// columns of Fhat.
inline double metric_r2_per_factor(const Matrix& Ftrue, Index j,
                                   const Matrix& Fhat) {
  require(j >= 0 && j < Ftrue.cols(), "metric_r2_per_factor: bad column");
  require(Ftrue.rows() == Fhat.rows(), "metric_r2_per_factor: row mismatch");
  const Index T = Fhat.rows(), r = Fhat.cols();
  Matrix Z(T, r + 1);
  Z.col(0).setOnes();
  Z.rightCols(r) = Fhat;
  Vector y = Ftrue.col(j);
  Vector coef = ols_solve(Z, y);
  const double ssr = (y - Z * coef).squaredNorm();
  const double sst = (y.array() - y.mean()).matrix().squaredNorm();
  require(sst > 0.0, "metric_r2_per_factor: constant target factor");
  return 1.0 - ssr / sst;
}

}  // namespace hfi::sim
