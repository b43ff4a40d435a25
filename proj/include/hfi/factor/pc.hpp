#pragma once

#include <Eigen/SVD>

#include "hfi/factor/estimate.hpp"
#include "hfi/panel.hpp"

namespace hfi::factor {

/// Principal components on a complete T x N matrix: the top-r singular
/// triplets of X / sqrt(NT), normalized so F'F/T = I_r and Lambda'Lambda is
/// diagonal.
inline FactorEstimate estimate_pc(const Matrix& X, int r) {
  const Index T = X.rows(), N = X.cols();
  require(r >= 1 && r <= std::min(N, T), "estimate_pc: invalid r");
  if (!X.allFinite())
    throw std::invalid_argument("estimate_pc: missing entries present");

  Eigen::BDCSVD<Matrix> svd(X / std::sqrt(double(N) * double(T)),
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& d = svd.singularValues();
  if (d[r - 1] <= 1e-12 * std::max(1.0, d[0]))
    throw std::runtime_error("estimate_pc: r exceeds the numerical rank of X");

  FactorEstimate est;
  est.method = FactorMethod::PC;
  est.factors = std::sqrt(double(T)) * svd.matrixU().leftCols(r);
  est.loadings = std::sqrt(double(N)) * svd.matrixV().leftCols(r) *
                 d.head(r).asDiagonal();
  fix_sign(est.factors, est.loadings);

  Matrix resid = X - est.factors * est.loadings.transpose();
  est.idio_var = (resid.array().square().colwise().mean())
                     .cwiseMax(kVarianceFloor)
                     .matrix()
                     .transpose();
  est.factor_cov = est.factors.transpose() * est.factors / double(T);
  return est;
}

inline FactorEstimate estimate_pc(const Panel& panel, int r) {
  require(panel.is_complete(), "estimate_pc: panel has missing entries");
  return estimate_pc(panel.values, r);
}

}  // namespace hfi::factor
