#pragma once

#include "hfi/factor/pc.hpp"

namespace hfi::factor {

namespace detail {

inline Matrix weighted_normal_matrix(const Matrix& loadings,
                                     const Vector& idio_var) {
  return loadings.transpose() * idio_var.cwiseInverse().asDiagonal() * loadings;
}

inline void check_invertible(const Matrix& M, const char* who) {
  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible())
    throw std::runtime_error(std::string(who) + ": singular normal matrix");
}

}  // namespace detail

/// Cross-section GLS projection of one observation vector on the loadings:
/// (L' Phi^-1 L)^-1 L' Phi^-1 x.
inline Vector gls_project(const Matrix& loadings, const Vector& idio_var,
                          const Vector& x) {
  require(loadings.rows() == x.size() && loadings.rows() == idio_var.size(),
          "gls_project: dimension mismatch");
  Matrix M = detail::weighted_normal_matrix(loadings, idio_var);
  detail::check_invertible(M, "gls_project");
  return M.ldlt().solve(loadings.transpose() *
                        idio_var.cwiseInverse().cwiseProduct(x));
}

/// Row-wise GLS projection of every period of X (T x N) -> T x r.
inline Matrix gls_project_all(const Matrix& loadings, const Vector& idio_var,
                              const Matrix& X) {
  require(loadings.rows() == X.cols(), "gls_project_all: dimension mismatch");
  Matrix M = detail::weighted_normal_matrix(loadings, idio_var);
  detail::check_invertible(M, "gls_project");
  Matrix rhs = X * idio_var.cwiseInverse().asDiagonal() * loadings;  // T x r
  return M.ldlt().solve(rhs.transpose()).transpose();
}

/// Shrunken projection (Sigma_F^-1 + L' Phi^-1 L)^-1 L' Phi^-1 x. Converges
/// to gls_project as the prior variance of the factors grows.
inline Vector project_static(const Matrix& loadings, const Vector& idio_var,
                             const Matrix& factor_cov, const Vector& x) {
  require(loadings.cols() == factor_cov.rows(), "project_static: r mismatch");
  Eigen::LLT<Matrix> llt(symmetrize(factor_cov));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("project_static: factor covariance not positive definite");
  Matrix M = llt.solve(Matrix::Identity(factor_cov.rows(), factor_cov.cols())) +
             detail::weighted_normal_matrix(loadings, idio_var);
  return M.ldlt().solve(loadings.transpose() *
                        idio_var.cwiseInverse().cwiseProduct(x));
}

inline Matrix project_static_all(const Matrix& loadings, const Vector& idio_var,
                                 const Matrix& factor_cov, const Matrix& X) {
  Eigen::LLT<Matrix> llt(symmetrize(factor_cov));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("project_static: factor covariance not positive definite");
  Matrix M = llt.solve(Matrix::Identity(factor_cov.rows(), factor_cov.cols())) +
             detail::weighted_normal_matrix(loadings, idio_var);
  Matrix rhs = X * idio_var.cwiseInverse().asDiagonal() * loadings;
  return M.ldlt().solve(rhs.transpose()).transpose();
}

/// PC, then one GLS re-estimation of the factors that weights by the PC
/// residual variances. Loadings stay at the PC estimates; the update is
/// applied exactly once.
inline FactorEstimate estimate_pc_gls_h(const Matrix& X, int r) {
  FactorEstimate est = estimate_pc(X, r);
  est.method = FactorMethod::PC_GLS_H;
  est.factors = gls_project_all(est.loadings, est.idio_var, X);
  est.factor_cov =
      est.factors.transpose() * est.factors / double(est.factors.rows());
  fix_sign(est.factors, est.loadings);
  return est;
}

inline FactorEstimate estimate_pc_gls_h(const Panel& panel, int r) {
  require(panel.is_complete(), "estimate_pc_gls_h: panel has missing entries");
  return estimate_pc_gls_h(panel.values, r);
}

inline constexpr double kArCap = 0.99;

/// AR(1) coefficient of a series by OLS, capped at |rho| <= cap.
inline double fit_ar1(const Vector& e, double cap = kArCap,
                      bool* capped = nullptr) {
  const Index T = e.size();
  require(T >= 3, "fit_ar1: series too short");
  double num = 0.0, den = 0.0;
  for (Index t = 1; t < T; ++t) {
    num += e[t] * e[t - 1];
    den += e[t - 1] * e[t - 1];
  }
  double rho = den > 0.0 ? num / den : 0.0;
  if (std::abs(rho) > cap) {
    rho = rho > 0 ? cap : -cap;
    if (capped) *capped = true;
  }
  return rho;
}

/// PC, then per-series AR(1) fits on the residuals, loadings re-estimated by
/// GLS on quasi-differenced data (the first row enters scaled by
/// sqrt(1-rho^2), so rho = 0 reproduces the plain OLS loadings exactly), and
/// a final GLS factor update weighted by the innovation variances.
/// fixed_rho bypasses the residual AR(1) fits when the persistence is known.
inline FactorEstimate estimate_pc_gls_har(
    const Matrix& X, int r, std::optional<Vector> fixed_rho = std::nullopt) {
  FactorEstimate est = estimate_pc(X, r);
  est.method = FactorMethod::PC_GLS_HAR;
  const Index T = X.rows(), N = X.cols();
  require(!fixed_rho || fixed_rho->size() == N,
          "estimate_pc_gls_har: fixed rho length mismatch");

  Matrix resid = X - est.factors * est.loadings.transpose();
  est.ar_coefs.resize(N);
  Matrix new_load(N, r);
  Vector innov_var(N);
  for (Index i = 0; i < N; ++i) {
    bool capped = false;
    const double rho = fixed_rho ? (*fixed_rho)[i]
                                 : fit_ar1(resid.col(i), kArCap, &capped);
    if (capped) est.diag.rho_capped = true;
    est.ar_coefs[i] = rho;

    const double w1 = std::sqrt(1.0 - rho * rho);
    Vector u(T);
    Matrix W(T, r);
    u[0] = w1 * X(0, i);
    W.row(0) = w1 * est.factors.row(0);
    for (Index t = 1; t < T; ++t) {
      u[t] = X(t, i) - rho * X(t - 1, i);
      W.row(t) = est.factors.row(t) - rho * est.factors.row(t - 1);
    }
    Vector li = ols_solve(W, u);
    new_load.row(i) = li.transpose();
    innov_var[i] =
        std::max((u - W * li).squaredNorm() / double(T), kVarianceFloor);
    if (innov_var[i] == kVarianceFloor) est.diag.heywood = true;
  }
  est.loadings = new_load;
  est.idio_var = innov_var;
  est.factors = gls_project_all(est.loadings, est.idio_var, X);
  est.factor_cov = est.factors.transpose() * est.factors / double(T);
  fix_sign(est.factors, est.loadings);
  return est;
}

inline FactorEstimate estimate_pc_gls_har(const Panel& panel, int r) {
  require(panel.is_complete(), "estimate_pc_gls_har: panel has missing entries");
  return estimate_pc_gls_har(panel.values, r);
}

}  // namespace hfi::factor
