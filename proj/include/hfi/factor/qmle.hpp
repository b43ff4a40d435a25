#pragma once

#include "hfi/factor/gls.hpp"

namespace hfi::factor {

struct QmleOptions {
  int max_iter = 1000;
  double tol = 1e-8;  // relative quasi-log-likelihood change
};

namespace detail {

/// Gaussian quasi-log-likelihood of the factor model with Sigma_F = I:
/// -T/2 (N log 2pi + log|LL' + Phi| + tr(S (LL' + Phi)^-1)), computed
/// through the Woodbury identity so the cost is O(N^2 r) per evaluation.
inline double qmle_loglik(const Matrix& S, const Matrix& L, const Vector& phi,
                          Index T) {
  const Index N = L.rows(), r = L.cols();
  Matrix A = phi.cwiseInverse().asDiagonal() * L;            // N x r
  Matrix M = Matrix::Identity(r, r) + L.transpose() * A;     // I + L'Phi^-1 L
  Eigen::LLT<Matrix> llt(symmetrize(M));
  double logdet = phi.array().log().sum();
  for (Index j = 0; j < r; ++j) logdet += 2.0 * std::log(llt.matrixL()(j, j));
  const double trSPhi = (S.diagonal().array() / phi.array()).sum();
  Matrix B = A.transpose() * S * A;  // r x r
  const double trCorr = (llt.solve(B)).trace();
  return -0.5 * double(T) *
         (double(N) * std::log(2.0 * M_PI) + logdet + trSPhi - trCorr);
}

}  // namespace detail

/// Quasi-maximum-likelihood factor analysis with diagonal idiosyncratic
/// variance, fitted by EM under the Sigma_F = I_r identification. Factors
/// are the GLS projections at the fitted (Lambda, Phi). Non-convergence is
/// flagged on the result, not thrown; the likelihood path is recorded so
/// monotonicity is checkable per iteration.
inline FactorEstimate estimate_mle_h(const Matrix& X, int r,
                                     const QmleOptions& opts = {}) {
  const Index T = X.rows(), N = X.cols();
  require(r >= 1 && r < N, "estimate_mle_h: need 1 <= r < N");
  if (!X.allFinite())
    throw std::invalid_argument("estimate_mle_h: missing entries present");

  Matrix Xc = X.rowwise() - X.colwise().mean();
  Matrix S = Xc.transpose() * Xc / double(T);

  FactorEstimate init = estimate_pc(X, r);
  Matrix L = init.loadings;
  Vector phi = init.idio_var;

  FactorEstimate est;
  est.method = FactorMethod::MLE_H;
  est.diag.converged = false;
  double prev = detail::qmle_loglik(S, L, phi, T);
  est.diag.loglik_path.push_back(prev);

  for (int it = 0; it < opts.max_iter; ++it) {
    // E-step: posterior moments of f_t given x_t under the current theta
    Matrix A = phi.cwiseInverse().asDiagonal() * L;
    Matrix M = Matrix::Identity(r, r) + L.transpose() * A;
    Matrix beta = M.ldlt().solve(A.transpose());          // r x N
    Matrix betaS = beta * S;                              // r x N
    Matrix Omega = Matrix::Identity(r, r) - beta * L +
                   betaS * beta.transpose();              // E[ff']/T

    // M-step
    Matrix Lnew = betaS.transpose() * Omega.ldlt().solve(
                                          Matrix::Identity(r, r));
    Vector phinew =
        (S - Lnew * betaS).diagonal().cwiseMax(kVarianceFloor);
    if ((phinew.array() <= kVarianceFloor).any()) est.diag.heywood = true;

    L = Lnew;
    phi = phinew;
    const double ll = detail::qmle_loglik(S, L, phi, T);
    est.diag.loglik_path.push_back(ll);
    est.diag.iterations = it + 1;
    if (std::abs(ll - prev) < opts.tol * (1.0 + std::abs(prev))) {
      est.diag.converged = true;
      prev = ll;
      break;
    }
    prev = ll;
  }

  est.loadings = L;
  est.idio_var = phi;
  est.factor_cov = Matrix::Identity(r, r);
  est.factors = gls_project_all(L, phi, Xc);
  fix_sign(est.factors, est.loadings);
  return est;
}

inline FactorEstimate estimate_mle_h(const Panel& panel, int r,
                                     const QmleOptions& opts = {}) {
  require(panel.is_complete(), "estimate_mle_h: panel has missing entries");
  return estimate_mle_h(panel.values, r, opts);
}

}  // namespace hfi::factor
