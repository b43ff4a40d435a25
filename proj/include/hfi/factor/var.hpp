#pragma once

#include "hfi/factor/estimate.hpp"

namespace hfi::factor {

/// Equation-by-equation least-squares VAR(p) on centered factors, no
/// intercept. If the companion spectral radius reaches 1 - 1e-6 the lag
/// matrices are scaled toward stationarity (A_k by delta^k) and the fit is
/// flagged shrunk.
inline VarDynamics fit_var(const Matrix& F, int p) {
  const Index T = F.rows(), r = F.cols();
  require(p >= 1, "fit_var: order must be >= 1");
  require(T > r * p + 1, "fit_var: insufficient observations");

  Matrix W(T - p, r * p);
  Matrix Y = F.bottomRows(T - p);
  for (int k = 0; k < p; ++k)
    W.middleCols(k * r, r) = F.middleRows(p - 1 - k, T - p);
  Matrix coef = ols_solve_multi(W, Y);  // (rp) x r

  VarDynamics dyn;
  dyn.order = p;
  dyn.coefs.reserve(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k)
    dyn.coefs.push_back(coef.middleRows(k * r, r).transpose());
  Matrix resid = Y - W * coef;
  dyn.innov_cov = resid.transpose() * resid / double(T - p);

  constexpr double limit = 1.0 - 1e-6;
  const double radius = dyn.companion_spectral_radius();
  if (radius >= limit) {
    const double delta = limit / radius;
    double dk = delta;
    for (auto& A : dyn.coefs) {
      A *= dk;
      dk *= delta;
    }
    dyn.shrunk = true;
  }
  return dyn;
}

/// Within-sample stationary autocovariance of the stacked factor path
/// vec(F') implied by the VAR: block (t, s) is Cov(F_t, F_s). Used by the
/// dense joint-projection oracle and small exact computations; O((rT)^2).
inline Matrix stacked_autocovariance(const VarDynamics& dyn, Index T) {
  const Index r = dyn.dim();
  Matrix C = dyn.companion();
  Matrix G0 = solve_discrete_lyapunov(C, dyn.companion_innov_cov());
  // Gamma(h) = Cov(G_{t+h}, G_t) = C^h G0; factor block is top-left r x r
  std::vector<Matrix> gamma(static_cast<std::size_t>(T));
  gamma[0] = G0;
  for (Index h = 1; h < T; ++h) gamma[static_cast<std::size_t>(h)] = C * gamma[static_cast<std::size_t>(h - 1)];
  Matrix S(r * T, r * T);
  for (Index t = 0; t < T; ++t)
    for (Index s = 0; s < T; ++s) {
      const Matrix& g = gamma[static_cast<std::size_t>(std::abs(t - s))];
      Matrix blk = g.topLeftCorner(r, r);
      S.block(t * r, s * r, r, r) = (t >= s) ? blk : Matrix(blk.transpose());
    }
  return S;
}

}  // namespace hfi::factor
