#pragma once

#include "hfi/factor/gls.hpp"
#include "hfi/factor/var.hpp"
#include "hfi/ssm/kalman.hpp"

namespace hfi::factor {

namespace detail {

/// Factor-only state-space model: companion state (F_t,...,F_{t-p+1}),
/// observation through the loadings, stationary initial moments.
inline ssm::StateSpaceModel factor_ssm(const Matrix& loadings,
                                       const Vector& idio_var,
                                       const VarDynamics& dyn) {
  const Index r = loadings.cols();
  const Index k = r * dyn.order;
  ssm::StateSpaceModel m;
  m.obs_load = Matrix::Zero(loadings.rows(), k);
  m.obs_load.leftCols(r) = loadings;
  m.obs_noise_var = idio_var.cwiseMax(kObsNoiseFloor);
  m.trans_mat = dyn.companion();
  m.trans_cov = dyn.companion_innov_cov();
  m.init_mean = Vector::Zero(k);
  if (dyn.companion_spectral_radius() < 1.0 - 1e-9)
    m.init_cov = solve_discrete_lyapunov(m.trans_mat, m.trans_cov);
  else
    m.init_cov = 1e6 * Matrix::Identity(k, k);
  m.layout = ssm::StateLayout{r, dyn.order, 0};
  return m;
}

}  // namespace detail

/// PC initialization, a VAR(p) on the PC factors and a Kalman-smoother pass.
/// On complete data the smoothed factors coincide with the dense joint
/// projection that stacks all periods.
inline FactorEstimate estimate_pc_ks(const Matrix& X, int r,
                                     const VarDynamics& dyn) {
  FactorEstimate est = estimate_pc(X, r);
  est.method = FactorMethod::PC_KS;
  est.diag.var_shrunk = dyn.shrunk;

  ssm::StateSpaceModel model = detail::factor_ssm(est.loadings, est.idio_var, dyn);
  ssm::SmootherOutput sm = ssm::kalman_smoother(model, X);
  est.factors = sm.smoothed_mean.leftCols(r);
  est.factor_cov = model.init_cov.topLeftCorner(r, r);
  est.dynamics = dyn;
  return est;
}

inline FactorEstimate estimate_pc_ks(const Matrix& X, int r, int p = 1) {
  FactorEstimate pc = estimate_pc(X, r);
  VarDynamics dyn = fit_var(pc.factors, p);
  return estimate_pc_ks(X, r, dyn);
}

inline FactorEstimate estimate_pc_ks(const Panel& panel, int r, int p = 1) {
  require(panel.is_complete(), "estimate_pc_ks: panel has missing entries");
  return estimate_pc_ks(panel.values, r, p);
}

}  // namespace hfi::factor
