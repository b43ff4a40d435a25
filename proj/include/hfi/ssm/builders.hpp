#pragma once

#include "hfi/factor/estimate.hpp"
#include "hfi/ssm/model.hpp"

namespace hfi::ssm {

namespace detail {

/// Transition blocks for a state carrying (F_t, F_{t-1}): VAR(1) puts A in
/// the top-left block, VAR(2) fills both lag blocks.
inline Matrix two_lag_trans(const factor::VarDynamics& dyn) {
  require(dyn.order <= 2, "quasi-differenced builders support VAR order <= 2");
  const Index r = dyn.dim();
  Matrix T = Matrix::Zero(2 * r, 2 * r);
  T.topLeftCorner(r, r) = dyn.coefs[0];
  if (dyn.order == 2) T.block(0, r, r, r) = dyn.coefs[1];
  T.block(r, 0, r, r) = Matrix::Identity(r, r);
  return T;
}

inline Matrix stationary_init(const Matrix& trans, const Matrix& cov) {
  if (spectral_radius(trans) < 1.0 - 1e-9)
    return solve_discrete_lyapunov(trans, cov);
  return 1e6 * Matrix::Identity(trans.rows(), trans.cols());
}

}  // namespace detail

/// Quasi-differencing (Method A): every row of the observation equation is
/// transformed by (1 - rho_i L), which moves the AR(1) error into white
/// noise at the cost of a data-dependent intercept rho_i * X_{i,t-1} and the
/// doubled state (F_t, F_{t-1}). The first period stays undifferenced with
/// stationary error variance, so the transformed model has exactly the
/// likelihood of the untransformed one. Requires complete data.
inline StateSpaceModel build_method_a(const Matrix& loadings,
                                      const Vector& rho,
                                      const Vector& innov_var,
                                      const factor::VarDynamics& dyn,
                                      const Matrix& X) {
  const Index N = loadings.rows(), r = loadings.cols(), T = X.rows();
  require(rho.size() == N && innov_var.size() == N,
          "build_method_a: per-series parameter length mismatch");
  require(X.cols() == N, "build_method_a: data width mismatch");
  if (!X.allFinite())
    throw std::invalid_argument(
        "build_method_a: quasi-differencing requires fully observed series");

  StateSpaceModel m;
  m.layout = StateLayout{r, 2, 0};
  m.obs_load.resize(N, 2 * r);
  m.obs_load.leftCols(r) = loadings;
  m.obs_load.rightCols(r) = -(rho.asDiagonal() * loadings);
  m.obs_noise_var = innov_var.cwiseMax(kObsNoiseFloor);

  Matrix first_load = Matrix::Zero(N, 2 * r);
  first_load.leftCols(r) = loadings;
  m.obs_load_first = first_load;
  Vector first_noise(N);
  for (Index i = 0; i < N; ++i)
    first_noise[i] = std::max(innov_var[i] / (1.0 - rho[i] * rho[i]),
                              kObsNoiseFloor);
  m.obs_noise_first = first_noise;

  m.obs_intercept = Matrix::Zero(T, N);
  for (Index t = 1; t < T; ++t)
    m.obs_intercept.row(t) = (rho.array() * X.row(t - 1).transpose().array())
                                 .matrix()
                                 .transpose();

  m.trans_mat = detail::two_lag_trans(dyn);
  m.trans_cov = Matrix::Zero(2 * r, 2 * r);
  m.trans_cov.topLeftCorner(r, r) = dyn.innov_cov;
  m.init_mean = Vector::Zero(2 * r);
  m.init_cov = detail::stationary_init(m.trans_mat, m.trans_cov);
  m.validate();
  return m;
}

/// State expansion (Method B): the AR(1) error of every series becomes a
/// state, so missing data anywhere is fine but the state dimension grows
/// with N.
inline StateSpaceModel build_method_b(const Matrix& loadings,
                                      const Vector& rho,
                                      const Vector& innov_var,
                                      const Vector& meas_var,
                                      const factor::VarDynamics& dyn) {
  const Index N = loadings.rows(), r = loadings.cols();
  require(rho.size() == N && innov_var.size() == N && meas_var.size() == N,
          "build_method_b: per-series parameter length mismatch");
  const Index kf = r * dyn.order;
  const Index k = kf + N;

  StateSpaceModel m;
  m.layout = StateLayout{r, dyn.order, N};
  m.obs_load = Matrix::Zero(N, k);
  m.obs_load.leftCols(r) = loadings;
  m.obs_load.rightCols(N) = Matrix::Identity(N, N);
  m.obs_noise_var = meas_var.cwiseMax(kObsNoiseFloor);

  m.trans_mat = Matrix::Zero(k, k);
  m.trans_mat.topLeftCorner(kf, kf) = dyn.companion();
  m.trans_mat.bottomRightCorner(N, N) = rho.asDiagonal();
  m.trans_cov = Matrix::Zero(k, k);
  m.trans_cov.topLeftCorner(kf, kf) = dyn.companion_innov_cov();
  m.trans_cov.bottomRightCorner(N, N) = innov_var.asDiagonal();

  m.init_mean = Vector::Zero(k);
  m.init_cov = Matrix::Zero(k, k);
  m.init_cov.topLeftCorner(kf, kf) = detail::stationary_init(
      dyn.companion(), dyn.companion_innov_cov());
  for (Index i = 0; i < N; ++i)
    m.init_cov(kf + i, kf + i) = innov_var[i] / (1.0 - rho[i] * rho[i]);
  m.validate();
  return m;
}

/// The hybrid system: completely observed predictors are quasi-differenced
/// (Method A treatment) while the incompletely observed target keeps its
/// serially correlated error as one appended state (Method B treatment).
/// State is (F_t, F_{t-1}, err_Y), dimension 2r + 1 regardless of N. The
/// target series must be the last column of X.
inline StateSpaceModel build_ks_star(const Matrix& pred_loadings,
                                     const Vector& target_loading,
                                     const Vector& rho_pred,
                                     double rho_target,
                                     const Vector& pred_innov_var,
                                     double target_innov_var,
                                     double target_meas_var,
                                     const factor::VarDynamics& dyn,
                                     const Matrix& X,
                                     const BoolArray& mask) {
  const Index No = pred_loadings.rows(), r = pred_loadings.cols();
  const Index N = No + 1, T = X.rows();
  require(X.cols() == N, "build_ks_star: X must stack predictors then target");
  require(rho_pred.size() == No && pred_innov_var.size() == No,
          "build_ks_star: predictor parameter length mismatch");
  require(target_loading.size() == r, "build_ks_star: target loading size");
  for (Index i = 0; i < No; ++i)
    for (Index t = 0; t < T; ++t)
      if (!mask(t, i))
        throw std::invalid_argument(
            "build_ks_star: predictor series must be fully observed");

  const Index k = 2 * r + 1;
  StateSpaceModel m;
  m.layout = StateLayout{r, 2, 1};
  m.obs_load = Matrix::Zero(N, k);
  m.obs_load.block(0, 0, No, r) = pred_loadings;
  m.obs_load.block(0, r, No, r) = -(rho_pred.asDiagonal() * pred_loadings);
  m.obs_load.row(No).head(r) = target_loading.transpose();
  m.obs_load(No, k - 1) = 1.0;

  Matrix first_load = m.obs_load;
  first_load.block(0, r, No, r).setZero();
  m.obs_load_first = first_load;

  m.obs_noise_var.resize(N);
  m.obs_noise_var.head(No) = pred_innov_var.cwiseMax(kObsNoiseFloor);
  m.obs_noise_var[No] = std::max(target_meas_var, kObsNoiseFloor);
  Vector first_noise = m.obs_noise_var;
  for (Index i = 0; i < No; ++i)
    first_noise[i] = std::max(
        pred_innov_var[i] / (1.0 - rho_pred[i] * rho_pred[i]), kObsNoiseFloor);
  m.obs_noise_first = first_noise;

  m.obs_intercept = Matrix::Zero(T, N);
  for (Index t = 1; t < T; ++t)
    for (Index i = 0; i < No; ++i)
      m.obs_intercept(t, i) = rho_pred[i] * X(t - 1, i);

  m.trans_mat = Matrix::Zero(k, k);
  m.trans_mat.topLeftCorner(2 * r, 2 * r) = detail::two_lag_trans(dyn);
  m.trans_mat(k - 1, k - 1) = rho_target;
  m.trans_cov = Matrix::Zero(k, k);
  m.trans_cov.topLeftCorner(r, r) = dyn.innov_cov;
  m.trans_cov(k - 1, k - 1) = target_innov_var;

  m.init_mean = Vector::Zero(k);
  m.init_cov = Matrix::Zero(k, k);
  m.init_cov.topLeftCorner(2 * r, 2 * r) = detail::stationary_init(
      m.trans_mat.topLeftCorner(2 * r, 2 * r), m.trans_cov.topLeftCorner(2 * r, 2 * r));
  m.init_cov(k - 1, k - 1) =
      target_innov_var / (1.0 - rho_target * rho_target);
  m.validate();
  return m;
}

/// Maps a low-frequency AR(1) estimate of the target error back to its
/// per-sub-period persistence. Skip-sampling an AR(1)(rho) every m-th point
/// leaves persistence rho^m, so with share = share of observed sub-periods
/// (1/m in the regular case) the high-frequency coefficient is
/// rho_hat^share.
inline double back_out_target_rho(double rho_hat, double share_observed) {
  require(rho_hat > 0.0 && rho_hat < 1.0,
          "back_out_target_rho: rho_hat must be in (0,1)");
  require(share_observed > 0.0 && share_observed <= 1.0,
          "back_out_target_rho: share must be in (0,1]");
  return std::pow(rho_hat, share_observed);
}

}  // namespace hfi::ssm
