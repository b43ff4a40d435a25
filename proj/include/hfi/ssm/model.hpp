#pragma once

#include <optional>
#include <vector>

#include "hfi/common.hpp"
#include "hfi/linalg.hpp"

namespace hfi::ssm {

/// How the state vector is laid out: factor lag blocks first (F_t, F_{t-1},
/// ..., q blocks of size r), then appended idiosyncratic error states.
struct StateLayout {
  Index n_factors = 0;
  int factor_lags = 1;
  Index n_appended = 0;

  Index dim() const { return n_factors * factor_lags + n_appended; }
  Index factor_offset(int lag) const { return lag * n_factors; }
  Index appended_offset(Index i) const {
    return n_factors * factor_lags + i;
  }
};

/// Linear-Gaussian state-space model with diagonal observation noise, a
/// per-period observation intercept (the quasi-differencing carry term) and
/// an optional first-period observation override for quasi-differenced rows,
/// whose boundary period is undifferenced with stationary error variance.
struct StateSpaceModel {
  Matrix obs_load;       // N x k
  Matrix obs_intercept;  // T x N; empty means zero
  Vector obs_noise_var;  // N, diagonal
  Matrix trans_mat;      // k x k
  Matrix trans_cov;      // k x k, PSD
  Vector init_mean;      // k
  Matrix init_cov;       // k x k
  std::optional<Matrix> obs_load_first;
  std::optional<Vector> obs_noise_first;
  StateLayout layout;

  Index state_dim() const { return trans_mat.rows(); }
  Index obs_dim() const { return obs_load.rows(); }

  const Matrix& load_at(Index t) const {
    return (t == 0 && obs_load_first) ? *obs_load_first : obs_load;
  }
  const Vector& noise_at(Index t) const {
    return (t == 0 && obs_noise_first) ? *obs_noise_first : obs_noise_var;
  }
  double intercept_at(Index t, Index i) const {
    return obs_intercept.size() == 0 ? 0.0 : obs_intercept(t, i);
  }

  void validate() const {
    const Index k = state_dim(), n = obs_dim();
    require(obs_load.cols() == k, "StateSpaceModel: obs_load column mismatch");
    require(trans_mat.cols() == k, "StateSpaceModel: trans_mat not square");
    require(trans_cov.rows() == k && trans_cov.cols() == k,
            "StateSpaceModel: trans_cov dimension mismatch");
    require(obs_noise_var.size() == n,
            "StateSpaceModel: obs_noise_var length mismatch");
    require(init_mean.size() == k && init_cov.rows() == k && init_cov.cols() == k,
            "StateSpaceModel: initial state dimension mismatch");
    require(obs_intercept.size() == 0 || obs_intercept.cols() == n,
            "StateSpaceModel: obs_intercept column mismatch");
    if (obs_load_first)
      require(obs_load_first->rows() == n && obs_load_first->cols() == k,
              "StateSpaceModel: first-period load mismatch");
    if (obs_noise_first)
      require(obs_noise_first->size() == n,
              "StateSpaceModel: first-period noise mismatch");
    require(obs_noise_var.minCoeff() >= kObsNoiseFloor,
            "StateSpaceModel: observation noise below floor");
    require(layout.dim() == k, "StateSpaceModel: layout does not cover state");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(trans_cov),
                                             Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -1e-8 * (1.0 + trans_cov.norm()),
            "StateSpaceModel: trans_cov not PSD");
  }
};

struct FilterOutput {
  Matrix predicted_mean;  // T x k, a_{t|t-1}
  Matrix filtered_mean;   // T x k, a_{t|t}
  std::vector<Matrix> predicted_cov;
  std::vector<Matrix> filtered_cov;
  double loglik = 0.0;
};

struct SmootherOutput {
  Matrix smoothed_mean;  // T x k
  std::vector<Matrix> smoothed_cov;
  /// lag_one_cov[t] = Cov(s_t, s_{t-1} | all data), defined for t >= 1.
  std::vector<Matrix> lag_one_cov;
};

}  // namespace hfi::ssm
