#pragma once

#include "hfi/panel.hpp"
#include "hfi/ssm/model.hpp"

namespace hfi::ssm {

namespace detail {

/// Symmetrize, then clip negative eigenvalues at zero if any fall below a
/// small negative tolerance. The eigenvector pass runs only when needed.
inline Matrix stabilize_cov(const Matrix& P) {
  Matrix S = symmetrize(P);
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() >= -1e-12 * scale) return S;
  es.compute(S);
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix robust_solve(const Matrix& A, const Matrix& B) {
  Eigen::LDLT<Matrix> ldlt(symmetrize(A));
  if (ldlt.info() == Eigen::Success) {
    Matrix X = ldlt.solve(B);
    if (X.allFinite()) return X;
  }
  // singular predicted covariance (deterministic state components)
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(symmetrize(A));
  return cod.solve(B);
}

}  // namespace detail

/// Kalman filter with missing observations: at each period only observed
/// rows update the state; missing rows get zero gain and contribute nothing
/// to the log-likelihood. An empty mask means fully observed.
inline FilterOutput kalman_filter(const StateSpaceModel& model,
                                  const Matrix& Y, const BoolArray& mask = {}) {
  model.validate();
  const Index T = Y.rows(), N = model.obs_dim(), k = model.state_dim();
  require(Y.cols() == N, "kalman_filter: data width mismatch");
  require(mask.size() == 0 || (mask.rows() == T && mask.cols() == N),
          "kalman_filter: mask dimension mismatch");
  require(model.obs_intercept.size() == 0 || model.obs_intercept.rows() == T,
          "kalman_filter: obs_intercept length mismatch");

  FilterOutput out;
  out.predicted_mean.resize(T, k);
  out.filtered_mean.resize(T, k);
  out.predicted_cov.resize(static_cast<std::size_t>(T));
  out.filtered_cov.resize(static_cast<std::size_t>(T));

  Vector a = model.init_mean;
  Matrix P = detail::stabilize_cov(model.init_cov);
  const double log2pi = std::log(2.0 * M_PI);

  std::vector<Index> obs_idx;
  obs_idx.reserve(static_cast<std::size_t>(N));
  for (Index t = 0; t < T; ++t) {
    if (t > 0) {
      a = model.trans_mat * a;
      P = detail::stabilize_cov(model.trans_mat * P * model.trans_mat.transpose() +
                                model.trans_cov);
    }
    out.predicted_mean.row(t) = a.transpose();
    out.predicted_cov[static_cast<std::size_t>(t)] = P;

    obs_idx.clear();
    for (Index i = 0; i < N; ++i)
      if (mask.size() == 0 || mask(t, i)) obs_idx.push_back(i);

    if (!obs_idx.empty()) {
      const Index n = static_cast<Index>(obs_idx.size());
      const Matrix& H_full = model.load_at(t);
      const Vector& R_full = model.noise_at(t);
      Matrix H(n, k);
      Vector v(n), R(n);
      for (Index j = 0; j < n; ++j) {
        const Index i = obs_idx[static_cast<std::size_t>(j)];
        H.row(j) = H_full.row(i);
        R[j] = R_full[i];
        v[j] = Y(t, i) - model.intercept_at(t, i) - H_full.row(i).dot(a);
      }
      Matrix PHt = P * H.transpose();
      Matrix S = H * PHt;
      S.diagonal() += R;
      S = symmetrize(S);
      Eigen::LLT<Matrix> llt(S);
      if (llt.info() != Eigen::Success || !S.allFinite())
        throw std::runtime_error("kalman_filter: non-finite innovation covariance");
      Matrix K = llt.solve(PHt.transpose()).transpose();  // k x n
      a += K * v;
      // Joseph form keeps the update PSD
      Matrix IKH = Matrix::Identity(k, k) - K * H;
      P = detail::stabilize_cov(IKH * P * IKH.transpose() +
                                K * R.asDiagonal() * K.transpose());
      double logdet = 0.0;
      for (Index j = 0; j < n; ++j) logdet += 2.0 * std::log(llt.matrixL()(j, j));
      out.loglik += -0.5 * (double(n) * log2pi + logdet + v.dot(llt.solve(v)));
    }
    out.filtered_mean.row(t) = a.transpose();
    out.filtered_cov[static_cast<std::size_t>(t)] = P;
  }
  return out;
}

inline FilterOutput kalman_filter(const StateSpaceModel& model,
                                  const Panel& data) {
  return kalman_filter(model, data.values, data.mask.observed);
}

/// Fixed-interval (RTS) smoother. Lag-one smoothed cross-covariances come
/// from Cov(s_t, s_{t-1} | Y) = P_{t|T} J_{t-1}'.
inline SmootherOutput kalman_smoother(const StateSpaceModel& model,
                                      const Matrix& Y,
                                      const BoolArray& mask = {},
                                      FilterOutput* filter_out = nullptr) {
  FilterOutput f = kalman_filter(model, Y, mask);
  const Index T = Y.rows(), k = model.state_dim();

  SmootherOutput out;
  out.smoothed_mean.resize(T, k);
  out.smoothed_cov.resize(static_cast<std::size_t>(T));
  out.lag_one_cov.resize(static_cast<std::size_t>(T));

  out.smoothed_mean.row(T - 1) = f.filtered_mean.row(T - 1);
  out.smoothed_cov[static_cast<std::size_t>(T - 1)] =
      f.filtered_cov[static_cast<std::size_t>(T - 1)];

  std::vector<Matrix> J(static_cast<std::size_t>(T));
  for (Index t = T - 2; t >= 0; --t) {
    const Matrix& Pf = f.filtered_cov[static_cast<std::size_t>(t)];
    const Matrix& Pp = f.predicted_cov[static_cast<std::size_t>(t + 1)];
    // J_t = P_{t|t} A' P_{t+1|t}^-1
    J[static_cast<std::size_t>(t)] =
        detail::robust_solve(Pp, model.trans_mat * Pf).transpose();
    const Matrix& Jt = J[static_cast<std::size_t>(t)];
    out.smoothed_mean.row(t) =
        f.filtered_mean.row(t) +
        (Jt * (out.smoothed_mean.row(t + 1) - f.predicted_mean.row(t + 1))
                  .transpose())
            .transpose();
    out.smoothed_cov[static_cast<std::size_t>(t)] = detail::stabilize_cov(
        Pf + Jt *
                 (out.smoothed_cov[static_cast<std::size_t>(t + 1)] - Pp) *
                 Jt.transpose());
  }
  for (Index t = 1; t < T; ++t)
    out.lag_one_cov[static_cast<std::size_t>(t)] =
        out.smoothed_cov[static_cast<std::size_t>(t)] *
        J[static_cast<std::size_t>(t - 1)].transpose();

  if (filter_out) *filter_out = std::move(f);
  return out;
}

inline SmootherOutput kalman_smoother(const StateSpaceModel& model,
                                      const Panel& data,
                                      FilterOutput* filter_out = nullptr) {
  return kalman_smoother(model, data.values, data.mask.observed, filter_out);
}

}  // namespace hfi::ssm
