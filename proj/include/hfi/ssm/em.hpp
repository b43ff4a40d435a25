#pragma once

#include "hfi/factor/pc.hpp"
#include "hfi/factor/pc_ks.hpp"
#include "hfi/factor/var.hpp"
#include "hfi/ssm/kalman.hpp"

namespace hfi::ssm {

struct EmOptions {
  int max_iter = 500;
  double tol = 1e-8;  // relative log-likelihood change
};

struct EmResult {
  StateSpaceModel model;
  factor::FactorEstimate estimate;
};

namespace detail {

/// Stock-Watson style completion used only for initialization: fill masked
/// entries with the column mean of the observed ones, then alternate PC and
/// refilling a few times.
inline Matrix pc_completed(const Matrix& values, const BoolArray& mask, int r,
                           int sweeps = 3) {
  Matrix X = values;
  const Index T = X.rows(), N = X.cols();
  for (Index j = 0; j < N; ++j) {
    double sum = 0.0;
    Index n = 0;
    for (Index i = 0; i < T; ++i)
      if (mask(i, j)) {
        sum += X(i, j);
        ++n;
      }
    const double mean = n > 0 ? sum / double(n) : 0.0;
    for (Index i = 0; i < T; ++i)
      if (!mask(i, j)) X(i, j) = mean;
  }
  for (int s = 0; s < sweeps; ++s) {
    factor::FactorEstimate pc = factor::estimate_pc(X, r);
    Matrix fitted = pc.common_component();
    for (Index j = 0; j < N; ++j)
      for (Index i = 0; i < T; ++i)
        if (!mask(i, j)) X(i, j) = fitted(i, j);
  }
  return X;
}

}  // namespace detail

/// EM estimation of the dynamic factor model X_t = Lambda F_t + e_t with
/// VAR(p) factors and diagonal noise, under arbitrary missing-data patterns.
/// p = 0 fits the static model (no transition update). Initialization is PC
/// on a Stock-Watson-completed matrix. The initial state distribution is
/// fixed at the unconditional moments of the initial parameters so every
/// M-step is an exact maximizer and the likelihood cannot decrease; a
/// decrease beyond 1e-8 aborts with a diagnostic.
inline EmResult em_dfm(const Panel& panel, int r, int p,
                       const EmOptions& opts = {}) {
  require(r >= 1, "em_dfm: r must be >= 1");
  require(p >= 0, "em_dfm: p must be >= 0");
  const Index T = panel.rows(), N = panel.cols();
  const BoolArray& mask = panel.mask.observed;

  // --- initialization from completed-data PC
  Matrix X0 = detail::pc_completed(panel.values, mask, r);
  factor::FactorEstimate pc = factor::estimate_pc(X0, r);
  Matrix loadings = pc.loadings;
  Vector phi = pc.idio_var;

  const int q = std::max(p, 1);  // state lags (static model keeps one block)
  const Index k = r * q;
  std::vector<Matrix> A(static_cast<std::size_t>(std::max(p, 0)));
  Matrix sigma_eta;
  if (p >= 1) {
    factor::VarDynamics dyn = factor::fit_var(pc.factors, p);
    for (int i = 0; i < p; ++i) A[static_cast<std::size_t>(i)] = dyn.coefs[static_cast<std::size_t>(i)];
    sigma_eta = dyn.innov_cov;
  } else {
    sigma_eta = pc.factors.transpose() * pc.factors / double(T);
  }

  auto assemble = [&](void) -> StateSpaceModel {
    StateSpaceModel m;
    m.layout = StateLayout{r, q, 0};
    m.obs_load = Matrix::Zero(N, k);
    m.obs_load.leftCols(r) = loadings;
    m.obs_noise_var = phi.cwiseMax(kObsNoiseFloor);
    m.trans_mat = Matrix::Zero(k, k);
    for (int i = 0; i < p; ++i)
      m.trans_mat.block(0, i * r, r, r) = A[static_cast<std::size_t>(i)];
    if (q > 1)
      m.trans_mat.block(r, 0, r * (q - 1), r * (q - 1)) =
          Matrix::Identity(r * (q - 1), r * (q - 1));
    m.trans_cov = Matrix::Zero(k, k);
    m.trans_cov.topLeftCorner(r, r) = sigma_eta;
    m.init_mean = Vector::Zero(k);
    m.init_cov = Matrix::Zero(k, k);  // set by caller
    return m;
  };

  StateSpaceModel model = assemble();
  Matrix P0;
  if (spectral_radius(model.trans_mat) < 1.0 - 1e-9)
    P0 = solve_discrete_lyapunov(model.trans_mat, model.trans_cov);
  else
    P0 = 1e6 * Matrix::Identity(k, k);

  factor::FactorEstimate est;
  est.method = factor::FactorMethod::EM_DFM;
  est.diag.converged = false;

  SmootherOutput sm;
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    model = assemble();
    model.init_cov = P0;

    FilterOutput filt;
    sm = kalman_smoother(model, panel.values, mask, &filt);
    est.diag.loglik_path.push_back(filt.loglik);
    est.diag.iterations = it + 1;
    if (it > 0) {
      if (filt.loglik < prev_ll - 1e-8 * (1.0 + std::abs(prev_ll)))
        throw std::runtime_error(
            "em_dfm: likelihood decreased at iteration " + std::to_string(it) +
            " (" + std::to_string(prev_ll) + " -> " + std::to_string(filt.loglik) + ")");
      if (std::abs(filt.loglik - prev_ll) <
          opts.tol * (1.0 + std::abs(prev_ll))) {
        est.diag.converged = true;
        prev_ll = filt.loglik;
        break;
      }
    }
    prev_ll = filt.loglik;

    // --- E moments
    // Second moments of F_t and of the stacked state, plus lagged crosses.
    std::vector<Matrix> EFF(static_cast<std::size_t>(T));
    for (Index t = 0; t < T; ++t)
      EFF[static_cast<std::size_t>(t)] =
          sm.smoothed_cov[static_cast<std::size_t>(t)].topLeftCorner(r, r) +
          sm.smoothed_mean.row(t).head(r).transpose() *
              sm.smoothed_mean.row(t).head(r);

    // --- M-step: loadings and noise, series by series over observed periods
    bool heywood = false;
    for (Index i = 0; i < N; ++i) {
      Matrix G = Matrix::Zero(r, r);
      Vector b = Vector::Zero(r);
      Index n_obs = 0;
      for (Index t = 0; t < T; ++t) {
        if (!mask(t, i)) continue;
        G += EFF[static_cast<std::size_t>(t)];
        b += panel.values(t, i) * sm.smoothed_mean.row(t).head(r).transpose();
        ++n_obs;
      }
      if (n_obs == 0) continue;  // fully missing series keeps its loadings
      Vector li = G.ldlt().solve(b);
      loadings.row(i) = li.transpose();
      double acc = 0.0;
      for (Index t = 0; t < T; ++t) {
        if (!mask(t, i)) continue;
        const double x = panel.values(t, i);
        const double fit = li.dot(sm.smoothed_mean.row(t).head(r));
        acc += x * x - 2.0 * x * fit +
               li.dot(EFF[static_cast<std::size_t>(t)] * li);
      }
      phi[i] = std::max(acc / double(n_obs), kVarianceFloor);
      if (phi[i] == kVarianceFloor) heywood = true;
    }
    est.diag.heywood = est.diag.heywood || heywood;

    // --- M-step: transition
    if (p >= 1) {
      Matrix Sww = Matrix::Zero(k, k);   // sum E[s_{t-1} s_{t-1}']
      Matrix Sfw = Matrix::Zero(r, k);   // sum E[F_t s_{t-1}']
      Matrix Sff = Matrix::Zero(r, r);   // sum E[F_t F_t']
      for (Index t = 1; t < T; ++t) {
        Matrix Ess1 =
            sm.smoothed_cov[static_cast<std::size_t>(t - 1)] +
            sm.smoothed_mean.row(t - 1).transpose() * sm.smoothed_mean.row(t - 1);
        Matrix Ecross =
            sm.lag_one_cov[static_cast<std::size_t>(t)] +
            sm.smoothed_mean.row(t).transpose() * sm.smoothed_mean.row(t - 1);
        Sww += Ess1;
        Sfw += Ecross.topRows(r);
        Sff += EFF[static_cast<std::size_t>(t)];
      }
      Matrix At = Sww.ldlt().solve(Sfw.transpose());  // k x r, stacked A'
      for (int i = 0; i < p; ++i)
        A[static_cast<std::size_t>(i)] = At.middleRows(i * r, r).transpose();
      Matrix Afull = At.transpose();  // r x k
      sigma_eta = symmetrize((Sff - Afull * Sfw.transpose() -
                              Sfw * Afull.transpose() +
                              Afull * Sww * Afull.transpose()) /
                             double(T - 1));
    } else {
      Matrix Sff = Matrix::Zero(r, r);
      for (Index t = 0; t < T; ++t) Sff += EFF[static_cast<std::size_t>(t)];
      sigma_eta = symmetrize(Sff / double(T));
    }
  }

  // Sign convention: flip factor columns so the largest-absolute loading is
  // positive. A flip S maps the transition to S A S and covariances to
  // S Sigma S, leaving the model's law unchanged.
  Vector s = Vector::Ones(r);
  for (Index j = 0; j < r; ++j) {
    Index imax = 0;
    loadings.col(j).cwiseAbs().maxCoeff(&imax);
    if (loadings(imax, j) < 0.0) s[j] = -1.0;
  }
  Matrix S = s.asDiagonal();
  Matrix Sk = Matrix::Zero(k, k);
  for (int l = 0; l < q; ++l) Sk.block(l * r, l * r, r, r) = S;
  loadings = loadings * S;
  for (auto& Ak : A) Ak = S * Ak * S;
  sigma_eta = S * sigma_eta * S;
  P0 = Sk * P0 * Sk;

  est.factors = sm.smoothed_mean.leftCols(r) * S;
  est.loadings = loadings;
  est.idio_var = phi;
  if (p >= 1) {
    factor::VarDynamics dyn;
    dyn.order = p;
    dyn.coefs = A;
    dyn.innov_cov = sigma_eta;
    est.dynamics = dyn;
    est.factor_cov = P0.topLeftCorner(r, r);
  } else {
    est.factor_cov = sigma_eta;
  }
  model = assemble();
  model.init_cov = P0;
  EmResult res;
  res.model = std::move(model);
  res.estimate = std::move(est);
  return res;
}

}  // namespace hfi::ssm
