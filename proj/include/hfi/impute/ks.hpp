#pragma once

#include "hfi/factor/qmle.hpp"
#include "hfi/impute/tp.hpp"
#include "hfi/ssm/builders.hpp"
#include "hfi/ssm/em.hpp"

namespace hfi::impute {

/// Joint-model imputation: EM-fitted dynamic factor model over the panel
/// including the embedded target, smoothed observation prediction at the
/// missing positions.
inline ImputationResult impute_ks(const Panel& panel_with_target,
                                  Index target_col, int r, int p,
                                  const ssm::EmOptions& opts = {}) {
  ssm::EmResult em = ssm::em_dfm(panel_with_target, r, p, opts);
  Vector lam_y = em.estimate.loadings.row(target_col).transpose();
  Vector fitted = em.estimate.factors * lam_y;

  MaskedSeries y{panel_with_target.values.col(target_col),
                 panel_with_target.mask.observed.col(target_col)};
  ImputationResult res =
      ImputationResult::assemble(y, std::move(fitted), Method::KS);
  res.params.target_loading = lam_y;
  res.params.iterations = em.estimate.diag.iterations;
  res.params.converged = em.estimate.diag.converged;
  return res;
}

struct KsStarOptions {
  int max_iter = 200;
  double tol = 1e-6;  // relative log-likelihood change
  std::optional<double> rho_target;      // overrides the backed-out estimate
  std::optional<Vector> rho_predictors;  // overrides the residual AR(1) fits
  double meas_share = 0.1;  // initial share of target error variance in xi
};

namespace detail {

struct KsStarState {
  Matrix pred_load;    // N_o x r
  Vector target_load;  // r
  Vector pred_innov;   // N_o
  double target_innov = 0.0;
  double target_meas = 0.0;
  factor::VarDynamics dyn;
};

}  // namespace detail

/// The hybrid state-space imputer: predictors quasi-differenced at fixed
/// per-series AR(1) coefficients, the target error carried as one appended
/// state with persistence backed out from the low-frequency residuals.
/// Loadings, noise variances and factor dynamics are EM-updated with the
/// AR coefficients held fixed, so the likelihood is monotone; the fill is
/// the smoothed observation prediction Lambda_Y' F_t + err_Y,t.
inline ImputationResult impute_ks_star(const Panel& panel_with_target,
                                       Index target_col, int r, int p,
                                       const KsStarOptions& opts = {}) {
  const Index T = panel_with_target.rows(), N = panel_with_target.cols();
  require(p >= 1 && p <= 2, "impute_ks_star: p must be 1 or 2");
  require(target_col >= 0 && target_col < N, "impute_ks_star: bad target column");
  const Index No = N - 1;
  require(No >= r + 1, "impute_ks_star: too few predictor series");

  // reorder to [predictors, target]
  Matrix X(T, N);
  BoolArray mask(T, N);
  {
    Index c = 0;
    for (Index j = 0; j < N; ++j) {
      if (j == target_col) continue;
      X.col(c) = panel_with_target.values.col(j);
      mask.col(c) = panel_with_target.mask.observed.col(j);
      ++c;
    }
    X.col(No) = panel_with_target.values.col(target_col);
    mask.col(No) = panel_with_target.mask.observed.col(target_col);
  }
  Matrix Xp = X.leftCols(No);
  if (!Xp.allFinite())
    throw std::invalid_argument("impute_ks_star: predictors must be complete");

  // --- two-step initialization from PC / TP
  factor::FactorEstimate pc = factor::estimate_pc(Xp, r);
  detail::KsStarState st;
  st.pred_load = pc.loadings;
  st.dyn = factor::fit_var(pc.factors, p);

  Matrix resid = Xp - pc.common_component();
  Vector rho_pred(No);
  st.pred_innov.resize(No);
  for (Index i = 0; i < No; ++i) {
    rho_pred[i] =
        opts.rho_predictors ? (*opts.rho_predictors)[i] : factor::fit_ar1(resid.col(i));
    double acc = 0.0;
    for (Index t = 1; t < T; ++t) {
      const double u = resid(t, i) - rho_pred[i] * resid(t - 1, i);
      acc += u * u;
    }
    st.pred_innov[i] = std::max(acc / double(T - 1), kVarianceFloor);
  }

  MaskedSeries y{X.col(No), mask.col(No)};
  ImputationResult tp0 = impute_tp(y, pc.factors);
  st.target_load = tp0.params.target_loading;

  double rho_y = 0.0;
  {
    std::vector<Index> obs;
    for (Index s = 0; s < T; ++s)
      if (y.observed[s]) obs.push_back(s);
    Vector u(static_cast<Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i)
      u[static_cast<Index>(i)] = y.values[obs[i]] - tp0.fitted[obs[i]];
    const double rho_low = factor::fit_ar1(u);
    const double share = double(obs.size()) / double(T);
    if (opts.rho_target)
      rho_y = *opts.rho_target;
    else if (rho_low > 0.0 && rho_low < 1.0)
      rho_y = ssm::back_out_target_rho(rho_low, share);
    const double var_e = std::max(u.squaredNorm() / double(u.size() - 1),
                                  kVarianceFloor);
    st.target_innov =
        std::max((1.0 - opts.meas_share) * var_e * (1.0 - rho_y * rho_y),
                 kVarianceFloor);
    st.target_meas = std::max(opts.meas_share * var_e, kVarianceFloor);
  }

  auto assemble = [&](void) {
    return ssm::build_ks_star(st.pred_load, st.target_load, rho_pred, rho_y,
                              st.pred_innov, st.target_innov, st.target_meas,
                              st.dyn, X, mask);
  };

  ssm::StateSpaceModel model = assemble();
  const Matrix P0 = model.init_cov;  // frozen across EM iterations
  const Index k = 2 * r + 1;

  ssm::SmootherOutput sm;
  double prev_ll = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    model = assemble();
    model.init_cov = P0;
    ssm::FilterOutput filt;
    sm = ssm::kalman_smoother(model, X, mask, &filt);
    iterations = it + 1;
    if (it > 0) {
      if (filt.loglik < prev_ll - 1e-8 * (1.0 + std::abs(prev_ll)))
        throw std::runtime_error("impute_ks_star: likelihood decreased");
      if (std::abs(filt.loglik - prev_ll) < opts.tol * (1.0 + std::abs(prev_ll))) {
        converged = true;
        prev_ll = filt.loglik;
        break;
      }
    }
    prev_ll = filt.loglik;

    // smoothed second moments
    std::vector<Matrix> Ess(static_cast<std::size_t>(T));
    for (Index t = 0; t < T; ++t)
      Ess[static_cast<std::size_t>(t)] =
          sm.smoothed_cov[static_cast<std::size_t>(t)] +
          sm.smoothed_mean.row(t).transpose() * sm.smoothed_mean.row(t);

    // predictor loadings and innovation variances (weighted first row)
    for (Index i = 0; i < No; ++i) {
      const double rho = rho_pred[i];
      const double w0 = 1.0 - rho * rho;
      Matrix Di(k, r);  // G_it = Di' s_t with Di depending only on rho_i
      Di.setZero();
      Di.topRows(r) = Matrix::Identity(r, r);
      Di.middleRows(r, r) = -rho * Matrix::Identity(r, r);

      Matrix G = Matrix::Zero(r, r);
      Vector bb = Vector::Zero(r);
      // undifferenced first row, weight (1 - rho^2)
      Matrix EFF0 = Ess[0].topLeftCorner(r, r);
      G += w0 * EFF0;
      bb += w0 * X(0, i) * sm.smoothed_mean.row(0).head(r).transpose();
      for (Index t = 1; t < T; ++t) {
        Matrix EGG = Di.transpose() * Ess[static_cast<std::size_t>(t)] * Di;
        Vector EG = Di.transpose() * sm.smoothed_mean.row(t).transpose();
        const double u = X(t, i) - rho * X(t - 1, i);
        G += EGG;
        bb += u * EG;
      }
      Vector li = G.ldlt().solve(bb);
      st.pred_load.row(i) = li.transpose();

      double acc = w0 * (X(0, i) * X(0, i) -
                         2.0 * X(0, i) * li.dot(sm.smoothed_mean.row(0).head(r)) +
                         li.dot(EFF0 * li));
      for (Index t = 1; t < T; ++t) {
        const double u = X(t, i) - rho * X(t - 1, i);
        Vector EG = Di.transpose() * sm.smoothed_mean.row(t).transpose();
        Matrix EGG = Di.transpose() * Ess[static_cast<std::size_t>(t)] * Di;
        acc += u * u - 2.0 * u * li.dot(EG) + li.dot(EGG * li);
      }
      st.pred_innov[i] = std::max(acc / double(T), kVarianceFloor);
    }

    // target loading and measurement variance over observed rows
    {
      Matrix G = Matrix::Zero(r, r);
      Vector bb = Vector::Zero(r);
      Index n_obs = 0;
      for (Index t = 0; t < T; ++t) {
        if (!mask(t, No)) continue;
        const Matrix& E = Ess[static_cast<std::size_t>(t)];
        G += E.topLeftCorner(r, r);
        // E[F_t err_t] is the (factor, appended) block
        bb += X(t, No) * sm.smoothed_mean.row(t).head(r).transpose() -
              E.block(0, k - 1, r, 1);
        ++n_obs;
      }
      Vector ly = G.ldlt().solve(bb);
      st.target_load = ly;
      double acc = 0.0;
      for (Index t = 0; t < T; ++t) {
        if (!mask(t, No)) continue;
        const Matrix& E = Ess[static_cast<std::size_t>(t)];
        const double yv = X(t, No);
        const double mf = ly.dot(sm.smoothed_mean.row(t).head(r));
        const double me = sm.smoothed_mean(t, k - 1);
        acc += yv * yv - 2.0 * yv * (mf + me) +
               ly.dot(E.topLeftCorner(r, r) * ly) +
               2.0 * ly.dot(E.block(0, k - 1, r, 1).col(0)) + E(k - 1, k - 1);
      }
      st.target_meas = std::max(acc / double(n_obs), kVarianceFloor);
    }

    // target error innovation variance
    {
      double acc = 0.0;
      for (Index t = 1; t < T; ++t) {
        const double e11 = Ess[static_cast<std::size_t>(t)](k - 1, k - 1);
        const double e00 = Ess[static_cast<std::size_t>(t - 1)](k - 1, k - 1);
        const double e10 =
            sm.lag_one_cov[static_cast<std::size_t>(t)](k - 1, k - 1) +
            sm.smoothed_mean(t, k - 1) * sm.smoothed_mean(t - 1, k - 1);
        acc += e11 - 2.0 * rho_y * e10 + rho_y * rho_y * e00;
      }
      st.target_innov = std::max(acc / double(T - 1), kVarianceFloor);
    }

    // factor VAR blocks: regress F_t on the first p*r slots of s_{t-1}
    {
      const Index w = p * r;
      Matrix Sww = Matrix::Zero(w, w);
      Matrix Sfw = Matrix::Zero(r, w);
      Matrix Sff = Matrix::Zero(r, r);
      for (Index t = 1; t < T; ++t) {
        const Matrix& E1 = Ess[static_cast<std::size_t>(t - 1)];
        Matrix Ecross =
            sm.lag_one_cov[static_cast<std::size_t>(t)] +
            sm.smoothed_mean.row(t).transpose() * sm.smoothed_mean.row(t - 1);
        Sww += E1.topLeftCorner(w, w);
        Sfw += Ecross.block(0, 0, r, w);
        Sff += Ess[static_cast<std::size_t>(t)].topLeftCorner(r, r);
      }
      Matrix At = Sww.ldlt().solve(Sfw.transpose());  // w x r
      for (int l = 0; l < p; ++l)
        st.dyn.coefs[static_cast<std::size_t>(l)] =
            At.middleRows(l * r, r).transpose();
      Matrix Afull = At.transpose();
      st.dyn.innov_cov = symmetrize(
          (Sff - Afull * Sfw.transpose() - Sfw * Afull.transpose() +
           Afull * Sww * Afull.transpose()) /
          double(T - 1));
    }
  }

  Vector fitted(T);
  for (Index t = 0; t < T; ++t)
    fitted[t] = st.target_load.dot(sm.smoothed_mean.row(t).head(r)) +
                sm.smoothed_mean(t, k - 1);

  ImputationResult res =
      ImputationResult::assemble(y, std::move(fitted), Method::KS_STAR);
  res.params.target_loading = st.target_load;
  res.params.rho = rho_y;
  res.params.iterations = iterations;
  res.params.converged = converged;
  return res;
}

}  // namespace hfi::impute
