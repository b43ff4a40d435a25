#pragma once

#include "hfi/impute/result.hpp"
#include "hfi/linalg.hpp"
#include "hfi/time_grid.hpp"

namespace hfi::impute {

/// Fitted Chow-Lin bridge model for a stock target. The AR(1) parameter of
/// the high-frequency error is profiled out of a Gaussian likelihood; the
/// weights matrix distributes the low-frequency residuals over sub-periods.
struct ChowLinFit {
  Vector beta_gls;      // intercept first, then the K predictor coefficients
  double rho = 0.0;
  Vector low_residuals; // T_o
  Matrix low_cov;       // V_L at the fitted rho (unit innovation variance)
  Matrix weights;       // T x T_o residual-distribution matrix
  double loglik = 0.0;  // profiled Gaussian log-likelihood at the fit
  int release_sub = -1;
};

struct ChowLinOptions {
  double rho_min = -0.99;
  double rho_max = 0.99;
  double rho_step = 0.01;
  bool refine = true;  // golden-section pass around the best grid point
  int release_sub = -1;
};

namespace detail {

/// V_L for a stock target: the release-index submatrix of the AR(1)
/// covariance rho^|i-j| / (1 - rho^2).
inline Matrix chow_lin_low_cov(const std::vector<Index>& rel, double rho) {
  const Index To = static_cast<Index>(rel.size());
  const double scale = 1.0 / (1.0 - rho * rho);
  Matrix V(To, To);
  for (Index a = 0; a < To; ++a)
    for (Index b = 0; b < To; ++b)
      V(a, b) = scale * std::pow(rho, double(std::abs(rel[static_cast<std::size_t>(a)] -
                                                      rel[static_cast<std::size_t>(b)])));
  return V;
}

struct ChowLinEval {
  double loglik;
  Vector beta;
  Vector resid;
  Matrix low_cov;
};

inline ChowLinEval chow_lin_profile(const Vector& y, const Matrix& ZL,
                                    const std::vector<Index>& rel, double rho) {
  const Index To = y.size();
  ChowLinEval ev;
  ev.low_cov = chow_lin_low_cov(rel, rho);
  Eigen::LLT<Matrix> llt(ev.low_cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("fit_chow_lin: V_L not positive definite");
  Matrix WZ = llt.solve(ZL);
  Matrix G = ZL.transpose() * WZ;
  Eigen::FullPivLU<Matrix> lu(G);
  if (!lu.isInvertible())
    throw std::runtime_error("fit_chow_lin: singular Z_L' V_L^-1 Z_L");
  ev.beta = lu.solve(ZL.transpose() * llt.solve(y));
  ev.resid = y - ZL * ev.beta;
  const double quad = ev.resid.dot(llt.solve(ev.resid));
  const double sigma2 = quad / double(To);
  double logdet = 0.0;
  for (Index i = 0; i < To; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  ev.loglik = -0.5 * (double(To) * std::log(sigma2) + logdet);
  return ev;
}

}  // namespace detail

/// Profiles the Gaussian likelihood of the bridge equation over an AR(1)
/// grid (with golden-section refinement) and returns the maximizing fit.
/// An intercept is always included ahead of the Z columns. The observed
/// positions of the target define the selection matrix C, so irregular
/// release patterns are handled the same way as fixed ones.
inline ChowLinFit fit_chow_lin(const Vector& y_low,
                               const std::vector<Index>& rel,
                               const Matrix& Z_high,
                               const ChowLinOptions& opts = {}) {
  const Index To = y_low.size(), T = Z_high.rows();
  require(static_cast<Index>(rel.size()) == To,
          "fit_chow_lin: release index count mismatch");
  for (Index idx : rel)
    require(idx >= 0 && idx < T, "fit_chow_lin: release index out of range");
  require(Z_high.cols() + 1 < To,
          "fit_chow_lin: more regressors than low-frequency periods");
  Matrix ZL(To, Z_high.cols() + 1);
  ZL.col(0).setOnes();
  for (Index t = 0; t < To; ++t)
    ZL.row(t).tail(Z_high.cols()) = Z_high.row(rel[static_cast<std::size_t>(t)]);

  double best_rho = 0.0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double rho = opts.rho_min; rho <= opts.rho_max + 1e-12;
       rho += opts.rho_step) {
    detail::ChowLinEval ev = detail::chow_lin_profile(y_low, ZL, rel, rho);
    if (ev.loglik > best_ll) {
      best_ll = ev.loglik;
      best_rho = rho;
    }
  }
  if (opts.refine) {
    double lo = std::max(opts.rho_min, best_rho - opts.rho_step);
    double hi = std::min(opts.rho_max, best_rho + opts.rho_step);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = detail::chow_lin_profile(y_low, ZL, rel, a).loglik;
    double fb = detail::chow_lin_profile(y_low, ZL, rel, b).loglik;
    for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
      if (fa < fb) {
        lo = a;
        a = b;
        fa = fb;
        b = lo + gr * (hi - lo);
        fb = detail::chow_lin_profile(y_low, ZL, rel, b).loglik;
      } else {
        hi = b;
        b = a;
        fb = fa;
        a = hi - gr * (hi - lo);
        fa = detail::chow_lin_profile(y_low, ZL, rel, a).loglik;
      }
    }
    const double mid = 0.5 * (lo + hi);
    if (detail::chow_lin_profile(y_low, ZL, rel, mid).loglik > best_ll)
      best_rho = mid;
  }

  detail::ChowLinEval ev = detail::chow_lin_profile(y_low, ZL, rel, best_rho);
  ChowLinFit fit;
  fit.beta_gls = ev.beta;
  fit.rho = best_rho;
  fit.low_residuals = ev.resid;
  fit.low_cov = ev.low_cov;
  fit.loglik = ev.loglik;
  fit.release_sub = opts.release_sub;

  // theta = Cov(u_H, u_L) V_L^-1, rows indexed by high-frequency position
  const double scale = 1.0 / (1.0 - best_rho * best_rho);
  Matrix cross(T, To);
  for (Index s = 0; s < T; ++s)
    for (Index t = 0; t < To; ++t)
      cross(s, t) =
          scale * std::pow(best_rho, double(std::abs(s - rel[static_cast<std::size_t>(t)])));
  Eigen::LLT<Matrix> llt(fit.low_cov);
  fit.weights = llt.solve(cross.transpose()).transpose();
  return fit;
}

inline ChowLinFit fit_chow_lin(const Vector& y_low, const Matrix& Z_high,
                               const TimeGrid& grid,
                               const ChowLinOptions& opts = {}) {
  require(y_low.size() == grid.low_count(), "fit_chow_lin: y length mismatch");
  require(Z_high.rows() == grid.high_count(),
          "fit_chow_lin: Z must cover the full grid");
  ChowLinFit fit =
      fit_chow_lin(y_low, grid.release_indices(opts.release_sub), Z_high, opts);
  fit.release_sub = opts.release_sub;
  return fit;
}

inline ChowLinFit fit_chow_lin(const MaskedSeries& y, const Matrix& Z_high,
                               const ChowLinOptions& opts = {}) {
  std::vector<Index> rel;
  for (Index s = 0; s < y.size(); ++s)
    if (y.observed[s]) rel.push_back(s);
  Vector y_low(static_cast<Index>(rel.size()));
  for (std::size_t t = 0; t < rel.size(); ++t)
    y_low[static_cast<Index>(t)] = y.values[rel[t]];
  return fit_chow_lin(y_low, rel, Z_high, opts);
}

namespace detail {

inline Vector chow_lin_fitted(const ChowLinFit& fit, const Matrix& Z_high) {
  const Index K = Z_high.cols();
  Vector fitted = Vector::Constant(Z_high.rows(), fit.beta_gls[0]);
  fitted += Z_high * fit.beta_gls.tail(K);
  fitted += fit.weights * fit.low_residuals;
  return fitted;
}

}  // namespace detail

/// BLUP completion: GLS conditional mean plus the distributed low-frequency
/// residuals. Observed sub-periods pass through exactly.
inline ImputationResult impute_chow_lin(const ChowLinFit& fit,
                                        const Matrix& Z_high,
                                        const MaskedSeries& y) {
  require(Z_high.rows() == y.size(), "impute_chow_lin: grid mismatch");
  require(fit.weights.rows() == y.size(), "impute_chow_lin: fit grid mismatch");
  ImputationResult res = ImputationResult::assemble(
      y, detail::chow_lin_fitted(fit, Z_high), Method::CL);
  res.params.target_loading = fit.beta_gls;
  res.params.intercept = fit.beta_gls[0];
  res.params.rho = fit.rho;
  return res;
}

inline ImputationResult impute_chow_lin(const ChowLinFit& fit,
                                        const Matrix& Z_high,
                                        const Vector& y_low,
                                        const TimeGrid& grid) {
  return impute_chow_lin(fit, Z_high,
                         embed_low_frequency(y_low, grid, fit.release_sub));
}

}  // namespace hfi::impute
