#pragma once

#include <optional>

#include "hfi/impute/tp.hpp"

namespace hfi::impute {

enum class RhoSign { Positive, Negative, Free, Zero };

inline constexpr double kRhoClamp = 0.995;

struct TpStarOptions {
  int lag_f = 1;        // lags of F beyond the contemporaneous term
  double tol = 1e-8;    // max absolute change of fills between iterations
  int max_iter = 200;
  RhoSign rho_sign = RhoSign::Positive;
  int release_sub = -1;
  std::optional<Vector> init_fill;  // warm start; defaults to the TP fill
};

/// One forward pass of the fitted ADL recursion with fixed parameters:
/// fills are produced in flat order so within-period chains use the values
/// just written, observed positions stay anchored at the data.
inline Vector tp_star_apply(const MaskedSeries& y, const Matrix& factors,
                            double intercept, double rho,
                            const Matrix& gamma, const Vector& init_fill) {
  const Index T = y.size();
  const int lag_f = static_cast<int>(gamma.rows()) - 1;
  Vector out = init_fill;
  for (Index s = 0; s < T; ++s) {
    if (y.observed[s]) {
      out[s] = y.values[s];
      continue;
    }
    if (s < 1 || s < lag_f) continue;  // no lag available; keep initial fill
    double v = intercept + rho * out[s - 1];
    for (int l = 0; l <= lag_f; ++l) v += gamma.row(l).dot(factors.row(s - l));
    out[s] = v;
  }
  return out;
}

/// Iterative TALL-project with an unrestricted ADL wide step: regress the
/// observed target values on (1, Y_{s-1}, F_s, ..., F_{s-lagF}) where the
/// lagged Y positions take the current fills, refit, refill, repeat. Only
/// rows whose regressand is an originally observed value enter the
/// regression; fills appear as regressors only. The AR coefficient is
/// constrained to the configured sign.
inline ImputationResult impute_tp_star(const MaskedSeries& y,
                                       const Matrix& factors,
                                       const TpStarOptions& opts = {}) {
  const Index T = y.size(), r = factors.cols();
  require(factors.rows() == T, "impute_tp_star: factors must cover the grid");
  require(opts.lag_f >= 0, "impute_tp_star: lag_f must be >= 0");

  Vector cur;
  if (opts.init_fill) {
    require(opts.init_fill->size() == T, "impute_tp_star: init_fill length");
    cur = *opts.init_fill;
    for (Index s = 0; s < T; ++s)
      if (y.observed[s]) cur[s] = y.values[s];
  } else {
    cur = impute_tp(y, factors).series;
  }

  const Index s_min = std::max<Index>(1, opts.lag_f);
  std::vector<Index> rows;
  for (Index s = s_min; s < T; ++s)
    if (y.observed[s]) rows.push_back(s);
  const Index ncol = 2 + (opts.lag_f + 1) * r;
  if (static_cast<Index>(rows.size()) <= ncol)
    throw std::invalid_argument("impute_tp_star: too few observed rows");

  double intercept = 0.0, rho = 0.0;
  Matrix gamma = Matrix::Zero(opts.lag_f + 1, r);
  bool sign_binding = false;
  bool converged = false;
  int iterations = 0;
  double prev_delta = std::numeric_limits<double>::infinity();
  int growth_streak = 0;

  for (int it = 0; it < opts.max_iter; ++it) {
    Matrix Zr(static_cast<Index>(rows.size()), ncol);
    Vector b(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Index s = rows[i];
      Index c = 0;
      Zr(static_cast<Index>(i), c++) = 1.0;
      Zr(static_cast<Index>(i), c++) = cur[s - 1];
      for (int l = 0; l <= opts.lag_f; ++l) {
        Zr.row(static_cast<Index>(i)).segment(c, r) = factors.row(s - l);
        c += r;
      }
      b[static_cast<Index>(i)] = y.values[s];
    }
    // The first iteration is rank deficient whenever observations never
    // adjoin: a pure TP fill makes the lagged-Y column an exact combination
    // of the intercept and lagged-F columns, so rho is unidentified against
    // it. Dropping the lag term for that iteration moves the fills off the
    // degenerate subspace; later iterations see deeper F lags and are full
    // rank.
    Eigen::ColPivHouseholderQR<Matrix> qr(Zr);
    bool deficient = qr.rank() < ncol;
    if (!deficient) {
      Vector coef = qr.solve(b);
      intercept = coef[0];
      rho = coef[1];
      for (int l = 0; l <= opts.lag_f; ++l)
        gamma.row(l) = coef.segment(2 + l * r, r).transpose();
    }
    sign_binding = false;
    if (deficient || opts.rho_sign == RhoSign::Zero ||
        (opts.rho_sign == RhoSign::Positive && rho < 0.0) ||
        (opts.rho_sign == RhoSign::Negative && rho > 0.0)) {
      // active sign constraint: drop the lag term and refit
      Matrix Z0(Zr.rows(), ncol - 1);
      Z0.col(0) = Zr.col(0);
      Z0.rightCols(ncol - 2) = Zr.rightCols(ncol - 2);
      Vector c0 = ols_solve(Z0, b);
      intercept = c0[0];
      rho = 0.0;
      for (int l = 0; l <= opts.lag_f; ++l)
        gamma.row(l) = c0.segment(1 + l * r, r).transpose();
      sign_binding = !deficient;
    }
    // transient AR estimates past one are clamped so the refill recursion
    // stays stable; a fit that still sits at the clamp on convergence is an
    // unstable estimate and rejected below
    bool clamped = false;
    if (std::abs(rho) >= 1.0) {
      rho = rho > 0 ? kRhoClamp : -kRhoClamp;
      clamped = true;
    }

    Vector next = tp_star_apply(y, factors, intercept, rho, gamma, cur);
    double delta = 0.0;
    for (Index s = 0; s < T; ++s)
      if (!y.observed[s]) delta = std::max(delta, std::abs(next[s] - cur[s]));
    cur = std::move(next);
    iterations = it + 1;
    if (delta < opts.tol) {
      if (clamped)
        throw std::runtime_error(
            "impute_tp_star: |rho| >= 1 at convergence");
      converged = true;
      break;
    }
    if (delta > prev_delta) {
      if (++growth_streak >= 5)
        throw std::runtime_error("impute_tp_star: fills diverged");
    } else {
      growth_streak = 0;
    }
    prev_delta = delta;
  }

  MaskedSeries anchor = y;
  ImputationResult res = ImputationResult::assemble(anchor, cur, Method::TP_STAR);
  res.params.intercept = intercept;
  res.params.rho = rho;
  res.params.factor_lag_coefs = gamma;
  res.params.target_loading = gamma.row(0).transpose();
  res.params.iterations = iterations;
  res.params.converged = converged;
  res.params.rho_sign_binding = sign_binding;
  return res;
}

inline ImputationResult impute_tp_star(const Vector& y_low,
                                       const Matrix& factors,
                                       const TimeGrid& grid,
                                       const TpStarOptions& opts = {}) {
  return impute_tp_star(embed_low_frequency(y_low, grid, opts.release_sub),
                        factors, opts);
}

}  // namespace hfi::impute
