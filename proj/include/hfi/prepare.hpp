#pragma once

#include <map>

#include "hfi/factor/pc.hpp"
#include "hfi/impute/tp.hpp"
#include "hfi/panel.hpp"

namespace hfi::prep {

enum class Detrend { None, Linear, Quadratic, LogDiff };

inline Detrend detrend_from_name(const std::string& s) {
  if (s == "none") return Detrend::None;
  if (s == "linear") return Detrend::Linear;
  if (s == "quadratic") return Detrend::Quadratic;
  if (s == "log-diff") return Detrend::LogDiff;
  throw std::invalid_argument("unknown detrend option '" + s + "'");
}

struct PrepareOptions {
  Detrend default_detrend = Detrend::None;
  std::map<std::string, Detrend> per_column;  // overrides by column name
  int lag_expand = 0;                         // append this many lags per column
};

struct PrepareReport {
  std::vector<std::string> warnings;
};

namespace detail {

inline void detrend_column(Matrix& values, BoolArray& mask, Index j,
                           Detrend kind, const std::string& name,
                           PrepareReport* report) {
  const Index T = values.rows();
  if (kind == Detrend::None) return;

  bool gap = false;
  Index first = -1, last = -1;
  for (Index t = 0; t < T; ++t)
    if (mask(t, j)) {
      if (first < 0) first = t;
      last = t;
    }
  require(first >= 0, "prepare_panel: all-missing column '" + name + "'");
  for (Index t = first; t <= last; ++t)
    if (!mask(t, j)) gap = true;
  if (gap && report)
    report->warnings.push_back("column '" + name +
                               "' has interior missing values; detrending on "
                               "observed entries only");

  if (kind == Detrend::LogDiff) {
    Vector out = Vector::Constant(T, kMissing);
    BoolVector outmask = BoolVector::Constant(T, false);
    for (Index t = 1; t < T; ++t) {
      if (!mask(t, j) || !mask(t - 1, j)) continue;
      if (values(t, j) <= 0.0 || values(t - 1, j) <= 0.0) {
        if (report)
          report->warnings.push_back("column '" + name +
                                     "' has non-positive value; log-diff "
                                     "entry dropped");
        continue;
      }
      out[t] = std::log(values(t, j)) - std::log(values(t - 1, j));
      outmask[t] = true;
    }
    values.col(j) = out;
    mask.col(j) = outmask;
    return;
  }

  const int deg = kind == Detrend::Linear ? 1 : 2;
  std::vector<Index> obs;
  for (Index t = 0; t < T; ++t)
    if (mask(t, j)) obs.push_back(t);
  Matrix Z(static_cast<Index>(obs.size()), deg + 1);
  Vector b(static_cast<Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double x = double(obs[i]) / double(T);  // scaled time index
    Z(static_cast<Index>(i), 0) = 1.0;
    Z(static_cast<Index>(i), 1) = x;
    if (deg == 2) Z(static_cast<Index>(i), 2) = x * x;
    b[static_cast<Index>(i)] = values(obs[i], j);
  }
  Vector coef = ols_solve(Z, b);
  for (Index t = 0; t < T; ++t) {
    if (!mask(t, j)) continue;
    const double x = double(t) / double(T);
    double trend = coef[0] + coef[1] * x;
    if (deg == 2) trend += coef[2] * x * x;
    values(t, j) -= trend;
  }
}

}  // namespace detail

/// Per-column detrending followed by lag expansion: L lagged copies of each
/// column are appended (a lag-k column is undefined, hence masked, for its
/// first k rows). 19 columns with L = 3 become 76.
inline Panel prepare_panel(const Panel& raw, const PrepareOptions& opts,
                           PrepareReport* report = nullptr) {
  Panel p = raw;
  for (Index j = 0; j < p.cols(); ++j) {
    Detrend kind = opts.default_detrend;
    auto it = opts.per_column.find(p.name(j));
    if (it != opts.per_column.end()) kind = it->second;
    detail::detrend_column(p.values, p.mask.observed, j, kind, p.name(j), report);
  }
  if (opts.lag_expand <= 0) return p;

  const Index T = p.rows(), N = p.cols();
  const int L = opts.lag_expand;
  Matrix values(T, N * (L + 1));
  BoolArray mask(T, N * (L + 1));
  std::vector<std::string> names;
  values.leftCols(N) = p.values;
  mask.leftCols(N) = p.mask.observed;
  names = p.column_names;
  for (int l = 1; l <= L; ++l)
    for (Index j = 0; j < N; ++j) {
      const Index c = N * l + j;
      for (Index t = 0; t < T; ++t) {
        const bool ok = t >= l && p.mask.observed(t - l, j);
        mask(t, c) = ok;
        values(t, c) = ok ? p.values(t - l, j) : kMissing;
      }
      names.push_back(p.name(j) + "_lag" + std::to_string(l));
    }
  Panel out = Panel::masked(std::move(values), std::move(mask), std::move(names));
  return out;
}

/// Completes every column that has missing entries by TP, using factors
/// estimated from the fully observed (TALL) columns. Observed entries pass
/// through bitwise.
inline Panel precomplete_predictors(const Panel& panel, int r) {
  std::vector<Index> complete_cols;
  for (Index j = 0; j < panel.cols(); ++j)
    if (panel.mask.observed.col(j).all()) complete_cols.push_back(j);
  if (complete_cols.empty())
    throw std::invalid_argument(
        "precomplete_predictors: no fully observed columns");
  if (static_cast<Index>(complete_cols.size()) == panel.cols()) return panel;

  Matrix tall(panel.rows(), static_cast<Index>(complete_cols.size()));
  for (std::size_t k = 0; k < complete_cols.size(); ++k)
    tall.col(static_cast<Index>(k)) = panel.values.col(complete_cols[k]);
  factor::FactorEstimate pc = factor::estimate_pc(tall, r);

  Panel out = panel;
  for (Index j = 0; j < panel.cols(); ++j) {
    if (panel.mask.observed.col(j).all()) continue;
    MaskedSeries y{panel.values.col(j), panel.mask.observed.col(j)};
    impute::ImputationResult res = impute::impute_tp(y, pc.factors);
    out.values.col(j) = res.series;
    out.mask.observed.col(j).setConstant(true);
  }
  return out;
}

}  // namespace hfi::prep
