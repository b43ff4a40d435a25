#pragma once

#include "hfi/impute/result.hpp"
#include "hfi/linalg.hpp"
#include "hfi/time_grid.hpp"

namespace hfi::impute {

/// Static TALL-project imputation: the target loading comes from a
/// regression (with intercept) of the observed target values on the factor
/// estimates at the observed indices; missing indices take the common
/// component.
inline ImputationResult impute_tp(const MaskedSeries& y, const Matrix& factors) {
  const Index T = y.size(), r = factors.cols();
  require(factors.rows() == T, "impute_tp: factors must cover the full grid");
  if (!factors.allFinite())
    throw std::invalid_argument("impute_tp: factors contain missing values");

  std::vector<Index> obs;
  for (Index s = 0; s < T; ++s)
    if (y.observed[s]) obs.push_back(s);
  if (static_cast<Index>(obs.size()) <= r + 1)
    throw std::invalid_argument(
        "impute_tp: too few observations for the loading regression");

  Matrix Z(static_cast<Index>(obs.size()), r + 1);
  Vector b(static_cast<Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    Z(static_cast<Index>(i), 0) = 1.0;
    Z.row(static_cast<Index>(i)).tail(r) = factors.row(obs[i]);
    b[static_cast<Index>(i)] = y.values[obs[i]];
  }
  Vector coef = ols_solve(Z, b);

  Vector fitted =
      Vector::Constant(T, coef[0]) + factors * coef.tail(r);
  ImputationResult res = ImputationResult::assemble(y, std::move(fitted), Method::TP);
  res.params.intercept = coef[0];
  res.params.target_loading = coef.tail(r);
  return res;
}

inline ImputationResult impute_tp(const Vector& y_low, const Matrix& factors,
                                  const TimeGrid& grid, int release_sub = -1) {
  return impute_tp(embed_low_frequency(y_low, grid, release_sub), factors);
}

}  // namespace hfi::impute
