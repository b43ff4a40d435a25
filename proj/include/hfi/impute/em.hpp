#pragma once

#include "hfi/factor/pc.hpp"
#include "hfi/impute/result.hpp"

namespace hfi::impute {

struct EmImputeOptions {
  int max_iter = 500;
  double tol = 1e-8;  // max absolute change in filled entries
};

/// Stock-Watson EM imputation: alternate PC on the completed matrix with
/// refilling of every masked entry by the common component, until the fills
/// stop moving. Returns the completed target column.
inline ImputationResult impute_em(const Panel& panel, Index target_col, int r,
                                  const EmImputeOptions& opts = {}) {
  const Index T = panel.rows(), N = panel.cols();
  require(target_col >= 0 && target_col < N, "impute_em: bad target column");
  const BoolArray& mask = panel.mask.observed;

  Matrix X = panel.values;
  for (Index j = 0; j < N; ++j) {
    double sum = 0.0;
    Index n = 0;
    for (Index i = 0; i < T; ++i)
      if (mask(i, j)) {
        sum += X(i, j);
        ++n;
      }
    require(n > 0, "impute_em: all-missing column");
    const double mean = sum / double(n);
    for (Index i = 0; i < T; ++i)
      if (!mask(i, j)) X(i, j) = mean;
  }

  factor::FactorEstimate pc;
  bool converged = false;
  int iterations = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    pc = factor::estimate_pc(X, r);
    Matrix fitted = pc.common_component();
    double delta = 0.0;
    for (Index j = 0; j < N; ++j)
      for (Index i = 0; i < T; ++i)
        if (!mask(i, j)) {
          delta = std::max(delta, std::abs(fitted(i, j) - X(i, j)));
          X(i, j) = fitted(i, j);
        }
    iterations = it + 1;
    if (delta < opts.tol) {
      converged = true;
      break;
    }
  }

  MaskedSeries y{panel.values.col(target_col), mask.col(target_col)};
  ImputationResult res =
      ImputationResult::assemble(y, X.col(target_col), Method::EM);
  res.params.target_loading = pc.loadings.row(target_col).transpose();
  res.params.iterations = iterations;
  res.params.converged = converged;
  return res;
}

}  // namespace hfi::impute
