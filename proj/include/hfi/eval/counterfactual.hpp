#pragma once

#include "hfi/impute/chow_lin.hpp"
#include "hfi/impute/em.hpp"
#include "hfi/impute/ks.hpp"
#include "hfi/impute/tp_star.hpp"
#include "hfi/sim/metrics.hpp"

namespace hfi::eval {

struct WindowScore {
  Index begin = 0;  // flat index range [begin, end)
  Index end = 0;
  double mse = kMissing;
  Index count = 0;
};

struct SubsampleTable {
  std::vector<WindowScore> windows;
  double full_mse = kMissing;
  Index full_count = 0;
  bool has_empty_window = false;
};

/// MSE over the masked indices, split by the break points (flat indices,
/// sorted); windows partition [0, T). Empty windows are flagged, not fatal.
inline SubsampleTable mse_subsamples(const Vector& truth, const Vector& imputed,
                                     const std::vector<Index>& masked_idx,
                                     const std::vector<Index>& breaks) {
  require(truth.size() == imputed.size(), "mse_subsamples: length mismatch");
  std::vector<Index> edges;
  edges.push_back(0);
  for (Index b : breaks) {
    require(b > edges.back() && b < truth.size(),
            "mse_subsamples: breaks must be increasing interior indices");
    edges.push_back(b);
  }
  edges.push_back(truth.size());

  SubsampleTable out;
  double full_acc = 0.0;
  for (std::size_t w = 0; w + 1 < edges.size(); ++w) {
    WindowScore ws;
    ws.begin = edges[w];
    ws.end = edges[w + 1];
    double acc = 0.0;
    for (Index s : masked_idx) {
      if (s < ws.begin || s >= ws.end) continue;
      const double d = imputed[s] - truth[s];
      acc += d * d;
      ++ws.count;
    }
    if (ws.count > 0) {
      ws.mse = acc / double(ws.count);
      full_acc += acc;
      out.full_count += ws.count;
    } else {
      out.has_empty_window = true;
    }
    out.windows.push_back(ws);
  }
  out.full_mse = out.full_count > 0 ? full_acc / double(out.full_count) : kMissing;
  return out;
}

struct CounterfactualSpec {
  std::string target_column;
  enum class MaskKind { KeepCalendarMonths, KeepSubperiod, Custom };
  MaskKind kind = MaskKind::KeepSubperiod;
  std::vector<int> keep_months;  // calendar months 1..12 (needs date labels)
  int keep_sub = -1;             // 0-based sub-period; -1 keeps the last
  BoolVector custom_keep;
  std::vector<impute::Method> methods = {
      impute::Method::TP, impute::Method::TP_STAR, impute::Method::CL};
  std::vector<Index> subsample_breaks;
  int r = 3;
  int p = 1;
  impute::TpStarOptions tp_star;
  impute::ChowLinOptions chow_lin;
  impute::KsStarOptions ks_star;
  ssm::EmOptions ks_em;
  impute::EmImputeOptions em;
};

struct MethodRun {
  impute::Method method;
  bool ok = false;
  std::string error;
  impute::ImputationResult result;
  SubsampleTable scores;
  double bias = kMissing;        // mean(imputed - truth) over masked indices
  double imputed_sd = kMissing;  // dispersion of the fills themselves
};

struct CounterfactualOutcome {
  BoolVector keep;                 // the counterfactual observation pattern
  std::vector<Index> masked_idx;   // scored positions
  std::vector<MethodRun> runs;
};

namespace detail {

inline int label_month(const std::string& iso) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(iso.c_str(), "%d-%d-%d", &y, &m, &d) != 3)
    throw std::invalid_argument("counterfactual: label is not an ISO date: " + iso);
  return m;
}

inline BoolVector build_keep_mask(const TimeGrid& grid,
                                  const CounterfactualSpec& spec) {
  const Index T = grid.high_count();
  BoolVector keep = BoolVector::Constant(T, false);
  switch (spec.kind) {
    case CounterfactualSpec::MaskKind::KeepSubperiod:
      for (Index t = 0; t < grid.low_count(); ++t)
        keep[grid.release_index(t, spec.keep_sub)] = true;
      break;
    case CounterfactualSpec::MaskKind::KeepCalendarMonths: {
      require(grid.has_labels(),
              "counterfactual: keep-months needs calendar labels");
      for (Index s = 0; s < T; ++s) {
        const int m = label_month(grid.label(s));
        for (int km : spec.keep_months)
          if (m == km) {
            keep[s] = true;
            break;
          }
      }
      break;
    }
    case CounterfactualSpec::MaskKind::Custom:
      require(spec.custom_keep.size() == T,
              "counterfactual: custom mask length mismatch");
      keep = spec.custom_keep;
      break;
  }
  return keep;
}

}  // namespace detail

/// The masking experiment: hide part of a fully observed target, impute it
/// with each requested method and score the masked positions. Method
/// failures are recorded per method and the run continues.
inline CounterfactualOutcome run_counterfactual(const Panel& panel,
                                                const TimeGrid& grid,
                                                const CounterfactualSpec& spec) {
  const Index target = panel.column_index(spec.target_column);
  const Index T = panel.rows();
  require(grid.high_count() == T, "run_counterfactual: grid/panel mismatch");
  for (Index s = 0; s < T; ++s)
    require(panel.mask.observed(s, target),
            "run_counterfactual: target must be fully observed (ground truth)");

  CounterfactualOutcome out;
  out.keep = detail::build_keep_mask(grid, spec);
  if (spec.kind != CounterfactualSpec::MaskKind::Custom)
    for (Index t = 0; t < grid.low_count(); ++t) {
      bool any = false;
      for (Index j = 0; j < grid.sub_count(t); ++j)
        any = any || out.keep[grid.flat_index(t, j)];
      require(any, "run_counterfactual: keep pattern drops an entire period");
    }

  const Vector truth = panel.values.col(target);
  MaskedSeries y{truth, out.keep};
  for (Index s = 0; s < T; ++s) {
    if (!out.keep[s]) out.masked_idx.push_back(s);
  }
  MaskedSeries y_masked = y;
  for (Index s = 0; s < T; ++s)
    if (!y.observed[s]) y_masked.values[s] = kMissing;

  // predictor block and its factor estimates, shared by TP / TP* / CL
  std::vector<Index> pred_cols;
  for (Index j = 0; j < panel.cols(); ++j)
    if (j != target) pred_cols.push_back(j);
  Panel predictors = panel.columns(pred_cols);
  require(predictors.is_complete(),
          "run_counterfactual: predictor columns must be complete");
  factor::FactorEstimate pc = factor::estimate_pc(predictors.values, spec.r);

  Panel joint = predictors.with_column(y_masked, spec.target_column);
  const Index joint_target = joint.cols() - 1;

  for (impute::Method m : spec.methods) {
    MethodRun run;
    run.method = m;
    try {
      switch (m) {
        case impute::Method::TP:
          run.result = impute::impute_tp(y_masked, pc.factors);
          break;
        case impute::Method::TP_STAR:
          run.result = impute::impute_tp_star(y_masked, pc.factors, spec.tp_star);
          break;
        case impute::Method::CL: {
          impute::ChowLinFit fit =
              impute::fit_chow_lin(y_masked, pc.factors, spec.chow_lin);
          run.result = impute::impute_chow_lin(fit, pc.factors, y_masked);
          break;
        }
        case impute::Method::EM:
          run.result = impute::impute_em(joint, joint_target, spec.r, spec.em);
          break;
        case impute::Method::KS:
          run.result =
              impute::impute_ks(joint, joint_target, spec.r, spec.p, spec.ks_em);
          break;
        case impute::Method::KS_STAR:
          run.result = impute::impute_ks_star(joint, joint_target, spec.r,
                                              spec.p, spec.ks_star);
          break;
      }
      run.ok = true;
    } catch (const std::exception& e) {
      run.error = e.what();
    }
    if (run.ok) {
      run.scores = mse_subsamples(truth, run.result.series, out.masked_idx,
                                  spec.subsample_breaks);
      double acc = 0.0, accsq = 0.0;
      for (Index s : out.masked_idx) {
        acc += run.result.series[s] - truth[s];
        accsq += run.result.series[s];
      }
      const double n = double(out.masked_idx.size());
      run.bias = acc / n;
      const double mean_fill = accsq / n;
      double var = 0.0;
      for (Index s : out.masked_idx) {
        const double d = run.result.series[s] - mean_fill;
        var += d * d;
      }
      run.imputed_sd = std::sqrt(var / std::max(1.0, n - 1.0));
    }
    out.runs.push_back(std::move(run));
  }
  return out;
}

}  // namespace hfi::eval
