#pragma once

#include <map>

#include "hfi/factor/pc_ks.hpp"
#include "hfi/factor/qmle.hpp"
#include "hfi/parallel.hpp"
#include "hfi/sim/dgp.hpp"
#include "hfi/sim/metrics.hpp"

namespace hfi::sim {

/// One (estimator, nsim) cell of the comparison: per-replication trace
/// ratios (NaN where the estimator failed) and their aggregates.
struct ComparisonCell {
  factor::FactorMethod estimator;
  Index nsim = 0;
  std::vector<double> m_draws;        // per replication
  Matrix r2_draws;                    // reps x r, NaN rows on failure
  int failures = 0;

  double mean_m() const {
    double s = 0.0;
    int n = 0;
    for (double v : m_draws)
      if (std::isfinite(v)) {
        s += v;
        ++n;
      }
    return n > 0 ? s / n : kMissing;
  }

  double mc_se_m() const {
    const double m = mean_m();
    double s = 0.0;
    int n = 0;
    for (double v : m_draws)
      if (std::isfinite(v)) {
        s += (v - m) * (v - m);
        ++n;
      }
    return n > 1 ? std::sqrt(s / (n - 1) / n) : kMissing;
  }

  Vector mean_r2() const {
    Vector s = Vector::Zero(r2_draws.cols());
    int n = 0;
    for (Index i = 0; i < r2_draws.rows(); ++i) {
      if (!r2_draws.row(i).allFinite()) continue;
      s += r2_draws.row(i).transpose();
      ++n;
    }
    return n > 0 ? Vector(s / n) : Vector(Vector::Constant(r2_draws.cols(), kMissing));
  }
};

struct ComparisonTable {
  std::vector<Index> nsim_grid;
  std::vector<factor::FactorMethod> estimators;
  std::vector<ComparisonCell> cells;  // ordered estimator-major, nsim-minor
  int reps = 0;

  const ComparisonCell& cell(factor::FactorMethod est, Index nsim) const {
    for (const auto& c : cells)
      if (c.estimator == est && c.nsim == nsim) return c;
    throw std::invalid_argument("ComparisonTable: no such cell");
  }
};

struct ComparisonOptions {
  int reps = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  int pc_ks_order = 1;
  factor::QmleOptions qmle;
};

/// Runs the estimator comparison over the nsim grid: for each replication
/// and panel size, simulate once and score every estimator on the same
/// draw with the rotation-invariant metrics. Failures are recorded and
/// excluded cell-wise. Identical (seed, rep, nsim) give identical draws
/// independent of thread count.
inline ComparisonTable run_estimator_comparison(
    const DgpSpec& spec, const std::vector<factor::FactorMethod>& estimators,
    const std::vector<Index>& nsim_grid, const ComparisonOptions& opts = {}) {
  spec.validate();
  require(!estimators.empty() && !nsim_grid.empty(),
          "run_estimator_comparison: empty request");
  const int reps = opts.reps;
  const Index r = spec.n_factors();

  ComparisonTable table;
  table.nsim_grid = nsim_grid;
  table.estimators = estimators;
  table.reps = reps;
  for (auto est : estimators)
    for (Index nsim : nsim_grid) {
      ComparisonCell c;
      c.estimator = est;
      c.nsim = nsim;
      c.m_draws.assign(static_cast<std::size_t>(reps), kMissing);
      c.r2_draws = Matrix::Constant(reps, r, kMissing);
      table.cells.push_back(std::move(c));
    }
  auto cell_at = [&](std::size_t e, std::size_t g) -> ComparisonCell& {
    return table.cells[e * nsim_grid.size() + g];
  };

  parallel_for(reps, opts.threads, [&](int rep) {
    for (std::size_t g = 0; g < nsim_grid.size(); ++g) {
      const std::uint64_t stream =
          static_cast<std::uint64_t>(rep) * 4096ull + g;
      SimulatedPanel draw =
          simulate_panel(spec, nsim_grid[g], opts.seed, stream);
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        try {
          factor::FactorEstimate est;
          switch (estimators[e]) {
            case factor::FactorMethod::PC:
              est = factor::estimate_pc(draw.panel.values, int(r));
              break;
            case factor::FactorMethod::MLE_H:
              est = factor::estimate_mle_h(draw.panel.values, int(r), opts.qmle);
              break;
            case factor::FactorMethod::PC_GLS_H:
              est = factor::estimate_pc_gls_h(draw.panel.values, int(r));
              break;
            case factor::FactorMethod::PC_GLS_HAR:
              est = factor::estimate_pc_gls_har(draw.panel.values, int(r));
              break;
            case factor::FactorMethod::PC_KS:
              est = factor::estimate_pc_ks(draw.panel.values, int(r),
                                           opts.pc_ks_order);
              break;
            default:
              throw std::invalid_argument(
                  "run_estimator_comparison: unsupported estimator");
          }
          ComparisonCell& c = cell_at(e, g);
          c.m_draws[static_cast<std::size_t>(rep)] =
              metric_trace_ratio(draw.factors, est.factors);
          for (Index j = 0; j < r; ++j)
            c.r2_draws(rep, j) = metric_r2_per_factor(draw.factors, j, est.factors);
        } catch (const std::exception&) {
          // failure already marked by the NaN slot
        }
      }
    }
  });

  for (auto& c : table.cells)
    c.failures = static_cast<int>(std::count_if(
        c.m_draws.begin(), c.m_draws.end(),
        [](double v) { return !std::isfinite(v); }));
  return table;
}

}  // namespace hfi::sim
