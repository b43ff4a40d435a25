#pragma once

#include <numeric>
#include <string>

#include "hfi/factor/gls.hpp"
#include "hfi/factor/qmle.hpp"
#include "hfi/factor/var.hpp"
#include "hfi/panel.hpp"
#include "hfi/rng.hpp"

namespace hfi::sim {

/// Calibrated data-generating process: fixed loadings organized in blocks,
/// AR(1) idiosyncratic errors, VAR factors.
struct DgpSpec {
  Matrix loadings;   // N x r
  Vector idio_var;   // N, unconditional error variances
  Vector idio_ar;    // N, per-series rho_i
  factor::VarDynamics dynamics;
  std::vector<double> block_shares;
  std::vector<Index> block_sizes;  // sums to N
  Index periods = 0;               // reference T
  std::string label;

  Index n_series() const { return loadings.rows(); }
  Index n_factors() const { return loadings.cols(); }

  void validate() const {
    require(idio_var.size() == n_series() && idio_ar.size() == n_series(),
            "DgpSpec: per-series parameter length mismatch");
    require((idio_var.array() > 0.0).all(), "DgpSpec: Phi must be positive");
    require((idio_ar.array().abs() < 1.0).all(), "DgpSpec: |rho_i| must be < 1");
    require(dynamics.companion_spectral_radius() < 1.0,
            "DgpSpec: factor VAR must be stationary");
    double s = std::accumulate(block_shares.begin(), block_shares.end(), 0.0);
    require(std::abs(s - 1.0) < 1e-9, "DgpSpec: block shares must sum to 1");
    Index n = std::accumulate(block_sizes.begin(), block_sizes.end(), Index{0});
    require(n == n_series(), "DgpSpec: block sizes must sum to N");
  }
};

/// Floor of share*n per block, remainder distributed to blocks in order.
inline std::vector<Index> allocate_block_counts(
    const std::vector<double>& shares, Index n) {
  std::vector<Index> counts(shares.size());
  Index used = 0;
  for (std::size_t k = 0; k < shares.size(); ++k) {
    counts[k] = static_cast<Index>(std::floor(shares[k] * double(n)));
    used += counts[k];
  }
  for (std::size_t k = 0; used < n; k = (k + 1) % shares.size()) {
    ++counts[k];
    ++used;
  }
  return counts;
}

enum class CalibrationMethod { PC, MLE };

/// Fits the DGP parameters to a complete panel: loadings and residual
/// moments from the chosen estimator, a VAR(p) on the estimated factors,
/// block boundaries at cumulative shares of the column ordering.
inline DgpSpec calibrate_dgp(const Panel& panel, int r, int p,
                             CalibrationMethod method = CalibrationMethod::PC,
                             std::vector<double> block_shares = {0.4, 0.3, 0.3}) {
  require(panel.is_complete(), "calibrate_dgp: panel has missing entries");
  factor::FactorEstimate est = method == CalibrationMethod::PC
                                   ? factor::estimate_pc(panel.values, r)
                                   : factor::estimate_mle_h(panel.values, r);
  const Index T = panel.rows(), N = panel.cols();

  DgpSpec spec;
  spec.loadings = est.loadings;
  spec.dynamics = factor::fit_var(est.factors, p);
  Matrix resid = panel.values - est.common_component();
  spec.idio_var.resize(N);
  spec.idio_ar.resize(N);
  for (Index i = 0; i < N; ++i) {
    spec.idio_ar[i] = factor::fit_ar1(resid.col(i));
    spec.idio_var[i] =
        std::max(resid.col(i).squaredNorm() / double(T), kVarianceFloor);
  }
  spec.block_shares = std::move(block_shares);
  spec.block_sizes = allocate_block_counts(spec.block_shares, N);
  spec.periods = T;
  spec.label = std::string("calibrated-") +
               (method == CalibrationMethod::PC ? "pc" : "mle");
  spec.validate();
  return spec;
}

struct SimulatedPanel {
  Panel panel;          // nsim columns, length T, complete
  Matrix factors;       // T x r, the true draws
  std::vector<Index> loading_rows;  // which spec rows were used
};

/// Draws a panel of nsim series of length T from the spec: loadings sampled
/// without replacement block by block (all rows when the count equals the
/// block size), factors from the VAR, errors AR(1) with matched
/// unconditional variances. 200 burn-in periods for both recursions.
inline SimulatedPanel simulate_panel(const DgpSpec& spec, Index T, Index nsim,
                                     std::uint64_t seed,
                                     std::uint64_t stream = 0) {
  spec.validate();
  require(nsim >= static_cast<Index>(spec.block_shares.size()),
          "simulate_panel: nsim below the number of blocks");
  require(nsim <= spec.n_series(), "simulate_panel: nsim exceeds N");
  const Index r = spec.n_factors();
  constexpr Index burn = 200;

  Rng rng(seed, stream);

  // block-by-block row selection
  std::vector<Index> counts = allocate_block_counts(spec.block_shares, nsim);
  std::vector<Index> rows;
  Index start = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const Index bsize = spec.block_sizes[k];
    require(counts[k] <= bsize, "simulate_panel: block count exceeds block size");
    std::vector<Index> pool(static_cast<std::size_t>(bsize));
    std::iota(pool.begin(), pool.end(), start);
    for (Index d = 0; d < counts[k]; ++d) {
      const std::size_t pick =
          static_cast<std::size_t>(d) +
          static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(bsize - d)));
      std::swap(pool[static_cast<std::size_t>(d)], pool[pick]);
      rows.push_back(pool[static_cast<std::size_t>(d)]);
    }
    start += bsize;
  }

  // factor path
  const int p = spec.dynamics.order;
  Matrix eta_chol = sqrt_psd(spec.dynamics.innov_cov);
  Matrix F = Matrix::Zero(burn + T, r);
  for (Index t = 0; t < burn + T; ++t) {
    Vector f = eta_chol * rng.normal_vector(r);
    for (int l = 0; l < p; ++l)
      if (t - 1 - l >= 0)
        f += spec.dynamics.coefs[static_cast<std::size_t>(l)] *
             F.row(t - 1 - l).transpose();
    F.row(t) = f.transpose();
  }
  Matrix factors = F.bottomRows(T);

  // idiosyncratic AR(1) errors with matched unconditional variance
  Matrix E(T, nsim);
  for (Index c = 0; c < nsim; ++c) {
    const Index i = rows[static_cast<std::size_t>(c)];
    const double rho = spec.idio_ar[i];
    const double sd_innov =
        std::sqrt(spec.idio_var[i] * (1.0 - rho * rho));
    double e = 0.0;
    for (Index t = 0; t < burn + T; ++t) {
      e = rho * e + sd_innov * rng.normal();
      if (t >= burn) E(t - burn, c) = e;
    }
  }

  Matrix lam(nsim, r);
  std::vector<std::string> names;
  for (Index c = 0; c < nsim; ++c) {
    lam.row(c) = spec.loadings.row(rows[static_cast<std::size_t>(c)]);
    names.push_back("s" + std::to_string(rows[static_cast<std::size_t>(c)] + 1));
  }

  SimulatedPanel out;
  out.panel = Panel::complete(factors * lam.transpose() + E, std::move(names));
  out.factors = std::move(factors);
  out.loading_rows = std::move(rows);
  return out;
}

inline SimulatedPanel simulate_panel(const DgpSpec& spec, Index nsim,
                                     std::uint64_t seed,
                                     std::uint64_t stream = 0) {
  require(spec.periods >= 1, "simulate_panel: spec has no reference T");
  return simulate_panel(spec, spec.periods, nsim, seed, stream);
}

/// Synthetic specs shaped like the paper's two calibrations (T=720, N=122,
/// r=3 and T=420, N=50, r=2): heteroskedastic error variances over a wide
/// range, serially correlated errors, one persistent factor with descending
/// variance shares. The numbers are generated, not estimated from any real
/// panel.
inline DgpSpec make_synthetic_dgp1() {
  const Index N = 122;
  const int r = 3;
  Rng rng(20240107, 1);
  DgpSpec spec;
  spec.label = "synthetic-dgp1";
  spec.periods = 720;
  spec.block_shares = {0.4, 0.3, 0.3};
  spec.block_sizes = allocate_block_counts(spec.block_shares, N);

  // block k loads mostly on factor k; loading scales chosen so the factor
  // variance shares come out near (0.147, 0.073, 0.070)
  const double strength[3] = {0.85, 0.62, 0.60};
  spec.loadings.resize(N, r);
  Index row = 0;
  for (int k = 0; k < 3; ++k) {
    for (Index i = 0; i < spec.block_sizes[static_cast<std::size_t>(k)]; ++i, ++row)
      for (int j = 0; j < r; ++j)
        spec.loadings(row, j) =
            (j == k ? strength[k] : 0.18) * rng.normal();
  }

  spec.idio_var.resize(N);
  spec.idio_ar.resize(N);
  for (Index i = 0; i < N; ++i) {
    spec.idio_var[i] = 0.065 + 0.919 * rng.uniform();  // 0.065 .. 0.984
    spec.idio_ar[i] = -0.617 + (0.955 + 0.617) * rng.uniform();
  }

  factor::VarDynamics dyn;
  dyn.order = 2;
  Matrix A1(3, 3), A2(3, 3);
  A1 << 0.85, 0.05, 0.00,
        0.02, 0.15, 0.03,
       -0.01, 0.04, 0.45;
  A2 << 0.05, 0.00, 0.02,
        0.00, 0.05, 0.00,
        0.03, 0.00, 0.10;
  dyn.coefs = {A1, A2};
  Matrix S(3, 3);
  S << 1.00, 0.15, 0.10,
       0.15, 1.00, 0.12,
       0.10, 0.12, 1.00;
  dyn.innov_cov = S;
  spec.dynamics = dyn;
  spec.validate();
  return spec;
}

inline DgpSpec make_synthetic_dgp2() {
  const Index N = 50;
  const int r = 2;
  Rng rng(20240107, 2);
  DgpSpec spec;
  spec.label = "synthetic-dgp2";
  spec.periods = 420;
  spec.block_shares = {0.6, 0.4};
  spec.block_sizes = allocate_block_counts(spec.block_shares, N);

  const double strength[2] = {0.9, 0.55};
  spec.loadings.resize(N, r);
  Index row = 0;
  for (int k = 0; k < 2; ++k) {
    for (Index i = 0; i < spec.block_sizes[static_cast<std::size_t>(k)]; ++i, ++row)
      for (int j = 0; j < r; ++j)
        spec.loadings(row, j) = (j == k ? strength[k] : 0.2) * rng.normal();
  }
  spec.idio_var.resize(N);
  spec.idio_ar.resize(N);
  for (Index i = 0; i < N; ++i) {
    spec.idio_var[i] = 0.1 + 0.8 * rng.uniform();
    spec.idio_ar[i] = -0.3 + 1.1 * rng.uniform();
  }
  factor::VarDynamics dyn;
  dyn.order = 1;
  Matrix A1(2, 2);
  A1 << 0.9, 0.03,
        0.02, 0.25;
  dyn.coefs = {A1};
  Matrix S(2, 2);
  S << 1.0, 0.1,
       0.1, 1.0;
  dyn.innov_cov = S;
  spec.dynamics = dyn;
  spec.validate();
  return spec;
}

}  // namespace hfi::sim
