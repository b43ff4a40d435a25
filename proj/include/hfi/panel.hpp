#pragma once

#include <string>
#include <vector>

#include "hfi/common.hpp"
#include "hfi/time_grid.hpp"

namespace hfi {

/// Boolean observation indicator; true means the cell is observed.
struct ObservationMask {
  BoolArray observed;

  Index rows() const { return observed.rows(); }
  Index cols() const { return observed.cols(); }
  bool all() const { return observed.all(); }
  Index count_column(Index j) const {
    return observed.col(j).count();
  }
};

/// A single series with its own mask (the embedded low-frequency target).
struct MaskedSeries {
  Vector values;       // kMissing where unobserved
  BoolVector observed;

  Index size() const { return values.size(); }
};

/// High-frequency data matrix with observation mask and, once standardized,
/// the per-column moments needed to invert the transform.
struct Panel {
  Matrix values;  // T x N, kMissing where mask is false
  ObservationMask mask;
  Vector means;   // per column, set by standardize
  Vector scales;  // per column, set by standardize
  std::vector<std::string> column_names;
  bool standardized = false;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  bool is_complete() const { return mask.observed.all(); }

  const std::string& name(Index j) const { return column_names[static_cast<std::size_t>(j)]; }

  Index column_index(const std::string& name) const {
    for (std::size_t j = 0; j < column_names.size(); ++j)
      if (column_names[j] == name) return static_cast<Index>(j);
    throw std::invalid_argument("Panel: no column named '" + name + "'");
  }

  /// Fully observed panel from a plain matrix.
  static Panel complete(Matrix X, std::vector<std::string> names = {}) {
    Panel p;
    p.mask.observed = BoolArray::Constant(X.rows(), X.cols(), true);
    p.values = std::move(X);
    if (names.empty()) {
      names.reserve(static_cast<std::size_t>(p.values.cols()));
      for (Index j = 0; j < p.values.cols(); ++j)
        names.push_back("x" + std::to_string(j + 1));
    }
    require(names.size() == static_cast<std::size_t>(p.values.cols()),
            "Panel: column name count mismatch");
    p.column_names = std::move(names);
    return p;
  }

  static Panel masked(Matrix X, BoolArray observed,
                      std::vector<std::string> names = {}) {
    Panel p = complete(std::move(X), std::move(names));
    require(observed.rows() == p.rows() && observed.cols() == p.cols(),
            "Panel: mask dimension mismatch");
    p.mask.observed = std::move(observed);
    for (Index j = 0; j < p.cols(); ++j)
      for (Index i = 0; i < p.rows(); ++i)
        if (!p.mask.observed(i, j)) p.values(i, j) = kMissing;
    return p;
  }

  /// Appends a masked series as an extra column (the usual way to join the
  /// target with its predictor panel).
  Panel with_column(const MaskedSeries& s, const std::string& name) const {
    require(s.size() == rows(), "Panel::with_column: length mismatch");
    Panel p = *this;
    p.values.conservativeResize(rows(), cols() + 1);
    p.values.col(cols()) = s.values;
    BoolArray m(rows(), cols() + 1);
    m.leftCols(cols()) = mask.observed;
    m.col(cols()) = s.observed;
    p.mask.observed = std::move(m);
    p.column_names.push_back(name);
    if (standardized) {
      p.means.conservativeResize(cols() + 1);
      p.scales.conservativeResize(cols() + 1);
      p.means[cols()] = 0.0;
      p.scales[cols()] = 1.0;
    }
    return p;
  }

  Panel columns(const std::vector<Index>& idx) const {
    Panel p;
    p.values.resize(rows(), static_cast<Index>(idx.size()));
    BoolArray m(rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      p.values.col(static_cast<Index>(k)) = values.col(idx[k]);
      m.col(static_cast<Index>(k)) = mask.observed.col(idx[k]);
      p.column_names.push_back(column_names[static_cast<std::size_t>(idx[k])]);
    }
    p.mask.observed = std::move(m);
    p.standardized = standardized;
    if (standardized) {
      p.means.resize(static_cast<Index>(idx.size()));
      p.scales.resize(static_cast<Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        p.means[static_cast<Index>(k)] = means[idx[k]];
        p.scales[static_cast<Index>(k)] = scales[idx[k]];
      }
    }
    return p;
  }
};

/// Demeans and scales each column to unit sample standard deviation, using
/// observed entries only. Missing entries stay untouched. The original
/// moments are stored for the inverse transform.
inline Panel standardize(const Panel& in) {
  Panel p = in;
  p.means.resize(p.cols());
  p.scales.resize(p.cols());
  for (Index j = 0; j < p.cols(); ++j) {
    double sum = 0.0;
    Index n = 0;
    for (Index i = 0; i < p.rows(); ++i)
      if (p.mask.observed(i, j)) {
        sum += p.values(i, j);
        ++n;
      }
    if (n == 0)
      throw std::invalid_argument("standardize: all-missing column '" +
                                  p.name(j) + "'");
    require(n >= 2, "standardize: column '" + p.name(j) +
                        "' has fewer than 2 observed entries");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (Index i = 0; i < p.rows(); ++i)
      if (p.mask.observed(i, j)) {
        const double d = p.values(i, j) - mean;
        ss += d * d;
      }
    const double var = ss / static_cast<double>(n - 1);
    if (var <= 0.0)
      throw std::invalid_argument("standardize: constant column '" + p.name(j) +
                                  "'");
    const double sd = std::sqrt(var);
    for (Index i = 0; i < p.rows(); ++i)
      if (p.mask.observed(i, j)) p.values(i, j) = (p.values(i, j) - mean) / sd;
    p.means[j] = mean;
    p.scales[j] = sd;
  }
  p.standardized = true;
  return p;
}

/// Inverse of standardize on observed entries.
inline Panel destandardize(const Panel& in) {
  require(in.standardized, "destandardize: panel is not standardized");
  Panel p = in;
  for (Index j = 0; j < p.cols(); ++j)
    for (Index i = 0; i < p.rows(); ++i)
      if (p.mask.observed(i, j))
        p.values(i, j) = p.values(i, j) * p.scales[j] + p.means[j];
  p.standardized = false;
  return p;
}

/// Places the low-frequency value of period t at its release sub-period and
/// marks every other sub-period missing. release_sub = -1 releases at the
/// last sub-period of each period.
inline MaskedSeries embed_low_frequency(const Vector& y_low,
                                        const TimeGrid& grid,
                                        int release_sub = -1) {
  require(y_low.size() == grid.low_count(),
          "embed_low_frequency: length of y must equal T_o");
  MaskedSeries s;
  s.values = Vector::Constant(grid.high_count(), kMissing);
  s.observed = BoolVector::Constant(grid.high_count(), false);
  for (Index t = 0; t < grid.low_count(); ++t) {
    Index idx = grid.release_index(t, release_sub);
    s.values[idx] = y_low[t];
    s.observed[idx] = true;
  }
  return s;
}

}  // namespace hfi
