#pragma once

#include <Eigen/Sparse>

#include "hfi/common.hpp"
#include "hfi/time_grid.hpp"

namespace hfi {

enum class AggregationKind { Stock, Flow };

/// Sparse T_o x T map C from high to low frequency. Stock rows select the
/// release sub-period; flow rows weight all m_t sub-periods of the period.
struct AggregationMap {
  Index rows = 0;
  Index cols = 0;
  AggregationKind kind = AggregationKind::Stock;
  Eigen::SparseMatrix<double> entries;

  Vector apply(const Vector& high) const {
    require(high.size() == cols, "AggregationMap: length mismatch");
    return entries * high;
  }

  Matrix dense() const { return Matrix(entries); }
};

/// flow_average=false uses unit weights (sum); true uses 1/m_t.
inline AggregationMap build_aggregation(const TimeGrid& grid,
                                        AggregationKind kind,
                                        bool flow_average = false) {
  AggregationMap map;
  map.rows = grid.low_count();
  map.cols = grid.high_count();
  map.kind = kind;
  std::vector<Eigen::Triplet<double>> trips;
  for (Index t = 0; t < grid.low_count(); ++t) {
    if (kind == AggregationKind::Stock) {
      trips.emplace_back(static_cast<int>(t),
                         static_cast<int>(grid.release_index(t)), 1.0);
    } else {
      const double w = flow_average ? 1.0 / grid.sub_count(t) : 1.0;
      for (Index j = 0; j < grid.sub_count(t); ++j)
        trips.emplace_back(static_cast<int>(t),
                           static_cast<int>(grid.flat_index(t, j)), w);
    }
  }
  map.entries.resize(static_cast<int>(map.rows), static_cast<int>(map.cols));
  map.entries.setFromTriplets(trips.begin(), trips.end());
  return map;
}

}  // namespace hfi
