#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hfi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolVector = Eigen::Array<bool, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

/// Sentinel for unobserved cells. The observation mask, not this value,
/// is the source of truth; the sentinel only guards against silent use.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Floor applied to estimated idiosyncratic variances (Heywood guard).
inline constexpr double kVarianceFloor = 1e-6;

/// Floor applied to observation noise variances in state-space models.
inline constexpr double kObsNoiseFloor = 1e-10;

inline bool is_missing(double x) { return std::isnan(x); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace hfi
