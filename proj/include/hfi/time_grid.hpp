#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "hfi/common.hpp"

namespace hfi {

/// Position of a high-frequency index: low period t and sub-period j,
/// both 0-based, j in [0, m_t).
struct GridPos {
  Index period;
  Index sub;
};

/// Mapping between T_o low-frequency periods and T = sum(m_t) high-frequency
/// sub-periods. Immutable after construction.
class TimeGrid {
 public:
  TimeGrid(std::vector<int> sub_counts, std::vector<std::string> labels = {})
      : sub_counts_(std::move(sub_counts)), labels_(std::move(labels)) {
    require(!sub_counts_.empty(), "TimeGrid: no periods");
    offsets_.resize(sub_counts_.size() + 1);
    offsets_[0] = 0;
    for (std::size_t t = 0; t < sub_counts_.size(); ++t) {
      require(sub_counts_[t] >= 1, "TimeGrid: every m_t must be >= 1");
      offsets_[t + 1] = offsets_[t] + sub_counts_[t];
    }
    require(labels_.empty() ||
                labels_.size() == static_cast<std::size_t>(high_count()),
            "TimeGrid: label count must equal high-frequency length");
  }

  static TimeGrid fixed(int m, Index low_count) {
    require(m >= 1, "TimeGrid::fixed: m must be >= 1");
    require(low_count >= 1, "TimeGrid::fixed: T_o must be >= 1");
    return TimeGrid(std::vector<int>(static_cast<std::size_t>(low_count), m));
  }

  Index low_count() const { return static_cast<Index>(sub_counts_.size()); }
  Index high_count() const { return offsets_.back(); }
  int sub_count(Index t) const { return sub_counts_[static_cast<std::size_t>(t)]; }
  const std::vector<int>& sub_counts() const { return sub_counts_; }
  bool is_fixed() const {
    return std::all_of(sub_counts_.begin(), sub_counts_.end(),
                       [&](int m) { return m == sub_counts_.front(); });
  }

  Index flat_index(Index t, Index j) const {
    require(t >= 0 && t < low_count(), "TimeGrid: period out of range");
    require(j >= 0 && j < sub_count(t), "TimeGrid: sub-period out of range");
    return offsets_[static_cast<std::size_t>(t)] + j;
  }

  GridPos position(Index s) const {
    require(s >= 0 && s < high_count(), "TimeGrid: flat index out of range");
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), s);
    Index t = static_cast<Index>(it - offsets_.begin()) - 1;
    return {t, s - offsets_[static_cast<std::size_t>(t)]};
  }

  /// Flat index of the release sub-period of period t. release_sub = -1
  /// selects the last sub-period (the default convention); a non-negative
  /// value selects that 0-based sub-period in every period.
  Index release_index(Index t, int release_sub = -1) const {
    if (release_sub < 0) return flat_index(t, sub_count(t) - 1);
    return flat_index(t, release_sub);
  }

  std::vector<Index> release_indices(int release_sub = -1) const {
    std::vector<Index> out(static_cast<std::size_t>(low_count()));
    for (Index t = 0; t < low_count(); ++t)
      out[static_cast<std::size_t>(t)] = release_index(t, release_sub);
    return out;
  }

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Label of flat index s; synthesizes "p<t>s<j>" when no calendar labels.
  std::string label(Index s) const {
    if (has_labels()) return labels_[static_cast<std::size_t>(s)];
    GridPos pos = position(s);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "p%03ds%d", static_cast<int>(pos.period + 1),
                  static_cast<int>(pos.sub + 1));
    return buf;
  }

 private:
  std::vector<int> sub_counts_;
  std::vector<Index> offsets_;
  std::vector<std::string> labels_;
};

namespace detail {

inline std::chrono::sys_days parse_iso_date(const std::string& s) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3)
    throw std::invalid_argument("invalid ISO date: " + s);
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                  std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date: " + s);
  return std::chrono::sys_days{ymd};
}

inline std::string format_iso_date(std::chrono::sys_days d) {
  std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

}  // namespace detail

/// Weekly grid anchored on Mondays, both endpoints inclusive, under the
/// proleptic Gregorian calendar. Low periods are calendar months; a Monday
/// belongs to the month containing its date, so m_t is the Monday count of
/// month t (4 or 5 for complete months).
inline TimeGrid make_weekly_monday_grid(const std::string& start_iso,
                                        const std::string& end_iso) {
  using namespace std::chrono;
  sys_days start = detail::parse_iso_date(start_iso);
  sys_days end = detail::parse_iso_date(end_iso);
  require(start <= end, "weekly grid: empty date range");

  sys_days first = start;
  while (weekday{first} != Monday) first += days{1};
  require(first <= end, "weekly grid: no Mondays in range");

  std::vector<int> sub_counts;
  std::vector<std::string> labels;
  year_month current{year{0}, month{0}};
  for (sys_days cur = first; cur <= end; cur += days{7}) {
    year_month_day ymd{cur};
    year_month ym{ymd.year(), ymd.month()};
    if (sub_counts.empty() || ym != current) {
      sub_counts.push_back(0);
      current = ym;
    }
    ++sub_counts.back();
    labels.push_back(detail::format_iso_date(cur));
  }
  return TimeGrid(std::move(sub_counts), std::move(labels));
}

}  // namespace hfi
