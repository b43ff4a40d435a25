#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hfi/eval/counterfactual.hpp"
#include "hfi/panel.hpp"
#include "hfi/sim/comparison.hpp"
#include "hfi/time_grid.hpp"

namespace hfi::io {

/// Shortest decimal representation that round-trips the double, so repeated
/// runs emit byte-identical artifacts.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double parsed = std::strtod(buf, nullptr);
  if (parsed == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[32];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      if (std::strtod(shorter, nullptr) == v) return shorter;
    }
  }
  return buf;
}

struct CsvTable {
  std::vector<std::string> dates;  // first column
  std::vector<std::string> names;  // remaining headers
  Matrix values;
  BoolArray mask;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  for (auto& c : cells) {
    std::size_t a = c.find_first_not_of(" \t");
    std::size_t b = c.find_last_not_of(" \t");
    c = a == std::string::npos ? "" : c.substr(a, b - a + 1);
  }
  return cells;
}

}  // namespace detail

/// First column ISO-8601 date, remaining columns numeric; empty cells (or
/// NA/NaN) mean missing.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty CSV file: " + path);
  CsvTable out;
  std::vector<std::string> header = detail::split_csv_line(line);
  require(header.size() >= 2, "CSV needs a date column plus data columns");
  out.names.assign(header.begin() + 1, header.end());

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> obs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": wrong number of cells");
    out.dates.push_back(cells[0]);
    std::vector<double> vals;
    std::vector<bool> ob;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      if (c.empty() || c == "NA" || c == "NaN" || c == "nan") {
        vals.push_back(kMissing);
        ob.push_back(false);
      } else {
        char* end = nullptr;
        const double v = std::strtod(c.c_str(), &end);
        if (end == c.c_str() || *end != '\0')
          throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                   ": unparseable cell '" + c + "'");
        vals.push_back(v);
        ob.push_back(true);
      }
    }
    rows.push_back(std::move(vals));
    obs.push_back(std::move(ob));
  }
  const Index T = static_cast<Index>(rows.size());
  const Index N = static_cast<Index>(out.names.size());
  require(T > 0, "CSV has no data rows");
  out.values.resize(T, N);
  out.mask.resize(T, N);
  for (Index i = 0; i < T; ++i)
    for (Index j = 0; j < N; ++j) {
      out.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      out.mask(i, j) = obs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  return out;
}

inline Panel to_panel(const CsvTable& t) {
  return Panel::masked(t.values, t.mask, t.names);
}

inline void write_panel_csv(const std::string& path, const Panel& p,
                            const std::vector<std::string>& dates) {
  require(dates.empty() || dates.size() == static_cast<std::size_t>(p.rows()),
          "write_panel_csv: date count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "date";
  for (const auto& n : p.column_names) out << "," << n;
  out << "\n";
  for (Index i = 0; i < p.rows(); ++i) {
    out << (dates.empty() ? "r" + std::to_string(i + 1) : dates[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < p.cols(); ++j) {
      out << ",";
      if (p.mask.observed(i, j)) out << format_double(p.values(i, j));
    }
    out << "\n";
  }
}

/// Tidy layout: date, value, provenance, method.
inline void write_imputation_csv(const std::string& path, const TimeGrid& grid,
                                 const impute::ImputationResult& res) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "date,value,provenance,method\n";
  for (Index s = 0; s < res.size(); ++s)
    out << grid.label(s) << "," << format_double(res.series[s]) << ","
        << (res.provenance[static_cast<std::size_t>(s)] == impute::Provenance::Observed
                ? "observed"
                : "imputed")
        << "," << impute::method_name(res.method) << "\n";
}

/// One column per method, observed values first.
inline void write_imputation_comparison_csv(
    const std::string& path, const TimeGrid& grid,
    const std::vector<const impute::ImputationResult*>& results) {
  require(!results.empty(), "write_imputation_comparison_csv: nothing to write");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "date,provenance";
  for (const auto* r : results) out << "," << impute::method_name(r->method);
  out << "\n";
  for (Index s = 0; s < results.front()->size(); ++s) {
    out << grid.label(s) << ","
        << (results.front()->provenance[static_cast<std::size_t>(s)] ==
                    impute::Provenance::Observed
                ? "observed"
                : "imputed");
    for (const auto* r : results) out << "," << format_double(r->series[s]);
    out << "\n";
  }
}

inline void write_factors_csv(const std::string& path, const TimeGrid& grid,
                              const Matrix& factors) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "date";
  for (Index j = 0; j < factors.cols(); ++j) out << ",f" << (j + 1);
  out << "\n";
  for (Index s = 0; s < factors.rows(); ++s) {
    out << grid.label(s);
    for (Index j = 0; j < factors.cols(); ++j)
      out << "," << format_double(factors(s, j));
    out << "\n";
  }
}

inline void write_loadings_csv(const std::string& path,
                               const std::vector<std::string>& names,
                               const Matrix& loadings) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "series";
  for (Index j = 0; j < loadings.cols(); ++j) out << ",lambda" << (j + 1);
  out << "\n";
  for (Index i = 0; i < loadings.rows(); ++i) {
    out << names[static_cast<std::size_t>(i)];
    for (Index j = 0; j < loadings.cols(); ++j)
      out << "," << format_double(loadings(i, j));
    out << "\n";
  }
}

/// Estimator columns, nsim rows: first the trace-ratio panel, then one R^2
/// panel per factor.
inline void write_comparison_csv(const std::string& path,
                                 const sim::ComparisonTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "panel,nsim";
  for (auto est : table.estimators) out << "," << factor::method_name(est);
  out << "\n";
  for (Index nsim : table.nsim_grid) {
    out << "M," << nsim;
    for (auto est : table.estimators)
      out << "," << format_double(table.cell(est, nsim).mean_m());
    out << "\n";
  }
  const Index r = table.cells.empty() ? 0 : table.cells.front().r2_draws.cols();
  for (Index j = 0; j < r; ++j)
    for (Index nsim : table.nsim_grid) {
      out << "R2_F" << (j + 1) << "," << nsim;
      for (auto est : table.estimators)
        out << "," << format_double(table.cell(est, nsim).mean_r2()[j]);
      out << "\n";
    }
}

/// Method columns, window rows (full sample first).
inline void write_scores_csv(const std::string& path, const TimeGrid& grid,
                             const eval::CounterfactualOutcome& outcome) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "window,count";
  for (const auto& run : outcome.runs)
    out << "," << impute::method_name(run.method);
  out << "\n";

  const eval::MethodRun* ref = nullptr;
  for (const auto& run : outcome.runs)
    if (run.ok) {
      ref = &run;
      break;
    }
  if (!ref) return;

  out << "full," << ref->scores.full_count;
  for (const auto& run : outcome.runs)
    out << "," << (run.ok ? format_double(run.scores.full_mse) : "failed");
  out << "\n";
  for (std::size_t w = 0; w < ref->scores.windows.size(); ++w) {
    const auto& ws = ref->scores.windows[w];
    out << grid.label(ws.begin) << ".." << grid.label(ws.end - 1) << ","
        << ws.count;
    for (const auto& run : outcome.runs)
      out << ","
          << (run.ok ? format_double(run.scores.windows[w].mse) : "failed");
    out << "\n";
  }
  out << "bias,";
  for (const auto& run : outcome.runs)
    out << "," << (run.ok ? format_double(run.bias) : "failed");
  out << "\n";
  out << "imputed_sd,";
  for (const auto& run : outcome.runs)
    out << "," << (run.ok ? format_double(run.imputed_sd) : "failed");
  out << "\n";
}

}  // namespace hfi::io
