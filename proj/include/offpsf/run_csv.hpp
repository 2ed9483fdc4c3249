#pragma once

// CSV schemas.
//
// Per-run trace, one row per iterate k = 0..N:
//   k,alpha,mu,n,theta_0,...,theta_{d-1},estimate_norm[,exact_J,stationarity][,xi_norm,beta_norm]
// The bracketed groups appear only when the matching diagnostics ran. Row N
// holds the final iterate; its alpha, mu, n, estimate_norm, stationarity,
// xi_norm and beta_norm fields are empty.

#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "offpsf/errors.hpp"
#include "offpsf/format.hpp"
#include "offpsf/optimizer.hpp"
#include "offpsf/stats.hpp"

namespace offpsf {

inline std::vector<std::string> trace_header(std::size_t d, bool exact, bool bias_noise) {
  std::vector<std::string> cols{"k", "alpha", "mu", "n"};
  for (std::size_t j = 0; j < d; ++j) cols.push_back("theta_" + std::to_string(j));
  cols.push_back("estimate_norm");
  if (exact) {
    cols.push_back("exact_J");
    cols.push_back("stationarity");
  }
  if (bias_noise) {
    cols.push_back("xi_norm");
    cols.push_back("beta_norm");
  }
  return cols;
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
  out << "\n";
}

inline void write_trace_csv(std::ostream& out, const RunResult& run) {
  const std::size_t d = run.theta_trace.front().size();
  const std::size_t N = run.iterations;
  write_csv_row(out, trace_header(d, run.has_exact(), run.has_bias_noise()));
  for (std::size_t k = 0; k <= N; ++k) {
    const bool step = k < N;
    std::vector<std::string> row{std::to_string(k)};
    row.push_back(step ? format_double(run.schedule.alpha[k]) : "");
    row.push_back(step ? format_double(run.schedule.mu[k]) : "");
    row.push_back(step ? std::to_string(run.schedule.n[k]) : "");
    for (double x : run.theta_trace[k]) row.push_back(format_double(x));
    row.push_back(step ? format_double(norm(run.estimate_trace[k])) : "");
    if (run.has_exact()) {
      row.push_back(format_double(run.exact_j_trace[k]));
      row.push_back(step ? format_double(run.stationarity_trace[k]) : "");
    }
    if (run.has_bias_noise()) {
      row.push_back(step ? format_double(run.xi_norm_trace[k]) : "");
      row.push_back(step ? format_double(run.beta_norm_trace[k]) : "");
    }
    write_csv_row(out, row);
  }
}

inline std::string trace_csv(const RunResult& run) {
  std::ostringstream out;
  write_trace_csv(out, run);
  return out.str();
}

/// Minimal reader for the comma-separated files written here (no quoting).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("CSV has no column '" + name + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("CSV is empty");
  table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != table.header.size())
      throw ConfigError("CSV row has " + std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(table.header.size()));
    table.rows.push_back(std::move(fields));
  }
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file '" + path + "'");
  return read_csv(in);
}

}  // namespace offpsf
