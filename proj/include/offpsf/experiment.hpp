#pragma once

// Repetition runner and rate sweep.
//
// Output files of run_experiment (directory cfg.output_dir):
//   run_<rep>.csv   per-run trace, schema in run_csv.hpp
//   aggregate.csv   k,runs,mean_J,se_J,mean_stationarity,se_stationarity,smoothed_mean_J
//                   over k = 0..N-1 and successful runs; smoothed_mean_J is the
//                   trailing mean of mean_J over kSmoothingWindow iterations
//   runs.csv        rep,seed,status,final_J,sampled_index,stationarity_at_R,
//                   converged_at,active_constraints,error
//
// rate_sweep writes N,repetitions,failed,mean_stationarity,se_stationarity,slope.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "offpsf/config.hpp"
#include "offpsf/errors.hpp"
#include "offpsf/format.hpp"
#include "offpsf/optimizer.hpp"
#include "offpsf/rng.hpp"
#include "offpsf/run_csv.hpp"
#include "offpsf/stats.hpp"

namespace offpsf {

inline constexpr std::size_t kSmoothingWindow = 20;

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled exactly once; the first exception is rethrown after the join.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> workers;
    const std::size_t n_workers = std::min(threads, count);
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct RunOutcome {
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::optional<RunResult> result;
};

struct AggregateRow {
  std::size_t k = 0;
  std::size_t runs = 0;
  MeanWithError exact_j;
  MeanWithError stationarity;
  double smoothed_mean_j = 0.0;
};

struct ExperimentReport {
  std::vector<RunOutcome> runs;
  std::vector<AggregateRow> aggregate;

  std::size_t failed() const {
    return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const auto& r) { return !r.ok; }));
  }
  bool all_ok() const { return failed() == 0; }
};

inline std::uint64_t repetition_seed(std::uint64_t master, std::size_t rep) {
  return derive_seed(master, {stream::kRepetition, rep});
}

/// Trailing moving average with the given window (shorter at the start).
inline std::vector<double> trailing_mean(const std::vector<double>& xs, std::size_t window) {
  std::vector<double> out(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const std::size_t first = k + 1 >= window ? k + 1 - window : 0;
    double s = 0.0;
    for (std::size_t i = first; i <= k; ++i) s += xs[i];
    out[k] = s / static_cast<double>(k + 1 - first);
  }
  return out;
}

inline std::vector<AggregateRow> aggregate_runs(const std::vector<RunOutcome>& runs, std::size_t N) {
  std::vector<AggregateRow> rows(N);
  std::vector<double> means(N);
  for (std::size_t k = 0; k < N; ++k) {
    RunningStats j, st;
    for (const auto& run : runs) {
      if (!run.ok || !run.result || !run.result->has_exact()) continue;
      j.add(run.result->exact_j_trace[k]);
      st.add(run.result->stationarity_trace[k]);
    }
    rows[k] = {k, j.count(), {j.mean(), j.std_error()}, {st.mean(), st.std_error()}, 0.0};
    means[k] = j.mean();
  }
  const auto smoothed = trailing_mean(means, kSmoothingWindow);
  for (std::size_t k = 0; k < N; ++k) rows[k].smoothed_mean_j = smoothed[k];
  return rows;
}

/// Runs cfg.repetitions independent OffP-SF runs with derived seeds. Exact
/// diagnostics are always on because the aggregate is built from them.
/// Numeric failures mark the run failed; configuration errors propagate.
inline ExperimentReport execute_runs(const RunConfig& cfg) {
  const Experiment ex = resolve_experiment(cfg);
  const Schedule schedule = build_schedule(cfg.schedule, cfg.iterations);
  Diagnostics diagnostics = cfg.diagnostics;
  diagnostics.exact = true;

  ExperimentReport report;
  report.runs.resize(cfg.repetitions);
  parallel_for(cfg.repetitions, cfg.threads, [&](std::size_t rep) {
    RunOutcome& out = report.runs[rep];
    out.repetition = rep;
    out.seed = repetition_seed(cfg.seed, rep);
    try {
      out.result = offp_sf_run(ex.mdp, ex.behavior, ex.box, schedule, ex.theta0, cfg.iterations, out.seed,
                               diagnostics, cfg.horizon_cap);
      out.ok = true;
    } catch (const NumericError& e) {
      out.error = e.what();
    } catch (const DataIntegrityError& e) {
      out.error = e.what();
    }
  });
  report.aggregate = aggregate_runs(report.runs, cfg.iterations);
  return report;
}

inline std::string run_file_name(std::size_t rep) {
  std::string digits = std::to_string(rep);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  return "run_" + digits + ".csv";
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  write_csv_row(out, {"k", "runs", "mean_J", "se_J", "mean_stationarity", "se_stationarity", "smoothed_mean_J"});
  for (const auto& r : rows)
    write_csv_row(out, {std::to_string(r.k), std::to_string(r.runs), format_double(r.exact_j.mean),
                        format_double(r.exact_j.std_error), format_double(r.stationarity.mean),
                        format_double(r.stationarity.std_error), format_double(r.smoothed_mean_j)});
}

inline void write_runs_csv(std::ostream& out, const std::vector<RunOutcome>& runs) {
  write_csv_row(out, {"rep", "seed", "status", "final_J", "sampled_index", "stationarity_at_R", "converged_at",
                      "active_constraints", "error"});
  for (const auto& run : runs) {
    std::vector<std::string> row{std::to_string(run.repetition), std::to_string(run.seed),
                                 run.ok ? "ok" : "failed"};
    if (run.ok && run.result) {
      const RunResult& r = *run.result;
      std::string active;
      for (std::size_t j : r.active_constraints) active += (active.empty() ? "" : " ") + std::to_string(j);
      row.push_back(format_double(r.exact_j_trace.back()));
      row.push_back(std::to_string(r.sampled_index));
      row.push_back(format_double(r.stationarity_trace[r.sampled_index]));
      row.push_back(r.converged_at ? std::to_string(*r.converged_at) : "");
      row.push_back(active);
      row.push_back("");
    } else {
      std::string message = run.error;
      std::replace(message.begin(), message.end(), ',', ';');
      std::replace(message.begin(), message.end(), '\n', ' ');
      row.insert(row.end(), {"", "", "", "", "", message});
    }
    write_csv_row(out, row);
  }
}

inline void write_experiment(const ExperimentReport& report, const std::string& output_dir) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + output_dir + "': " + ec.message());
  auto open = [&](const std::string& name) {
    const auto path = std::filesystem::path(output_dir) / name;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    return out;
  };
  for (const auto& run : report.runs) {
    if (!run.ok || !run.result) continue;
    auto out = open(run_file_name(run.repetition));
    write_trace_csv(out, *run.result);
  }
  {
    auto out = open("aggregate.csv");
    write_aggregate_csv(out, report.aggregate);
  }
  auto out = open("runs.csv");
  write_runs_csv(out, report.runs);
}

inline ExperimentReport run_experiment(const RunConfig& cfg) {
  ExperimentReport report = execute_runs(cfg);
  write_experiment(report, cfg.output_dir);
  return report;
}

struct SweepRow {
  std::size_t iterations = 0;
  std::size_t repetitions = 0;
  std::size_t failed = 0;
  MeanWithError stationarity;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::optional<double> slope;

  std::size_t failed() const {
    std::size_t f = 0;
    for (const auto& r : rows) f += r.failed;
    return f;
  }
};

/// For each budget N: Corollary schedule, cfg.sweep_repetitions runs, and
/// ||P(theta_R, grad J(theta_R), alpha_R)||^2 at the step-size-weighted random
/// index R. The slope is fitted on log(mean) against log(N).
inline SweepReport rate_sweep(const RunConfig& cfg, const std::vector<std::size_t>& budgets) {
  if (budgets.empty()) throw ConfigError("rate sweep needs at least one iteration budget");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 1) throw ConfigError("iteration budgets must be at least 1");
    if (i > 0 && budgets[i] <= budgets[i - 1]) throw ConfigError("iteration budgets must be strictly ascending");
  }
  if (cfg.sweep_repetitions < 1) throw ConfigError("[sweep] repetitions must be at least 1");
  const Experiment ex = resolve_experiment(cfg);

  SweepReport report;
  for (const std::size_t N : budgets) {
    const Schedule schedule = corollary_schedule(N, cfg.schedule.c1, cfg.schedule.c2, cfg.schedule.c3, cfg.schedule.m);
    std::vector<std::optional<double>> values(cfg.sweep_repetitions);
    parallel_for(cfg.sweep_repetitions, cfg.threads, [&](std::size_t rep) {
      const std::uint64_t seed = derive_seed(cfg.seed, {stream::kSweep, N, rep});
      try {
        const RunResult run = offp_sf_run(ex.mdp, ex.behavior, ex.box, schedule, ex.theta0, N, seed, {}, cfg.horizon_cap);
        const std::size_t R = run.sampled_index;
        const auto& theta_r = run.theta_trace[R];
        const auto grad = exact_gradient(ex.mdp, theta_r, cfg.horizon_cap, cfg.diagnostics.fd_step);
        values[rep] = stationarity_measure(theta_r, grad, schedule.alpha[R], ex.box);
      } catch (const NumericError&) {
      } catch (const DataIntegrityError&) {
      }
    });
    SweepRow row{N, cfg.sweep_repetitions, 0, {}};
    RunningStats stats;
    for (const auto& v : values) {
      if (v) stats.add(*v);
      else ++row.failed;
    }
    row.stationarity = {stats.mean(), stats.std_error()};
    report.rows.push_back(row);
  }
  if (report.rows.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& r : report.rows) {
      xs.push_back(static_cast<double>(r.iterations));
      ys.push_back(r.stationarity.mean);
    }
    report.slope = log_log_slope(xs, ys);
  }
  return report;
}

inline void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  write_csv_row(out, {"N", "repetitions", "failed", "mean_stationarity", "se_stationarity", "slope"});
  const std::string slope = report.slope ? format_double(*report.slope) : "";
  for (const auto& r : report.rows)
    write_csv_row(out, {std::to_string(r.iterations), std::to_string(r.repetitions), std::to_string(r.failed),
                        format_double(r.stationarity.mean), format_double(r.stationarity.std_error), slope});
}

}  // namespace offpsf
