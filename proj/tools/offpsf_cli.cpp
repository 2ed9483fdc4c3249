// offpsf: run experiments, rate sweeps, and statistical self-checks.
//
// Exit codes: 0 success, 1 a verify check failed, 2 configuration or
// startup error, 3 one or more runs failed numerically.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "offpsf/offpsf.hpp"

namespace {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRunFailed = 3 };

struct Overrides {
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repetitions;
  std::optional<std::size_t> threads;
};

void apply(const Overrides& o, offpsf::RunConfig& cfg) {
  if (o.output) cfg.output_dir = *o.output;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
}

void add_common(CLI::App* cmd, std::string& config_path, Overrides& o) {
  cmd->add_option("-c,--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", o.output, "Output directory (overrides [experiment] output)");
  cmd->add_option("-s,--seed", o.seed, "Master seed (overrides [experiment] seed)");
  cmd->add_option("-r,--repetitions", o.repetitions, "Repetition count override");
  cmd->add_option("-j,--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
}

int cmd_run(const std::string& config_path, const Overrides& o) {
  auto cfg = offpsf::load_config(config_path);
  apply(o, cfg);
  if (o.repetitions) cfg.repetitions = *o.repetitions;
  const auto report = offpsf::run_experiment(cfg);
  const auto& last = report.aggregate.back();
  std::cout << "runs: " << report.runs.size() << " (" << report.failed() << " failed)\n"
            << "mean exact J at k=" << last.k << ": " << offpsf::format_double(last.exact_j.mean) << " +/- "
            << offpsf::format_double(last.exact_j.std_error) << "\n"
            << "wrote " << cfg.output_dir << "/aggregate.csv\n";
  for (const auto& run : report.runs)
    if (run.ok && !run.result->active_constraints.empty())
      std::cout << "run " << run.repetition << " ended with active box constraints\n";
  return report.all_ok() ? kOk : kRunFailed;
}

int cmd_sweep(const std::string& config_path, const Overrides& o, const std::vector<std::size_t>& budgets) {
  auto cfg = offpsf::load_config(config_path);
  apply(o, cfg);
  if (o.repetitions) cfg.sweep_repetitions = *o.repetitions;
  const auto list = budgets.empty() ? cfg.sweep_iterations : budgets;
  const auto report = offpsf::rate_sweep(cfg, list);

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  const auto path = std::filesystem::path(cfg.output_dir) / "rate_sweep.csv";
  std::ofstream out(path);
  if (!out) throw offpsf::ConfigError("cannot write '" + path.string() + "'");
  offpsf::write_sweep_csv(out, report);
  offpsf::write_sweep_csv(std::cout, report);
  std::cout << "wrote " << path.string() << "\n";
  return report.failed() == 0 ? kOk : kRunFailed;
}

int cmd_verify(const std::string& suite, std::optional<std::uint64_t> seed) {
  offpsf::VerifyOptions opt;
  if (seed) opt.seed = *seed;
  const auto report = offpsf::verify(suite, opt);
  offpsf::print_report(std::cout, report);
  std::cout << (report.passed() ? "all checks passed\n" : "some checks FAILED\n");
  return report.passed() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy smoothed-functional policy gradient experiments"};
  app.require_subcommand(1);

  std::string run_config;
  Overrides run_overrides;
  auto* run = app.add_subcommand("run", "Run repeated OffP-SF experiments and write CSV traces");
  add_common(run, run_config, run_overrides);

  std::string sweep_config;
  Overrides sweep_overrides;
  std::vector<std::size_t> budgets;
  auto* sweep = app.add_subcommand("rate-sweep", "Stationarity at the random index across iteration budgets");
  add_common(sweep, sweep_config, sweep_overrides);
  sweep->add_option("-n,--n-list", budgets, "Iteration budgets (overrides [sweep] N_list)")->delimiter(',');

  std::string suite = "all";
  std::optional<std::uint64_t> verify_seed;
  auto* ver = app.add_subcommand("verify", "Run fixed-seed statistical self-checks");
  ver->add_option("suite", suite, "is-unbiased | sf-unbiased | bias-bound | variance-scaling | prox-props | all")
      ->check(CLI::IsMember({"is-unbiased", "sf-unbiased", "bias-bound", "variance-scaling", "prox-props", "all"}));
  ver->add_option("-s,--seed", verify_seed, "Seed for the checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_config, run_overrides);
    if (*sweep) return cmd_sweep(sweep_config, sweep_overrides, budgets);
    if (*ver) return cmd_verify(suite, verify_seed);
  } catch (const offpsf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailed;
  }
  return kOk;
}
