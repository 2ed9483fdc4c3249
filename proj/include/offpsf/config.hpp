#pragma once

// Experiment configuration: INI-style sections of key = value pairs.
// See docs/config.md for every key and its default.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "offpsf/errors.hpp"
#include "offpsf/fixtures.hpp"
#include "offpsf/format.hpp"
#include "offpsf/mdp.hpp"
#include "offpsf/mdp_io.hpp"
#include "offpsf/optimizer.hpp"

namespace offpsf {

struct BehaviorSpec {
  std::string kind = "uniform";  // uniform | table
  std::vector<double> probs;     // row-major (num_states, num_actions) for "table"
  double floor = kDefaultBehaviorFloor;
};

struct ScheduleSpec {
  std::string kind = "corollary";  // corollary | asymptotic
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 0.5;
  std::size_t m = 20;
  double a0 = 1.0;
  double mu0 = 0.5;
  double n_growth = 10.0;
};

struct RunConfig {
  std::string mdp = "bandit";  // fixture name or MDP file path
  std::string base_dir = ".";  // relative MDP paths resolve against this
  std::size_t horizon_cap = kDefaultHorizonCap;
  BehaviorSpec behavior;
  std::vector<double> box_lower{-5.0};  // one value broadcasts to every coordinate
  std::vector<double> box_upper{5.0};
  std::optional<std::vector<double>> theta0;  // defaults to the box center
  ScheduleSpec schedule;
  std::size_t iterations = 200;
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;
  std::size_t threads = 1;
  Diagnostics diagnostics{.exact = true};
  std::string output_dir = "out";
  std::vector<std::size_t> sweep_iterations{25, 100, 400};
  std::size_t sweep_repetitions = 50;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
  std::string spaced = text;
  for (char& c : spaced)
    if (c == ',' || c == ';') c = ' ';
  std::istringstream in(spaced);
  std::vector<std::string> items;
  std::string item;
  while (in >> item) items.push_back(item);
  return items;
}

inline std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  for (const auto& item : split_list(text)) values.push_back(parse_double(item));
  return values;
}

inline bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("expected a boolean, got '" + text + "'");
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Parses a config stream; `base_dir` anchors relative MDP paths.
inline RunConfig parse_config(std::istream& in, const std::string& base_dir = ".") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  static const std::map<std::string, std::set<std::string>> known{
      {"experiment", {"mdp", "horizon_cap", "N", "seed", "repetitions", "threads", "output", "theta0"}},
      {"behavior", {"kind", "probs", "floor"}},
      {"box", {"lower", "upper"}},
      {"schedule", {"kind", "c1", "c2", "c3", "m", "a0", "mu0", "n_growth"}},
      {"diagnostics",
       {"exact", "bias_noise", "oracle_samples", "fd_step", "converge_tol", "converge_window"}},
      {"sweep", {"N_list", "repetitions"}},
  };

  RunConfig cfg;
  cfg.base_dir = base_dir;
  bool have_seed = false;

  for (const auto& [section, body] : tree) {
    const auto sec = known.find(section);
    if (sec == known.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, node] : body) {
      if (!sec->second.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
      const std::string value = detail::trim(node.get_value<std::string>());
      try {
        if (section == "experiment") {
          if (key == "mdp") cfg.mdp = value;
          else if (key == "horizon_cap") cfg.horizon_cap = parse_count(value);
          else if (key == "N") cfg.iterations = parse_count(value);
          else if (key == "seed") { cfg.seed = parse_count(value); have_seed = true; }
          else if (key == "repetitions") cfg.repetitions = parse_count(value);
          else if (key == "threads") cfg.threads = parse_count(value);
          else if (key == "output") cfg.output_dir = value;
          else if (key == "theta0") cfg.theta0 = detail::parse_double_list(value);
        } else if (section == "behavior") {
          if (key == "kind") cfg.behavior.kind = value;
          else if (key == "probs") cfg.behavior.probs = detail::parse_double_list(value);
          else if (key == "floor") cfg.behavior.floor = parse_double(value);
        } else if (section == "box") {
          if (key == "lower") cfg.box_lower = detail::parse_double_list(value);
          else if (key == "upper") cfg.box_upper = detail::parse_double_list(value);
        } else if (section == "schedule") {
          if (key == "kind") cfg.schedule.kind = value;
          else if (key == "c1") cfg.schedule.c1 = parse_double(value);
          else if (key == "c2") cfg.schedule.c2 = parse_double(value);
          else if (key == "c3") cfg.schedule.c3 = parse_double(value);
          else if (key == "m") cfg.schedule.m = parse_count(value);
          else if (key == "a0") cfg.schedule.a0 = parse_double(value);
          else if (key == "mu0") cfg.schedule.mu0 = parse_double(value);
          else if (key == "n_growth") cfg.schedule.n_growth = parse_double(value);
        } else if (section == "diagnostics") {
          if (key == "exact") cfg.diagnostics.exact = detail::parse_bool(value);
          else if (key == "bias_noise") cfg.diagnostics.bias_noise = detail::parse_bool(value);
          else if (key == "oracle_samples") cfg.diagnostics.oracle_samples = parse_count(value);
          else if (key == "fd_step") cfg.diagnostics.fd_step = parse_double(value);
          else if (key == "converge_tol") cfg.diagnostics.converge_tol = parse_double(value);
          else if (key == "converge_window") cfg.diagnostics.converge_window = parse_count(value);
        } else if (section == "sweep") {
          if (key == "N_list") {
            cfg.sweep_iterations.clear();
            for (const auto& item : detail::split_list(value)) cfg.sweep_iterations.push_back(parse_count(item));
          } else if (key == "repetitions") {
            cfg.sweep_repetitions = parse_count(value);
          }
        }
      } catch (const ConfigError& e) {
        throw ConfigError("[" + section + "] " + key + ": " + e.what());
      }
    }
  }

  if (!have_seed) throw ConfigError("config must set [experiment] seed");
  if (cfg.schedule.kind != "corollary" && cfg.schedule.kind != "asymptotic")
    throw ConfigError("[schedule] kind must be 'corollary' or 'asymptotic'");
  if (cfg.behavior.kind != "uniform" && cfg.behavior.kind != "table")
    throw ConfigError("[behavior] kind must be 'uniform' or 'table'");
  if (cfg.iterations < 1) throw ConfigError("[experiment] N must be at least 1");
  if (cfg.repetitions < 1) throw ConfigError("[experiment] repetitions must be at least 1");
  if (cfg.horizon_cap < 1) throw ConfigError("[experiment] horizon_cap must be at least 1");
  for (double c : {cfg.schedule.c1, cfg.schedule.c2, cfg.schedule.c3, cfg.schedule.a0, cfg.schedule.mu0,
                   cfg.schedule.n_growth})
    if (!(c > 0.0)) throw ConfigError("[schedule] constants must be positive");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  const auto parent = std::filesystem::path(path).parent_path();
  try {
    return parse_config(in, parent.empty() ? std::string(".") : parent.string());
  } catch (...) {
    detail::rethrow_with_context("config '" + path + "'");
  }
}

/// Everything a single run needs, resolved from a RunConfig.
struct Experiment {
  TabularMdp mdp;
  BehaviorPolicy behavior;
  BoxSet box;
  std::vector<double> theta0;
};

inline TabularMdp resolve_mdp(const RunConfig& cfg) {
  if (fixtures::exists(cfg.mdp)) return fixtures::by_name(cfg.mdp);
  const bool looks_like_path = cfg.mdp.find('/') != std::string::npos || cfg.mdp.find('.') != std::string::npos;
  if (!looks_like_path) throw ConfigError("unknown fixture '" + cfg.mdp + "'");
  std::filesystem::path p(cfg.mdp);
  if (p.is_relative()) p = std::filesystem::path(cfg.base_dir) / p;
  return read_mdp_file(p.string());
}

inline Experiment resolve_experiment(const RunConfig& cfg) {
  TabularMdp mdp = resolve_mdp(cfg);
  const std::size_t d = PolicyShape::of(mdp).dim();

  BehaviorPolicy behavior =
      cfg.behavior.kind == "uniform"
          ? BehaviorPolicy::uniform(mdp, cfg.behavior.floor)
          : BehaviorPolicy(mdp.num_states(), mdp.num_actions(), cfg.behavior.probs, cfg.behavior.floor);

  auto broadcast = [d](const std::vector<double>& v, const char* name) {
    if (v.size() == 1) return std::vector<double>(d, v.front());
    if (v.size() != d)
      throw ConfigError(std::string("[box] ") + name + " needs 1 or " + std::to_string(d) + " values");
    return v;
  };
  BoxSet box(broadcast(cfg.box_lower, "lower"), broadcast(cfg.box_upper, "upper"));

  std::vector<double> theta0 = cfg.theta0 ? *cfg.theta0 : box.center();
  if (theta0.size() != d) throw ConfigError("[experiment] theta0 needs " + std::to_string(d) + " values");
  if (!box.contains(theta0)) throw ConfigError("[experiment] theta0 lies outside the box");
  return {std::move(mdp), std::move(behavior), std::move(box), std::move(theta0)};
}

inline Schedule build_schedule(const ScheduleSpec& spec, std::size_t N) {
  if (spec.kind == "corollary") return corollary_schedule(N, spec.c1, spec.c2, spec.c3, spec.m);
  return asymptotic_schedule(N, spec.a0, spec.mu0, spec.n_growth, spec.m);
}

}  // namespace offpsf
