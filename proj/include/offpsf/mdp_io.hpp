#pragma once

// Plain-text MDP files. Grammar (whitespace separated, '#' to end of line is
// a comment):
//
//   states <S>          total states, including the terminal state 0
//   actions <A>
//   start <s>           non-terminal start state
//   gamma <g>           discount in (0, 1]
//   transition          S*A*S probabilities, row-major over (s, a, s')
//   reward              S*A*S rewards, same order
//
// The four header keys may appear in any order but must precede the tables.

#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "offpsf/errors.hpp"
#include "offpsf/format.hpp"
#include "offpsf/mdp.hpp"

namespace offpsf {

namespace detail {

class Tokenizer {
 public:
  explicit Tokenizer(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream words(line);
      std::string w;
      while (words >> w) tokens_.push_back(w);
    }
  }

  bool done() const noexcept { return pos_ >= tokens_.size(); }
  const std::string& peek() const { return tokens_.at(pos_); }
  std::string next(const char* what) {
    if (done()) throw ConfigError(std::string("unexpected end of MDP file while reading ") + what);
    return tokens_[pos_++];
  }

 private:
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline TabularMdp read_mdp(std::istream& in) {
  detail::Tokenizer tok(in);
  std::optional<std::size_t> states, actions, start;
  std::optional<double> gamma;
  std::vector<double> transition, reward;

  auto read_table = [&](const char* name) {
    if (!states || !actions) throw ConfigError(std::string("'") + name + "' table before states/actions");
    const std::size_t cells = *states * *actions * *states;
    std::vector<double> table;
    table.reserve(cells);
    for (std::size_t i = 0; i < cells; ++i) table.push_back(parse_double(tok.next(name)));
    return table;
  };

  while (!tok.done()) {
    const std::string key = tok.next("key");
    if (key == "states") {
      states = parse_count(tok.next("states"));
    } else if (key == "actions") {
      actions = parse_count(tok.next("actions"));
    } else if (key == "start") {
      start = parse_count(tok.next("start"));
    } else if (key == "gamma") {
      gamma = parse_double(tok.next("gamma"));
    } else if (key == "transition") {
      transition = read_table("transition");
    } else if (key == "reward") {
      reward = read_table("reward");
    } else {
      throw ConfigError("unknown key '" + key + "' in MDP file");
    }
  }
  if (!states || !actions || !start || !gamma) throw ConfigError("MDP file is missing states, actions, start, or gamma");
  if (transition.empty() || reward.empty()) throw ConfigError("MDP file is missing the transition or reward table");
  return {*states, *actions, std::move(transition), std::move(reward), *start, *gamma};
}

inline TabularMdp read_mdp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open MDP file '" + path + "'");
  try {
    return read_mdp(in);
  } catch (...) {
    detail::rethrow_with_context("MDP file '" + path + "'");
  }
}

inline void write_mdp(std::ostream& out, const TabularMdp& mdp) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  out << "states " << S << "\nactions " << A << "\nstart " << mdp.start_state() << "\ngamma "
      << format_double(mdp.gamma()) << "\n";
  auto table = [&](const char* name, const std::vector<double>& values) {
    out << name << "\n";
    for (std::size_t row = 0; row < S * A; ++row) {
      out << "  ";
      for (std::size_t t = 0; t < S; ++t) out << (t ? " " : "") << format_double(values[row * S + t]);
      out << "  # s=" << row / A << " a=" << row % A << "\n";
    }
  };
  table("transition", mdp.transition_table());
  table("reward", mdp.reward_table());
}

}  // namespace offpsf
