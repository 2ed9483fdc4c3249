#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "offpsf/errors.hpp"
#include "offpsf/mdp.hpp"

namespace offpsf::fixtures {

namespace detail {

struct TableBuilder {
  std::size_t S, A;
  std::vector<double> transition = std::vector<double>(S * A * S, 0.0);
  std::vector<double> reward = std::vector<double>(S * A * S, 0.0);

  void set(StateIndex s, ActionIndex a, StateIndex next, double p, double r = 0.0) {
    transition[(s * A + a) * S + next] = p;
    reward[(s * A + a) * S + next] = r;
  }
  void absorbing_terminal() {
    for (ActionIndex a = 0; a < A; ++a) set(kTerminalState, a, kTerminalState, 1.0);
  }
  TabularMdp build(StateIndex start, double gamma) && {
    return {S, A, std::move(transition), std::move(reward), start, gamma};
  }
};

}  // namespace detail

// One state, two actions, single step: action 0 pays 1, action 1 pays 0.
inline TabularMdp bandit() {
  detail::TableBuilder t{2, 2};
  t.absorbing_terminal();
  t.set(1, 0, kTerminalState, 1.0, 1.0);
  t.set(1, 1, kTerminalState, 1.0, 0.0);
  return std::move(t).build(1, 1.0);
}

// Three-state chain 1 -> 2 -> 3 -> exit. "advance" (action 0) moves forward
// w.p. 0.8 paying 1 and drops out w.p. 0.2; from state 3 it exits paying 4.
// "stay" (action 1) pays 0.2 and ends the episode w.p. 0.5.
inline TabularMdp chain3() {
  detail::TableBuilder t{4, 2};
  t.absorbing_terminal();
  for (StateIndex s = 1; s <= 2; ++s) {
    t.set(s, 0, s + 1, 0.8, 1.0);
    t.set(s, 0, kTerminalState, 0.2, 0.0);
  }
  t.set(3, 0, kTerminalState, 1.0, 4.0);
  for (StateIndex s = 1; s <= 3; ++s) {
    t.set(s, 1, s, 0.5, 0.2);
    t.set(s, 1, kTerminalState, 0.5, 0.0);
  }
  return std::move(t).build(1, 0.9);
}

// 2x2 grid, cells 1=(0,0) 2=(0,1) 3=(1,0) 4=(1,1). Actions: right, down,
// grab. Moves succeed w.p. 0.9 (bumping a wall keeps the cell) and slip out
// of the episode w.p. 0.1. Any move from the goal cell 4 exits paying 2.
// "grab" is the distractor: it ends the episode at once paying 0.5.
inline TabularMdp gridlet() {
  detail::TableBuilder t{5, 3};
  t.absorbing_terminal();
  constexpr std::array<StateIndex, 5> right{0, 2, 2, 4, 4};
  constexpr std::array<StateIndex, 5> down{0, 3, 4, 3, 4};
  for (StateIndex s = 1; s <= 4; ++s) {
    if (s == 4) {
      t.set(s, 0, kTerminalState, 1.0, 2.0);
      t.set(s, 1, kTerminalState, 1.0, 2.0);
    } else {
      t.set(s, 0, right[s], 0.9);
      t.set(s, 0, kTerminalState, 0.1);
      t.set(s, 1, down[s], 0.9);
      t.set(s, 1, kTerminalState, 0.1);
    }
    t.set(s, 2, kTerminalState, 1.0, 0.5);
  }
  return std::move(t).build(1, 0.95);
}

inline std::vector<std::string> names() { return {"bandit", "chain3", "gridlet"}; }

inline bool exists(std::string_view name) {
  return name == "bandit" || name == "chain3" || name == "gridlet";
}

inline TabularMdp by_name(std::string_view name) {
  if (name == "bandit") return bandit();
  if (name == "chain3") return chain3();
  if (name == "gridlet") return gridlet();
  throw ConfigError("unknown fixture '" + std::string(name) + "'");
}

}  // namespace offpsf::fixtures
