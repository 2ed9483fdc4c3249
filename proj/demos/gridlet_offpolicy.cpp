// Off-policy evaluation on the gridlet: the importance-sampled estimate of a
// goal-seeking policy against its exact value, from behavior data that mostly
// grabs the distractor.

#include <cstdio>
#include <vector>

#include "offpsf/offpsf.hpp"

int main() {
  using namespace offpsf;
  const auto mdp = fixtures::gridlet();

  // Behavior: grab w.p. 0.6, move right/down w.p. 0.2 each.
  std::vector<double> probs;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) probs.insert(probs.end(), {0.2, 0.2, 0.6});
  const BehaviorPolicy behavior(mdp.num_states(), mdp.num_actions(), probs);

  // Target: strongly prefer moving; logits (right, down, grab) per cell.
  const std::vector<double> theta{1.0, 1.0, -1.0, 0.0, 1.5, -1.0, 1.5, 0.0, -1.0, 1.0, 1.0, -1.0};

  for (std::size_t m : {10, 100, 1000, 10000}) {
    const auto batch = sample_batch(mdp, behavior, m, derive_seed(11, {m}));
    std::printf("m=%5zu  PDIS estimate %.4f\n", m, pdis_estimate(batch, theta));
  }
  std::printf("exact value      %.4f\n", exact_value(mdp, PolicyShape::of(mdp), theta));
}
