// Learns the two-armed bandit from uniformly random behavior data and prints
// the exact value of every 20th iterate.

#include <cstdio>

#include "offpsf/offpsf.hpp"

int main() {
  using namespace offpsf;
  const auto mdp = fixtures::bandit();
  const auto behavior = BehaviorPolicy::uniform(mdp);
  const auto box = BoxSet::cube(2, -5.0, 5.0);
  const std::size_t N = 200;
  const auto schedule = corollary_schedule(N, 1.0, 1.0, 0.5, 20);

  const auto run = offp_sf_run(mdp, behavior, box, schedule, box.center(), N, /*master_seed=*/7,
                               Diagnostics{.exact = true});
  for (std::size_t k = 0; k <= N; k += 20)
    std::printf("k=%3zu  theta=(%+.3f, %+.3f)  J=%.4f\n", k, run.theta_trace[k][0], run.theta_trace[k][1],
                run.exact_j_trace[k]);
  std::printf("random index R=%zu, stationarity there %.3e\n", run.sampled_index,
              run.stationarity_trace[run.sampled_index]);
}
