#pragma once
// Synthetic data: forward simulation of the full model on a covariate
// skeleton, and the clustered fixed-outbreak benchmark with pre-determined
// outbreak windows.

#include <cstdint>
#include <vector>

#include "cmsnb/model.hpp"
#include "cmsnb/rng.hpp"
#include "cmsnb/types.hpp"

namespace cmsnb {

struct SimResult {
  PanelData data;       // skeleton with counts filled in
  LatentStates states;  // the simulated truth
};

// Joint forward simulation: week-1 states from the skeleton's initial
// distribution, later slices from the transition model (neighbour terms use
// the simulated previous slice), counts from the emissions with week-1 means
// anchored at y_prev = 0.  `state_rng` drives the latent paths and
// `count_rng` the counts, so the truth is unchanged when only count draws
// differ.
SimResult simulate_from_model(const ModelSpec& spec, const Params& p,
                              const PanelData& skeleton, Rng& state_rng,
                              Rng& count_rng);

// Clustered benchmark: areas alternate fixed-length endemic and outbreak
// windows; outbreak onset is jittered uniformly over the first `jitter`
// weeks of its window, and each endemic window carries a mid-window absence
// period with probability `absence_prob`.
struct BenchmarkConfig {
  int n_clusters = 5;
  int areas_per_cluster = 6;
  int period = 15;  // weeks per endemic or outbreak window
  int cycles = 4;   // endemic+outbreak alternations (T = 2 * period * cycles)
  int jitter = 4;
  double absence_prob = 0.4;
  int absence_len = 7;
  double r = 10.0;
  double en_beds = 0.1, en_rho = 0.5;               // endemic mean e^{b*beds} (y+1)^rho
  double ob_b0 = 0.75, ob_beds = 0.05, ob_rho = 0.75;
  std::uint64_t seed = 1;

  int N() const { return n_clusters * areas_per_cluster; }
  int T() const { return 2 * period * cycles; }
};

struct BenchmarkTruth {
  int N = 0, T = 0;
  std::vector<std::uint8_t> state;               // collapsed truth, [i*T + t]
  std::vector<std::vector<int>> outbreak_start;  // 0-based onset weeks per area

  int at(int i, int t) const { return state[static_cast<size_t>(i) * T + t]; }
};

struct BenchmarkResult {
  PanelData data;  // covariate "beds", within-cluster neighbours at weight 1
  BenchmarkTruth truth;
};

// Truth (windows, jitter, absence insertion, beds) comes from one stream of
// cfg.seed and the counts from another, so the design is reproducible
// independently of the count noise.
BenchmarkResult simulate_cluster_benchmark(const BenchmarkConfig& cfg);

}  // namespace cmsnb
