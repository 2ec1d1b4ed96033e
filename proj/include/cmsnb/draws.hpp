#pragma once
// Posterior draw storage: per-chain parameter traces, thinned latent state
// draws, adaptation summaries and online predictive-density accumulators.

#include <cstdint>
#include <string>
#include <vector>

#include "cmsnb/types.hpp"

namespace cmsnb {

// Per-cell accumulators over draws of the pointwise predictive density:
// running log-sum-exp of p and Welford mean/M2 of log p.  Cells with t = 0
// are unused (first-week counts are conditioned on).
struct WaicAccum {
  int N = 0, T = 0;
  long n = 0;
  std::vector<double> lse, mean, m2;

  void init(int n_areas, int n_weeks);
  void add_draw(const double* logp_cells);  // one full N*T slice per draw
  void merge(const WaicAccum& other);       // order-stable parallel combine
  bool empty() const { return n == 0; }
};

struct SamplerConfig {
  long iters = 200000;
  long burnin = 50000;
  int chains = 3;
  int thin_states = 10;
  std::uint64_t seed = 1;
  int adapt_interval = 50;
  double adapt_target = 0.44;
  double init_stay = 0.8;       // self-transition mass of the state
                                // initialization chain
  long max_init_tries = 10000;
  bool online_predictive = true;
  int threads = 0;              // 0 = min(chains, hardware)

  long n_kept() const { return iters - burnin; }
  long n_state_draws() const {
    return n_kept() <= 0 ? 0 : (n_kept() - 1) / thin_states + 1;
  }
  void validate() const;
};

struct ChainDraws {
  long n_kept = 0;
  long n_state_draws = 0;
  std::vector<double> params;        // n_kept x P, row-major
  std::vector<std::uint8_t> states;  // n_state_draws x N x T
  std::vector<double> accept_rate;   // per parameter, whole run
  std::vector<double> prop_sd;       // final proposal scales
  WaicAccum pred;
  double final_loglik = 0.0;

  double at(long draw, int k, int P) const { return params[draw * P + k]; }
};

struct PosteriorDraws {
  std::vector<std::string> names;  // sampled parameter names
  ModelSpec spec;
  SamplerConfig cfg;
  std::vector<std::string> area_ids;
  std::vector<int> weeks;
  std::vector<std::string> x_names, z_names;
  // covariate standardization recorded at fit time (empty when not applied)
  std::vector<double> x_mean, x_sd, z_mean, z_sd;
  std::vector<ChainDraws> chains;

  int P() const { return static_cast<int>(names.size()); }
  int N() const { return static_cast<int>(area_ids.size()); }
  int T() const { return static_cast<int>(weeks.size()); }
  int name_index(const std::string& name) const;  // -1 when absent
  // trace of one parameter in one chain
  std::vector<double> column(int chain, int k) const;
  // latent state of draw d (alignment: state draw d <-> kept row d*thin)
  const std::uint8_t* state_draw(int chain, long d) const;
  // merged predictive accumulators across chains
  WaicAccum merged_pred() const;
};

}  // namespace cmsnb
