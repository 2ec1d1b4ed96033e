#include "cmsnb/simulation.hpp"

#include <cmath>
#include <string>

namespace cmsnb {

SimResult simulate_from_model(const ModelSpec& spec, const Params& p,
                              const PanelData& skeleton, Rng& state_rng,
                              Rng& count_rng) {
  const StateSpace& ss = spec.ss;
  const int K = ss.K(), N = skeleton.N, T = skeleton.T;
  if (skeleton.init_dist.size() != static_cast<size_t>(N) * K)
    fail("domain", "skeleton needs an initial state distribution over all K states");

  SimResult out;
  out.data = skeleton;
  out.data.y.assign(static_cast<size_t>(N) * T, 0);
  out.states = LatentStates(N, T);
  PanelData& d = out.data;
  LatentStates& st = out.states;

  std::vector<double> row(K);
  for (int i = 0; i < N; ++i) {
    int s = state_rng.categorical(d.init_dist.data() + static_cast<size_t>(i) * K, K);
    if (s < 0) fail("domain", "initial distribution has zero mass");
    st.set(i, 0, s + 1);
  }
  for (int t = 1; t < T; ++t) {
    // the whole slice advances off t-1 before any count is drawn
    for (int i = 0; i < N; ++i) {
      double nbr = neighbor_outbreak_sum(d, ss, st, i, t - 1);
      TransScores sc = transition_scores(spec, p.chain, d.z_at(i, t), nbr);
      transition_row(spec, sc, st.at(i, t - 1), row.data());
      int s = state_rng.categorical(row.data(), K);
      if (s < 0) fail("numeric", "transition row lost all mass during simulation");
      st.set(i, t, s + 1);
    }
  }
  // counts: week-1 emissions are anchored at y_prev = 0
  for (int i = 0; i < N; ++i) {
    long prev = 0;
    for (int t = 0; t < T; ++t) {
      const int cs = ss.collapse(st.at(i, t));
      long yv = 0;
      if (cs != ABSENCE) {
        const CountParams& c = p.count;
        double lm = cs == ENDEMIC ? c.intercept_en(i) : c.intercept_ob(i);
        const auto& sub = cs == ENDEMIC ? spec.x_en : spec.x_ob;
        const auto& beta = cs == ENDEMIC ? c.beta_en : c.beta_ob;
        const double* xr = d.x_at(i, t);
        for (int q : sub) lm += beta[q] * xr[q];
        lm += (cs == ENDEMIC ? c.rho_en : c.rho_ob) * std::log1p(static_cast<double>(prev));
        yv = count_rng.neg_binomial(std::exp(lm), cs == ENDEMIC ? c.r_en : c.r_ob);
      }
      d.y[static_cast<size_t>(i) * T + t] = yv;
      prev = yv;
    }
  }
  return out;
}

BenchmarkResult simulate_cluster_benchmark(const BenchmarkConfig& cfg) {
  const int N = cfg.N(), T = cfg.T();
  if (cfg.absence_len >= cfg.period || cfg.jitter > cfg.period)
    fail("config", "benchmark windows cannot hold the absence or jitter spans");
  Rng truth_rng(cfg.seed, 0);
  Rng count_rng(cfg.seed, 1);

  BenchmarkResult out;
  BenchmarkTruth& tr = out.truth;
  tr.N = N;
  tr.T = T;
  tr.state.assign(static_cast<size_t>(N) * T, ENDEMIC);
  tr.outbreak_start.resize(N);

  std::vector<double> beds(N);
  for (int i = 0; i < N; ++i) beds[i] = truth_rng.normal();

  const int absence_off = (cfg.period - cfg.absence_len) / 2;
  for (int i = 0; i < N; ++i) {
    for (int c = 0; c < cfg.cycles; ++c) {
      const int en0 = c * 2 * cfg.period;
      const int ob0 = en0 + cfg.period;
      const int start = ob0 + static_cast<int>(truth_rng.integer(cfg.jitter));
      tr.outbreak_start[i].push_back(start);
      for (int t = start; t < ob0 + cfg.period; ++t)
        tr.state[static_cast<size_t>(i) * T + t] = OUTBREAK;
      if (truth_rng.unif() < cfg.absence_prob)
        for (int t = en0 + absence_off; t < en0 + absence_off + cfg.absence_len; ++t)
          tr.state[static_cast<size_t>(i) * T + t] = ABSENCE;
    }
  }

  PanelData& d = out.data;
  d.N = N;
  d.T = T;
  d.area_ids.resize(N);
  for (int i = 0; i < N; ++i) d.area_ids[i] = std::to_string(i + 1);
  d.weeks.resize(T);
  for (int t = 0; t < T; ++t) d.weeks[t] = t + 1;
  d.x_names = {"beds"};
  d.x.resize(static_cast<size_t>(N) * T);
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) d.x[static_cast<size_t>(i) * T + t] = beds[i];
  d.in_nbrs.resize(N);
  for (int i = 0; i < N; ++i) {
    const int c0 = (i / cfg.areas_per_cluster) * cfg.areas_per_cluster;
    for (int j = c0; j < c0 + cfg.areas_per_cluster; ++j)
      if (j != i) d.in_nbrs[i].push_back({j, 1.0});
  }
  d.build_rev_nbrs();

  d.y.assign(static_cast<size_t>(N) * T, 0);
  for (int i = 0; i < N; ++i) {
    long prev = 0;
    for (int t = 0; t < T; ++t) {
      long yv = 0;
      switch (tr.at(i, t)) {
        case ABSENCE: break;
        case ENDEMIC:
          yv = count_rng.neg_binomial(
              std::exp(cfg.en_beds * beds[i] + cfg.en_rho * std::log1p(static_cast<double>(prev))),
              cfg.r);
          break;
        default:
          yv = count_rng.neg_binomial(
              std::exp(cfg.ob_b0 + cfg.ob_beds * beds[i] +
                       cfg.ob_rho * std::log1p(static_cast<double>(prev))),
              cfg.r);
      }
      d.y[static_cast<size_t>(i) * T + t] = yv;
      prev = yv;
    }
  }
  return out;
}

}  // namespace cmsnb
