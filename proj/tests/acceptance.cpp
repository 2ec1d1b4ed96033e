// Acceptance harness: each criterion is a self-contained function returning a
// pass flag plus a one-line report.  Invoke as `acceptance <n>` with n in
// 1..9; the binary prints exactly one "criterion n PASS|FAIL: ..." line and
// exits 0 on pass.  The long criteria (4, 5, 6, 9) log per-replication
// progress on stderr.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cmsnb/diagnostics.hpp"
#include "cmsnb/inference.hpp"
#include "cmsnb/io.hpp"
#include "cmsnb/metrics.hpp"
#include "cmsnb/model.hpp"
#include "cmsnb/priors.hpp"
#include "cmsnb/rng.hpp"
#include "cmsnb/sampler.hpp"
#include "cmsnb/simulation.hpp"
#include "cmsnb/types.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace cmsnb;
using clock_type = std::chrono::steady_clock;

namespace {

struct Check {
  bool pass = false;
  std::string detail;
};

std::string strf(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

bool bytes_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// interpolated quantile of an already sorted vector
double quantile_sorted(const std::vector<double>& v, double q) {
  double pos = q * (static_cast<double>(v.size()) - 1.0);
  size_t lo = static_cast<size_t>(pos);
  double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

// ---- simulation-study builders ---------------------------------------------

// Clustered covariate skeleton: a per-area bed count, a cluster-level
// mobility series (AR(1) with lag-0.9 correlation, scaled to sd ~20 to mimic
// an unstandardized percentage series) and a late-period variant indicator
// switching on at 78% of the panel.  Full within-cluster neighbourhoods at
// the given weight.
PanelData study_skeleton(int N, int T, int per_cluster, double weight,
                         std::uint64_t seed) {
  PanelData d;
  d.N = N;
  d.T = T;
  d.area_ids.resize(N);
  for (int i = 0; i < N; ++i) d.area_ids[i] = "a" + std::to_string(i + 1);
  d.weeks.resize(T);
  for (int t = 0; t < T; ++t) d.weeks[t] = t + 1;
  d.y.assign(static_cast<size_t>(N) * T, 0);
  d.x_names = {"beds", "mob"};
  d.z_names = {"beds", "mob", "newv"};

  Rng rng(seed, 2);
  std::vector<double> beds(N);
  for (int i = 0; i < N; ++i) beds[i] = rng.normal();
  int n_clusters = (N + per_cluster - 1) / per_cluster;
  std::vector<std::vector<double>> mob(n_clusters, std::vector<double>(T));
  for (int c = 0; c < n_clusters; ++c) {
    double m = rng.normal();
    for (int t = 0; t < T; ++t) {
      if (t > 0) m = 0.9 * m + rng.normal(0.0, std::sqrt(1.0 - 0.81));
      mob[c][t] = 20.0 * m;
    }
  }
  int variant_week = static_cast<int>(0.78 * T);

  d.x.resize(static_cast<size_t>(N) * T * 2);
  d.z.resize(static_cast<size_t>(N) * T * 3);
  for (int i = 0; i < N; ++i) {
    int c = i / per_cluster;
    for (int t = 0; t < T; ++t) {
      size_t cell = static_cast<size_t>(i) * T + t;
      d.x[cell * 2 + 0] = beds[i];
      d.x[cell * 2 + 1] = mob[c][t];
      d.z[cell * 3 + 0] = beds[i];
      d.z[cell * 3 + 1] = mob[c][t];
      d.z[cell * 3 + 2] = t >= variant_week ? 1.0 : 0.0;
    }
  }
  d.in_nbrs.assign(N, {});
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (j != i && j / per_cluster == i / per_cluster)
        d.in_nbrs[i].push_back({j, weight});
  d.build_rev_nbrs();
  d.set_uniform_init(7);
  return d;
}

// Recovery-study model shape: CMSNB(1,2,4), pooled intercepts, shared r,
// both emission covariates; entry ~ beds, recovery ~ beds (+ mobility when
// z21_mob), escalation ~ mobility + variant, persistence ~ mobility.
ModelSpec study_spec(bool c12, bool c21, bool c23, bool c33, bool z21_mob) {
  ModelSpec sp;
  sp.ss = StateSpace{true, 2, 4};
  sp.random_intercepts = false;
  sp.share_r = true;
  sp.x_en = {0, 1};
  sp.x_ob = {0, 1};
  sp.z12 = {0};
  sp.z21 = z21_mob ? std::vector<int>{0, 1} : std::vector<int>{0};
  sp.z23 = {1, 2};
  sp.z33 = {1};
  sp.couple12 = c12;
  sp.couple21 = c21;
  sp.couple23 = c23;
  sp.couple33 = c33;
  return sp;
}

// generating values for the recovery study (couplings on escalation and
// persistence only)
Params recovery_truth() {
  Params p;
  p.count.b0_en = {0.0};
  p.count.b0_ob = {0.78};
  p.count.beta_en = {0.17, 0.003};
  p.count.beta_ob = {0.06, 0.007};
  p.count.rho_en = 0.65;
  p.count.rho_ob = 0.75;
  p.count.r_en = 10.0;
  p.count.r_ob = 10.0;
  p.chain.t12 = {-0.76, {0.45, 0.0, 0.0}, 0.0};
  p.chain.t21 = {-3.6, {-0.9, -0.035, 0.0}, 0.0};
  p.chain.t23 = {-4.15, {0.0, 0.025, 2.5}, 1.15};
  p.chain.t33 = {2.0, {0.0, 0.025, 0.0}, 0.45};
  return p;
}

std::map<std::string, double> recovery_truth_by_name() {
  return {{"b0_en", 0.0},          {"beta_en.beds", 0.17},
          {"beta_en.mob", 0.003},  {"rho_en", 0.65},
          {"b0_ob", 0.78},         {"beta_ob.beds", 0.06},
          {"beta_ob.mob", 0.007},  {"rho_ob", 0.75},
          {"r", 10.0},             {"a12.intercept", -0.76},
          {"a12.beds", 0.45},      {"a21.intercept", -3.6},
          {"a21.beds", -0.9},      {"a21.mob", -0.035},
          {"a23.intercept", -4.15},{"a23.mob", 0.025},
          {"a23.newv", 2.5},       {"a23.spatial", 1.15},
          {"a33.intercept", 2.0},  {"a33.mob", 0.025},
          {"a33.spatial", 0.45}};
}

// generating values for the model-selection and scoring studies; the coupled
// variant puts a spatial term in all four transition regressions
Params selection_truth(bool spatial) {
  Params p;
  p.count.b0_en = {0.0};
  p.count.b0_ob = {0.75};
  p.count.beta_en = {0.1, 0.0};
  p.count.beta_ob = {0.05, 0.007};
  p.count.rho_en = 0.5;
  p.count.rho_ob = 0.75;
  p.count.r_en = 10.0;
  p.count.r_ob = 10.0;
  if (spatial) {
    p.chain.t12 = {-1.0, {0.5, 0.0, 0.0}, 0.25};
    p.chain.t21 = {-3.0, {-1.0, 0.0, 0.0}, -0.25};
    p.chain.t23 = {-4.0, {0.0, 0.04, 1.0}, 1.2};
    p.chain.t33 = {2.0, {0.0, 0.02, 0.0}, 0.5};
  } else {
    p.chain.t12 = {-1.0, {0.5, 0.0, 0.0}, 0.0};
    p.chain.t21 = {-3.0, {-1.0, 0.0, 0.0}, 0.0};
    p.chain.t23 = {-3.5, {0.0, 0.04, 1.0}, 0.0};
    p.chain.t33 = {2.5, {0.0, 0.02, 0.0}, 0.0};
  }
  return p;
}

// small coupled panel for the exactness and identity checks
PanelData tiny_panel(int T, const std::vector<long>& y0,
                     const std::vector<long>& y1) {
  PanelData d;
  d.N = 2;
  d.T = T;
  d.area_ids = {"a", "b"};
  d.weeks.resize(T);
  for (int t = 0; t < T; ++t) d.weeks[t] = t + 1;
  d.y.resize(2 * static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    d.y[t] = y0[t];
    d.y[T + t] = y1[t];
  }
  d.x_names = {"x1"};
  d.z_names = {"z1"};
  Rng rng(17, 3);
  d.x.resize(2 * static_cast<size_t>(T));
  d.z.resize(2 * static_cast<size_t>(T));
  for (auto& v : d.x) v = rng.normal(0.0, 0.4);
  for (auto& v : d.z) v = rng.normal(0.0, 0.5);
  d.in_nbrs = {{{1, 0.4}}, {{0, 0.7}}};
  d.set_uniform_init(7);
  d.build_rev_nbrs();
  return d;
}

// ---- criterion 1: blocked kernel vs exhaustive enumeration ------------------

Check c1() {
  auto t0 = clock_type::now();
  ModelSpec sp = fix::spec124();
  const int K = sp.ss.K();
  const int T = 4;
  PanelData d = tiny_panel(T, {0, 3, 5, 2}, {1, 0, 4, 7});
  Params p = fix::small_params();

  LatentStates st(2, T);
  const int other_path[4] = {2, 3, 3, 4};
  for (int t = 0; t < T; ++t) st.set(1, t, other_path[t]);

  // exact conditional law of area 0's path: enumerate all K^T sequences and
  // normalize the joint density (area 1's fixed-path factors cancel)
  const long n_paths = K * K * K * K;
  std::vector<double> lw(n_paths);
  for (long m = 0; m < n_paths; ++m) {
    long rem = m;
    for (int t = 0; t < T; ++t) {
      st.set(0, t, static_cast<int>(rem % K) + 1);
      rem /= K;
    }
    lw[m] = joint_loglik(sp, d, p, st);
  }
  double mx = *std::max_element(lw.begin(), lw.end());
  std::vector<double> exact(n_paths, 0.0);
  double z = 0.0;
  for (long m = 0; m < n_paths; ++m) {
    if (std::isfinite(lw[m])) exact[m] = std::exp(lw[m] - mx);
    z += exact[m];
  }
  for (auto& v : exact) v /= z;

  // law the blocked update draws from: filtered rows + backward kernels
  for (int t = 0; t < T; ++t) st.set(0, t, 2);
  EmissionCache emis;
  emis.bind(d);
  emis.rebuild(sp, d, p.count);
  AreaFilter af;
  forward_filter_area(sp, d, p, emis, st, 0, false, af);

  std::vector<std::vector<double>> ker(T - 1, std::vector<double>(K * K, 0.0));
  std::vector<double> row(K);
  for (int t = 0; t + 1 < T; ++t) {
    for (int a = 0; a < K; ++a) {
      transition_row(sp, af.sc[t + 1], a + 1, row.data());
      for (int b = 0; b < K; ++b)
        ker[t][b * K + a] = af.filt[static_cast<size_t>(t) * K + a] * row[b];
    }
    for (int b = 0; b < K; ++b) {
      double s = 0.0;
      for (int a = 0; a < K; ++a) s += ker[t][b * K + a];
      if (s > 0.0)
        for (int a = 0; a < K; ++a) ker[t][b * K + a] /= s;
    }
  }

  double tv = 0.0;
  for (long m = 0; m < n_paths; ++m) {
    int s0 = static_cast<int>(m % K);
    int s1 = static_cast<int>((m / K) % K);
    int s2 = static_cast<int>((m / (K * K)) % K);
    int s3 = static_cast<int>(m / (K * K * K));
    double q = af.filt[3 * static_cast<size_t>(K) + s3] * ker[2][s3 * K + s2] *
               ker[1][s2 * K + s1] * ker[0][s1 * K + s0];
    tv += std::abs(exact[m] - q);
  }
  tv *= 0.5;
  double el = seconds_since(t0);
  return {tv <= 1e-8 && el < 10.0,
          strf("blocked kernel vs 7^4 enumeration: total variation %.3g "
               "(tol 1e-8) in %.2f s (limit 10)", tv, el)};
}

// ---- criterion 2: reduction to the plain forward pass -----------------------

Check c2() {
  ModelSpec on = fix::spec124();
  ModelSpec off = on;
  off.couple12 = off.couple21 = off.couple23 = off.couple33 = false;

  const int T = 6;
  PanelData d = tiny_panel(T, {0, 3, 5, 2, 1, 0}, {1, 0, 4, 7, 2, 3});
  d.in_nbrs = {{{1, 0.5}}, {}};  // b feeds a; nobody listens to a
  d.build_rev_nbrs();

  Params p = fix::small_params();
  Params p0 = p;
  p0.chain.t12.spat = p0.chain.t21.spat = 0.0;
  p0.chain.t23.spat = p0.chain.t33.spat = 0.0;

  LatentStates st(2, T);
  const int pa[T] = {2, 3, 4, 4, 5, 2}, pb[T] = {2, 3, 4, 5, 6, 7};
  for (int t = 0; t < T; ++t) {
    st.set(0, t, pa[t]);
    st.set(1, t, pb[t]);
  }

  EmissionCache emis;
  emis.bind(d);
  emis.rebuild(on, d, p0.count);

  // couplings flagged on but pinned at zero, no listeners
  AreaFilter fa, fb;
  forward_filter_area(on, d, p0, emis, st, 0, true, fa);
  forward_filter_area(off, d, p0, emis, st, 0, true, fb);
  bool eq_zero = bytes_equal(fa.filt, fb.filt) && bytes_equal(fa.logpred, fb.logpred);

  // fully isolated area with nonzero coupling coefficients
  PanelData iso = d;
  iso.in_nbrs = {{}, {}};
  iso.build_rev_nbrs();
  EmissionCache emis2;
  emis2.bind(iso);
  emis2.rebuild(on, iso, p.count);
  AreaFilter ga, gb;
  forward_filter_area(on, iso, p, emis2, st, 0, true, ga);
  forward_filter_area(off, iso, p, emis2, st, 0, true, gb);
  bool eq_iso = bytes_equal(ga.filt, gb.filt) && bytes_equal(ga.logpred, gb.logpred);

  return {eq_zero && eq_iso,
          strf("filtered probabilities and predictives bit-identical to the "
               "plain forward pass (zero couplings: %s; isolated area: %s)",
               eq_zero ? "yes" : "no", eq_iso ? "yes" : "no")};
}

// ---- criterion 3: blocked vs single-site sampler ----------------------------

Check c3() {
  ModelSpec sp;
  sp.ss = StateSpace{false, 1, 1};
  sp.random_intercepts = false;
  sp.x_en = {0};
  sp.x_ob = {0};

  // regimes with flat within-state means: an autoregressive single state
  // cannot mimic the switching, so the two-regime posterior is the only mode
  // and both samplers must settle on it
  PanelData skel;
  skel.N = 8;
  skel.T = 60;
  for (int i = 0; i < skel.N; ++i)
    skel.area_ids.push_back("a" + std::to_string(i + 1));
  skel.weeks.resize(skel.T);
  for (int t = 0; t < skel.T; ++t) skel.weeks[t] = t + 1;
  skel.y.assign(static_cast<size_t>(skel.N) * skel.T, 0);
  skel.x_names = {"load"};
  Rng xr(71, 2);
  skel.x.resize(static_cast<size_t>(skel.N) * skel.T);
  for (auto& v : skel.x) v = xr.normal();
  skel.in_nbrs.assign(skel.N, {});
  skel.build_rev_nbrs();
  skel.set_uniform_init(2);

  Params tp;
  tp.count.b0_en = {0.2};
  tp.count.b0_ob = {2.2};
  tp.count.beta_en = {0.1};
  tp.count.beta_ob = {0.05};
  tp.count.rho_en = 0.05;
  tp.count.rho_ob = 0.10;
  tp.count.r_en = 8.0;
  tp.count.r_ob = 12.0;
  tp.chain.t23 = {-1.9, {}, 0.0};
  tp.chain.t33 = {1.4, {}, 0.0};
  Rng sr(71, 0), cr(71, 1);
  SimResult sim = simulate_from_model(sp, tp, skel, sr, cr);

  SamplerConfig cfg;
  cfg.iters = 500000;
  cfg.burnin = 50000;
  cfg.chains = 1;
  cfg.thin_states = 10;
  cfg.seed = 9;
  cfg.online_predictive = false;
  PriorSpec ps = default_priors(sp, sim.data, true);
  PosteriorDraws blocked = gibbs_run(sp, sim.data, ps, cfg);
  PosteriorDraws site = gibbs_run(sp, sim.data, ps, cfg, true);

  StateProbSeries pb = state_probabilities(blocked);
  StateProbSeries pu = state_probabilities(site);
  double worst = 0.0;
  int wi = 0, wt = 0;
  for (int i = 0; i < skel.N; ++i)
    for (int t = 0; t < skel.T; ++t)
      for (int c = 0; c < 3; ++c) {
        double diff = std::abs(pb.at(i, t, c) - pu.at(i, t, c));
        if (diff > worst) {
          worst = diff;
          wi = i;
          wt = t;
        }
      }
  return {worst <= 0.02,
          strf("blocked vs single-site posterior state probabilities: max "
               "|diff| %.4f at area %d week %d (tol 0.02)", worst, wi, wt + 1)};
}

// ---- criterion 4: parameter recovery ----------------------------------------

Check c4() {
  ModelSpec sp = study_spec(false, false, true, true, true);
  PanelData skel = study_skeleton(10, 113, 5, 0.6, 424242);
  Params truth = recovery_truth();
  auto named = recovery_truth_by_name();

  SamplerConfig cfg;
  cfg.iters = 20000;
  cfg.burnin = 5000;
  cfg.chains = 3;
  cfg.thin_states = 10;
  cfg.online_predictive = false;

  const int n_reps = 20;
  int n_conv = 0;
  long covered = 0, cells = 0;
  for (int rep = 0; rep < n_reps; ++rep) {
    Rng sr(100 + rep, 0), cr(100 + rep, 1);
    SimResult sim = simulate_from_model(sp, truth, skel, sr, cr);
    PriorSpec ps = default_priors(sp, sim.data);
    ps.spatial = Dist{Dist::Normal, 0.0, 2.0};  // wide enough to cover 1.15
    cfg.seed = 1000 + rep;
    try {
      PosteriorDraws dr = gibbs_run(sp, sim.data, ps, cfg);
      GateReport gate = convergence_gate(dr);
      std::fprintf(stderr, "rep %2d: gate %s\n", rep, gate.pass ? "pass" : "FAIL");
      if (!gate.pass) continue;
      ++n_conv;
      if (dr.P() != static_cast<int>(named.size()))
        return {false, strf("layout has %d parameters, expected %zu", dr.P(),
                            named.size())};
      for (int k = 0; k < dr.P(); ++k) {
        auto it = named.find(dr.names[k]);
        if (it == named.end())
          return {false, "no generating value for parameter " + dr.names[k]};
        std::vector<double> merged;
        for (int c = 0; c < cfg.chains; ++c) {
          std::vector<double> col = dr.column(c, k);
          merged.insert(merged.end(), col.begin(), col.end());
        }
        std::sort(merged.begin(), merged.end());
        double lo = quantile_sorted(merged, 0.025);
        double hi = quantile_sorted(merged, 0.975);
        ++cells;
        if (lo <= it->second && it->second <= hi) ++covered;
      }
    } catch (const Error& e) {
      std::fprintf(stderr, "rep %2d: %s error: %s\n", rep, e.category.c_str(),
                   e.what());
    }
  }
  double cov = cells > 0 ? static_cast<double>(covered) / cells : 0.0;
  bool pass = n_conv >= 14 && cov >= 0.85 && cov <= 1.0;
  return {pass,
          strf("%d/%d replications passed the convergence gate (need >= 14); "
               "mean 95%% interval coverage %.3f over %ld parameter cells "
               "(need in [0.85, 1])", n_conv, n_reps, cov, cells)};
}

// ---- criterion 5: WAIC model selection ---------------------------------------

Check c5() {
  PanelData skel = study_skeleton(15, 100, 5, 0.6, 99);
  ModelSpec fit_cpl = study_spec(true, true, true, true, false);
  ModelSpec fit_non = study_spec(false, false, false, false, false);

  SamplerConfig cfg;
  cfg.iters = 20000;
  cfg.burnin = 5000;
  cfg.chains = 2;
  cfg.thin_states = 10;
  cfg.online_predictive = true;

  int coupled_truth_wins = 0, uncoupled_truth_false_wins = 0;
  for (int which = 0; which < 2; ++which) {
    bool spatial = which == 0;
    ModelSpec truth_spec = study_spec(spatial, spatial, spatial, spatial, false);
    Params tp = selection_truth(spatial);
    for (int rep = 0; rep < 5; ++rep) {
      std::uint64_t sim_seed = 200 + 100 * which + rep;
      Rng sr(sim_seed, 0), cr(sim_seed, 1);
      SimResult sim = simulate_from_model(truth_spec, tp, skel, sr, cr);
      cfg.seed = 3000 + 100 * which + rep;
      PosteriorDraws dc =
          gibbs_run(fit_cpl, sim.data, default_priors(fit_cpl, sim.data), cfg);
      cfg.seed += 50;
      PosteriorDraws dn =
          gibbs_run(fit_non, sim.data, default_priors(fit_non, sim.data), cfg);
      double wc = waic_from_accum(dc.merged_pred()).waic;
      double wn = waic_from_accum(dn.merged_pred()).waic;
      double delta = wn - wc;  // positive favours the coupled fit
      std::fprintf(stderr, "%s truth rep %d: WAIC coupled %.1f / uncoupled %.1f "
                   "(delta %.1f)\n", spatial ? "coupled" : "uncoupled", rep, wc,
                   wn, delta);
      if (spatial && delta > 5.0) ++coupled_truth_wins;
      if (!spatial && delta > 5.0) ++uncoupled_truth_false_wins;
    }
  }
  bool pass = coupled_truth_wins >= 4 && uncoupled_truth_false_wins == 0;
  return {pass,
          strf("coupled truth: WAIC chose the coupled fit by > 5 in %d/5 "
               "(need >= 4); uncoupled truth: %d/5 spurious coupled wins "
               "(need 0)", coupled_truth_wins, uncoupled_truth_false_wins)};
}

// ---- criterion 6: clustered detection benchmark ------------------------------

Check c6() {
  BenchmarkConfig bc;  // 30 areas, 120 weeks, seed 1
  BenchmarkResult bench = simulate_cluster_benchmark(bc);
  bench.data.set_uniform_init(7);

  ModelSpec cpl;
  cpl.ss = StateSpace{true, 2, 4};
  cpl.random_intercepts = false;
  cpl.share_r = true;
  cpl.x_en = {0};
  cpl.x_ob = {0};
  cpl.couple23 = true;
  ModelSpec non = cpl;
  non.couple23 = false;

  SamplerConfig cfg;
  cfg.iters = 20000;
  cfg.burnin = 5000;
  cfg.chains = 2;
  cfg.thin_states = 10;
  cfg.online_predictive = false;
  cfg.seed = 21;
  PosteriorDraws dc = gibbs_run(cpl, bench.data, default_priors(cpl, bench.data), cfg);
  std::fprintf(stderr, "coupled fit done\n");
  cfg.seed = 22;
  PosteriorDraws dn = gibbs_run(non, bench.data, default_priors(non, bench.data), cfg);
  std::fprintf(stderr, "uncoupled fit done\n");

  // score the final endemic->outbreak cycle
  const int t_lo = 99, t_hi = 120;
  StateProbSeries pc = state_probabilities(dc, t_lo, t_hi);
  StateProbSeries pn = state_probabilities(dn, t_lo, t_hi);

  const int N = bench.truth.N, T = bench.truth.T;
  std::vector<double> grid_c(static_cast<size_t>(N) * T, 0.0);
  std::vector<double> grid_n(static_cast<size_t>(N) * T, 0.0);
  std::vector<double> win_c, win_n;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < N; ++i)
    for (int t = t_lo; t < t_hi; ++t) {
      double qc = pc.at(i, t, 2), qn = pn.at(i, t, 2);
      grid_c[static_cast<size_t>(i) * T + t] = qc;
      grid_n[static_cast<size_t>(i) * T + t] = qn;
      win_c.push_back(qc);
      win_n.push_back(qn);
      labels.push_back(bench.truth.at(i, t) == OUTBREAK ? 1 : 0);
    }
  double auc_c = roc_auc(win_c, labels);
  double auc_n = roc_auc(win_n, labels);
  TimelinessResult tm_c = timeliness(grid_c, bench.truth, 0.5, t_lo, t_hi);
  TimelinessResult tm_n = timeliness(grid_n, bench.truth, 0.5, t_lo, t_hi);
  bool pass = auc_c >= 0.95 && tm_c.mean_weeks <= tm_n.mean_weeks;
  return {pass,
          strf("coupled AUC %.4f (uncoupled %.4f, floor 0.95); timeliness "
               "%.2f vs %.2f weeks (coupled must not be later; detected "
               "%d/%d vs %d/%d)", auc_c, auc_n, tm_c.mean_weeks,
               tm_n.mean_weeks, tm_c.detected, tm_c.detected + tm_c.missed,
               tm_n.detected, tm_n.detected + tm_n.missed)};
}

// ---- criterion 7: zero-coupling predictive identity --------------------------

Check c7() {
  ModelSpec sp = fix::spec124();
  sp.couple12 = sp.couple21 = sp.couple23 = sp.couple33 = false;

  PanelData skel;
  skel.N = 3;
  skel.T = 12;
  skel.area_ids = {"a", "b", "c"};
  skel.weeks.resize(skel.T);
  for (int t = 0; t < skel.T; ++t) skel.weeks[t] = t + 1;
  skel.y.assign(static_cast<size_t>(skel.N) * skel.T, 0);
  skel.x_names = {"x1"};
  skel.z_names = {"z1"};
  Rng xr(5, 2);
  skel.x.resize(static_cast<size_t>(skel.N) * skel.T);
  skel.z.resize(static_cast<size_t>(skel.N) * skel.T);
  for (auto& v : skel.x) v = xr.normal(0.0, 0.5);
  for (auto& v : skel.z) v = xr.normal(0.0, 0.5);
  skel.in_nbrs = {{}, {{0, 0.5}}, {{1, 0.5}}};
  skel.set_uniform_init(7);
  skel.build_rev_nbrs();

  Rng sr(5, 0), cr(5, 1);
  SimResult sim = simulate_from_model(sp, fix::small_params(), skel, sr, cr);

  SamplerConfig cfg;
  cfg.iters = 300;
  cfg.burnin = 100;
  cfg.chains = 2;
  cfg.thin_states = 20;
  cfg.seed = 7;
  cfg.online_predictive = false;
  PosteriorDraws dr = gibbs_run(sp, sim.data, default_priors(sp, sim.data), cfg);

  long checked = 0;
  for (int c = 0; c < cfg.chains; ++c)
    for (long d = 0; d < dr.chains[c].n_state_draws; ++d) {
      std::vector<double> part = partial_marginal_loglik(sp, sim.data, dr, c, d);
      Params pm = params_from_row(dr, sim.data, c, d * cfg.thin_states);
      std::vector<double> marg = marginal_loglik_forward(sp, sim.data, pm);
      if (!bytes_equal(part, marg))
        return {false, strf("chain %d stored draw %ld: partially marginalized "
                            "and plain predictives differ", c, d)};
      ++checked;
    }
  return {true, strf("partially marginalized == plain forward predictive on "
                     "all %ld stored draws, bit for bit", checked)};
}

// ---- criterion 8: property suite ---------------------------------------------

Check c8() {
  auto t0 = clock_type::now();

  // transition rows across state spaces: stochastic, in range, corridors
  // deterministic
  {
    std::vector<ModelSpec> specs;
    specs.push_back(fix::spec124());
    ModelSpec off = fix::spec124();
    off.couple12 = off.couple21 = off.couple23 = off.couple33 = false;
    specs.push_back(off);
    ModelSpec wide;
    wide.ss = StateSpace{true, 3, 2};
    wide.z12 = wide.z21 = wide.z23 = wide.z33 = {0};
    wide.couple23 = true;
    specs.push_back(wide);
    ModelSpec two;
    two.ss = StateSpace{false, 1, 1};
    specs.push_back(two);

    Rng rng(31, 0);
    for (const ModelSpec& s : specs) {
      const int K = s.ss.K();
      std::vector<double> row(K);
      for (int trial = 0; trial < 125; ++trial) {
        TransScores sc{rng.normal(0, 3), rng.normal(0, 3), rng.normal(0, 3),
                       rng.normal(0, 3)};
        for (int from = 1; from <= K; ++from) {
          transition_row(s, sc, from, row.data());
          double sum = 0.0;
          for (int k = 0; k < K; ++k) {
            if (row[k] < 0.0 || row[k] > 1.0)
              return {false, strf("transition entry out of [0,1] (K=%d)", K)};
            sum += row[k];
          }
          if (std::abs(sum - 1.0) > 1e-12)
            return {false, strf("transition row from %d not stochastic: sum-1 "
                                "= %.3g", from, sum - 1.0)};
          bool en_corridor = from >= s.ss.first_en() && from < s.ss.last_en();
          bool ob_corridor = from >= s.ss.first_ob() && from < s.ss.last_ob();
          if (en_corridor || ob_corridor) {
            for (int k = 0; k < K; ++k) {
              double want = k == from ? 1.0 : 0.0;  // from-state s -> s+1
              if (row[k] != want)
                return {false, strf("clone corridor from %d not deterministic "
                                    "(K=%d)", from, K)};
            }
          }
        }
      }
    }
  }

  // negative binomial pmf sums to one
  {
    const double cases[4][2] = {{1, 10}, {5, 2}, {20, 50}, {0.3, 0.7}};
    for (auto& mr : cases) {
      double acc = 0.0;
      for (long y = 0; y < 500000 && 1.0 - acc > 1e-13; ++y)
        acc += std::exp(nb_logpmf(y, mr[0], mr[1]));
      if (std::abs(acc - 1.0) > 1e-9)
        return {false, strf("NB(mean %.1f, r %.1f) pmf sums to %.12f", mr[0],
                            mr[1], acc)};
    }
  }

  // AUC complement identity on random scores
  {
    Rng rng(77, 0);
    std::vector<double> s(400);
    std::vector<std::uint8_t> l(400);
    for (int i = 0; i < 400; ++i) {
      s[i] = rng.unif();
      l[i] = rng.unif() < 0.3 ? 1 : 0;
    }
    l[0] = 1;
    l[1] = 0;
    std::vector<double> comp(400);
    for (int i = 0; i < 400; ++i) comp[i] = 1.0 - s[i];
    if (std::abs(roc_auc(s, l) + roc_auc(comp, l) - 1.0) > 1e-12)
      return {false, "AUC complement identity failed"};
  }

  // short coupled run: constraint truncation, probability normalization,
  // persistence round trip, seeded determinism
  ModelSpec sp = fix::spec124();
  PanelData skel;
  skel.N = 3;
  skel.T = 12;
  skel.area_ids = {"a", "b", "c"};
  skel.weeks.resize(skel.T);
  for (int t = 0; t < skel.T; ++t) skel.weeks[t] = t + 1;
  skel.y.assign(static_cast<size_t>(skel.N) * skel.T, 0);
  skel.x_names = {"x1"};
  skel.z_names = {"z1"};
  Rng xr(8, 2);
  skel.x.resize(static_cast<size_t>(skel.N) * skel.T);
  skel.z.resize(static_cast<size_t>(skel.N) * skel.T);
  for (auto& v : skel.x) v = xr.normal(0.0, 0.5);
  for (auto& v : skel.z) v = xr.normal(0.0, 0.5);
  skel.in_nbrs = {{{1, 0.6}}, {{0, 0.6}, {2, 0.4}}, {{1, 0.4}}};
  skel.set_uniform_init(7);
  skel.build_rev_nbrs();
  Rng sr(8, 0), cr(8, 1);
  SimResult sim = simulate_from_model(sp, fix::small_params(), skel, sr, cr);

  SamplerConfig cfg;
  cfg.iters = 400;
  cfg.burnin = 100;
  cfg.chains = 2;
  cfg.thin_states = 10;
  cfg.seed = 5;
  cfg.online_predictive = true;
  PriorSpec ps = default_priors(sp, sim.data);
  PosteriorDraws run_a = gibbs_run(sp, sim.data, ps, cfg);
  PosteriorDraws run_b = gibbs_run(sp, sim.data, ps, cfg);

  for (int c = 0; c < cfg.chains; ++c)
    for (long m = 0; m < run_a.chains[c].n_kept; ++m) {
      Params pm = params_from_row(run_a, sim.data, c, m);
      if (!constraints_satisfied(sp, sim.data, pm.count))
        return {false, strf("kept draw %ld of chain %d violates the ordering "
                            "constraints", m, c)};
    }

  StateProbSeries prob = state_probabilities(run_a);
  for (int i = 0; i < skel.N; ++i)
    for (int t = 0; t < skel.T; ++t) {
      double sum = prob.at(i, t, 0) + prob.at(i, t, 1) + prob.at(i, t, 2);
      if (std::abs(sum - 1.0) > 1e-12)
        return {false, strf("state probabilities at (%d, %d) sum to %.15f", i,
                            t, sum)};
    }

  fs::path base = fs::temp_directory_path() / "cmsnb_acceptance_c8";
  fs::remove_all(base);
  fs::create_directories(base);
  persist_draws(run_a, (base / "run_a").string());
  persist_draws(run_b, (base / "run_b").string());
  PosteriorDraws reloaded = load_draws((base / "run_a").string());
  for (int c = 0; c < cfg.chains; ++c) {
    const ChainDraws &x = run_a.chains[c], &y = reloaded.chains[c];
    if (!bytes_equal(x.params, y.params) || x.states != y.states ||
        !bytes_equal(x.accept_rate, y.accept_rate) ||
        !bytes_equal(x.prop_sd, y.prop_sd))
      return {false, strf("persisted chain %d does not reload bit for bit", c)};
  }

  std::vector<std::string> files_a, files_b;
  for (auto& e : fs::directory_iterator(base / "run_a"))
    files_a.push_back(e.path().filename().string());
  for (auto& e : fs::directory_iterator(base / "run_b"))
    files_b.push_back(e.path().filename().string());
  std::sort(files_a.begin(), files_a.end());
  std::sort(files_b.begin(), files_b.end());
  if (files_a != files_b)
    return {false, "identically seeded runs wrote different file sets"};
  for (const std::string& name : files_a) {
    std::ifstream fa(base / "run_a" / name, std::ios::binary);
    std::ifstream fb(base / "run_b" / name, std::ios::binary);
    std::string ca((std::istreambuf_iterator<char>(fa)), {});
    std::string cb((std::istreambuf_iterator<char>(fb)), {});
    if (ca != cb)
      return {false, "identically seeded runs differ in " + name};
  }
  fs::remove_all(base);

  double el = seconds_since(t0);
  return {el < 60.0,
          strf("transition rows, corridors, NB normalization, constraint "
               "truncation, probability sums, AUC identity, persistence and "
               "seeded determinism all hold in %.1f s (limit 60)", el)};
}

// ---- criterion 9: real-time refit scoring loop -------------------------------

Check c9() {
  PanelData skel = study_skeleton(12, 60, 4, 0.6, 55);
  ModelSpec truth_spec = study_spec(true, true, true, true, false);
  Rng sr(777, 0), cr(777, 1);
  SimResult sim = simulate_from_model(truth_spec, selection_truth(true), skel, sr, cr);
  const PanelData& full = sim.data;

  ModelSpec fit_cpl = study_spec(true, true, true, true, false);
  ModelSpec fit_non = study_spec(false, false, false, false, false);

  SamplerConfig cfg;
  cfg.iters = 4000;
  cfg.burnin = 1000;
  cfg.chains = 2;
  cfg.thin_states = 10;
  cfg.online_predictive = false;

  const int Qx = static_cast<int>(full.x_names.size());
  const int Qz = static_cast<int>(full.z_names.size());
  double sum_c = 0.0, sum_n = 0.0;
  int n_scored = 0;
  for (int w = 50; w < 60; ++w) {
    PanelData train = full.slice_weeks(w);
    std::vector<long> y_obs(full.N);
    std::vector<double> xn(static_cast<size_t>(full.N) * Qx);
    std::vector<double> zn(static_cast<size_t>(full.N) * Qz);
    for (int i = 0; i < full.N; ++i) {
      y_obs[i] = full.count(i, w);
      const double* xr_ = full.x_at(i, w);
      const double* zr_ = full.z_at(i, w);
      std::copy(xr_, xr_ + Qx, xn.begin() + static_cast<size_t>(i) * Qx);
      std::copy(zr_, zr_ + Qz, zn.begin() + static_cast<size_t>(i) * Qz);
    }
    cfg.seed = 500 + w;
    PosteriorDraws dc =
        gibbs_run(fit_cpl, train, default_priors(fit_cpl, train), cfg);
    cfg.seed = 800 + w;
    PosteriorDraws dn =
        gibbs_run(fit_non, train, default_priors(fit_non, train), cfg);
    Rng score_rng_c(4444 + w, 0), score_rng_n(4444 + w, 1);
    double mc = multivariate_log_score(fit_cpl, train, dc, y_obs, score_rng_c,
                                       xn.data(), zn.data());
    double mn = multivariate_log_score(fit_non, train, dn, y_obs, score_rng_n,
                                       xn.data(), zn.data());
    std::fprintf(stderr, "week %d: log score coupled %.4f / uncoupled %.4f\n",
                 full.weeks[w], mc, mn);
    sum_c += mc;
    sum_n += mn;
    ++n_scored;
  }
  double mean_c = sum_c / n_scored, mean_n = sum_n / n_scored;
  return {mean_c <= mean_n,
          strf("10-week refit loop: mean multivariate log score %.4f "
               "(coupled) vs %.4f (uncoupled); lower is better", mean_c,
               mean_n)};
}

Check run_criterion(int n) {
  switch (n) {
    case 1: return c1();
    case 2: return c2();
    case 3: return c3();
    case 4: return c4();
    case 5: return c5();
    case 6: return c6();
    case 7: return c7();
    case 8: return c8();
    case 9: return c9();
  }
  return {false, "unknown criterion"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <criterion 1-9>\n", argv[0]);
    return 2;
  }
  int n = std::atoi(argv[1]);
  if (n < 1 || n > 9) {
    std::fprintf(stderr, "criterion must be 1..9\n");
    return 2;
  }
  Check r;
  try {
    r = run_criterion(n);
  } catch (const Error& e) {
    r = {false, strf("%s error: %s", e.category.c_str(), e.what())};
  } catch (const std::exception& e) {
    r = {false, strf("exception: %s", e.what())};
  }
  std::printf("criterion %d %s: %s\n", n, r.pass ? "PASS" : "FAIL",
              r.detail.c_str());
  return r.pass ? 0 : 1;
}
