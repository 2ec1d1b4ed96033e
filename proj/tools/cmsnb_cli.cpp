// Command-line surface: simulate, fit, diagnose, states, forecast, waic,
// score, eval-detect, weights.  Every command reads an optional config file;
// flags override config keys.  Errors print `error[category]: message` on
// stderr and exit nonzero.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmsnb/config.hpp"
#include "cmsnb/diagnostics.hpp"
#include "cmsnb/inference.hpp"
#include "cmsnb/io.hpp"
#include "cmsnb/metrics.hpp"
#include "cmsnb/simulation.hpp"

using namespace cmsnb;

namespace {

Config load_config_opt(const std::string& path) {
  if (!path.empty()) return Config::load(path);
  const char* env = std::getenv("CMSNB_CONFIG");
  if (env && *env) return Config::load(env);
  return Config{};
}

// panel as the fit saw it: column split, then the recorded transforms
PanelData panel_for_draws(const PosteriorDraws& dr, const std::string& counts,
                          const std::string& covariates,
                          const std::string& neighbors) {
  PanelData data = load_panel(counts, covariates, neighbors);
  split_covariates(data, dr.x_names, dr.z_names);
  auto apply = [](std::vector<double>& mat, size_t Q, const std::vector<double>& mean,
                  const std::vector<double>& sd) {
    if (mean.empty() || Q == 0) return;
    for (size_t c = 0; c < mat.size() / Q; ++c)
      for (size_t q = 0; q < Q; ++q)
        mat[c * Q + q] = (mat[c * Q + q] - mean[q]) / sd[q];
  };
  apply(data.x, data.x_names.size(), dr.x_mean, dr.x_sd);
  apply(data.z, data.z_names.size(), dr.z_mean, dr.z_sd);
  data.set_uniform_init(dr.spec.ss.K());
  data.build_rev_nbrs();
  return data;
}

void write_diagnostics_csv(const std::string& path, const PosteriorDraws& dr,
                           const GateReport& rep) {
  std::string out = "parameter,ess,rhat,degenerate\n";
  for (int k = 0; k < dr.P(); ++k)
    out += dr.names[k] + "," + format_g17(rep.ess[k]) + "," +
           format_g17(rep.rhat[k]) + "," + std::to_string(rep.degenerate[k]) + "\n";
  write_text_atomic(path, out);
}

void print_gate(const GateReport& rep) {
  if (rep.pass) {
    std::cout << "convergence gate: pass (min ESS > " << rep.ess_min
              << ", max R-hat < " << rep.rhat_max << ")\n";
  } else {
    std::cout << "convergence gate: FAIL;";
    for (const auto& n : rep.offenders) std::cout << " " << n;
    std::cout << "\n";
  }
}

void write_waic_csv(const std::string& path, const WaicResult& w) {
  std::string out = "lpd,p_eff,waic,n_draws\n";
  out += format_g17(w.lpd) + "," + format_g17(w.p_eff) + "," + format_g17(w.waic) +
         "," + std::to_string(w.n_draws) + "\n";
  write_text_atomic(path, out);
}

void write_counts_csv(const std::string& path, const PanelData& d) {
  std::string out = "area_id,week,count\n";
  for (int i = 0; i < d.N; ++i)
    for (int t = 0; t < d.T; ++t)
      out += d.area_ids[i] + "," + std::to_string(d.weeks[t]) + "," +
             std::to_string(d.count(i, t)) + "\n";
  write_text_atomic(path, out);
}

void write_covariates_csv(const std::string& path, const PanelData& d) {
  std::string out = "area_id,week,name,value\n";
  for (int i = 0; i < d.N; ++i)
    for (int t = 0; t < d.T; ++t)
      for (size_t q = 0; q < d.x_names.size(); ++q)
        out += d.area_ids[i] + "," + std::to_string(d.weeks[t]) + "," +
               d.x_names[q] + "," + format_g17(d.x_at(i, t)[q]) + "\n";
  write_text_atomic(path, out);
}

void write_neighbors_csv(const std::string& path, const PanelData& d) {
  std::string out = "from_area,to_area,weight\n";
  for (int i = 0; i < d.N; ++i)
    for (const auto& e : d.in_nbrs[i])
      out += d.area_ids[e.j] + "," + d.area_ids[i] + "," + format_g17(e.w) + "\n";
  write_text_atomic(path, out);
}

struct FitArgs {
  std::string config, counts, covariates, neighbors, out = "fit-out";
  long seed = -1, iters = -1, burnin = -1;
  int chains = -1, threads = -1;
  std::string variant;
};

PosteriorDraws run_fit(const FitArgs& a, PanelData* data_out = nullptr) {
  Config c = load_config_opt(a.config);
  if (!a.variant.empty()) c.kv["variant"] = a.variant;
  if (a.seed >= 0) c.kv["seed"] = std::to_string(a.seed);
  if (a.iters > 0) c.kv["iters"] = std::to_string(a.iters);
  if (a.burnin >= 0) c.kv["burnin"] = std::to_string(a.burnin);
  if (a.chains > 0) c.kv["chains"] = std::to_string(a.chains);
  if (a.threads >= 0) c.kv["threads"] = std::to_string(a.threads);
  RunConfig rc = run_config_from(c);

  PanelData data = load_panel(a.counts, a.covariates, a.neighbors);
  resolve_covariates(rc, data);
  std::vector<double> xm, xs, zm, zs;
  if (rc.standardize && (!data.x_names.empty() || !data.z_names.empty()))
    standardize_covariates(data, xm, xs, zm, zs);
  if (rc.init_dist == "collapsed")
    data.set_collapsed_uniform_init(rc.spec.ss);
  else
    data.set_uniform_init(rc.spec.ss.K());
  data.build_rev_nbrs();
  data.validate(rc.spec);

  PriorSpec priors = priors_for(rc, data);
  PosteriorDraws dr = gibbs_run(rc.spec, data, priors, rc.sampler);
  dr.x_mean = xm;
  dr.x_sd = xs;
  dr.z_mean = zm;
  dr.z_sd = zs;
  if (data_out) *data_out = data;
  return dr;
}

int cmd_fit(const FitArgs& a) {
  PanelData data;
  PosteriorDraws dr = run_fit(a, &data);
  persist_draws(dr, a.out);
  if (dr.chains.size() >= 2) {
    GateReport rep = convergence_gate(dr);
    write_diagnostics_csv(a.out + "/diagnostics.csv", dr, rep);
    print_gate(rep);
  }
  WaicAccum acc = dr.merged_pred();
  if (!acc.empty()) {
    WaicResult w = waic_from_accum(acc);
    write_waic_csv(a.out + "/waic.csv", w);
    std::cout << "waic=" << format_g17(w.waic) << " lpd=" << format_g17(w.lpd)
              << " p_eff=" << format_g17(w.p_eff) << "\n";
  }
  std::cout << "draws written to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled Markov-switching negative binomial count models"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "generate synthetic data");
  std::string sim_kind = "benchmark", sim_config, sim_out = "sim-out";
  std::string sim_params, sim_counts, sim_covariates, sim_neighbors;
  long sim_seed = -1;
  sim->add_option("--kind", sim_kind, "benchmark or model");
  sim->add_option("--config", sim_config, "config file");
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--seed", sim_seed, "seed override");
  sim->add_option("--params", sim_params, "parameter file for --kind model");
  sim->add_option("--counts", sim_counts, "grid skeleton for --kind model");
  sim->add_option("--covariates", sim_covariates, "covariates for --kind model");
  sim->add_option("--neighbors", sim_neighbors, "neighbours for --kind model");

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "sample the posterior");
  FitArgs fa;
  fit->add_option("--config", fa.config, "config file");
  fit->add_option("--counts", fa.counts, "counts CSV")->required();
  fit->add_option("--covariates", fa.covariates, "covariates CSV");
  fit->add_option("--neighbors", fa.neighbors, "neighbours CSV");
  fit->add_option("--out", fa.out, "output directory");
  fit->add_option("--seed", fa.seed, "seed override");
  fit->add_option("--iters", fa.iters, "iteration override");
  fit->add_option("--burnin", fa.burnin, "burn-in override");
  fit->add_option("--chains", fa.chains, "chain count override");
  fit->add_option("--threads", fa.threads, "thread count override");
  fit->add_option("--variant", fa.variant,
                  "coupled, non-coupled or no-absence-clone");

  // ---- diagnose ----
  auto* diag = app.add_subcommand("diagnose", "convergence diagnostics");
  std::string diag_draws, diag_out;
  diag->add_option("--draws", diag_draws, "draws directory")->required();
  diag->add_option("--out", diag_out, "diagnostics CSV path");

  // ---- states ----
  auto* states = app.add_subcommand("states", "collapsed state probabilities");
  std::string st_draws, st_out = "states.csv";
  int st_from = -1, st_to = -1;
  states->add_option("--draws", st_draws, "draws directory")->required();
  states->add_option("--out", st_out, "output CSV");
  states->add_option("--from", st_from, "first week label");
  states->add_option("--to", st_to, "last week label (inclusive)");

  // ---- forecast ----
  auto* fc = app.add_subcommand("forecast", "posterior predictive forecasts");
  std::string fc_draws, fc_counts, fc_covariates, fc_neighbors, fc_out = "forecast.csv";
  int fc_horizon = 4;
  long fc_seed = 9001;
  fc->add_option("--draws", fc_draws, "draws directory")->required();
  fc->add_option("--counts", fc_counts, "counts CSV")->required();
  fc->add_option("--covariates", fc_covariates, "covariates CSV");
  fc->add_option("--neighbors", fc_neighbors, "neighbours CSV");
  fc->add_option("--horizon", fc_horizon, "weeks ahead");
  fc->add_option("--seed", fc_seed, "forecast rng seed");
  fc->add_option("--out", fc_out, "output CSV");

  // ---- waic ----
  auto* wa = app.add_subcommand("waic", "model comparison criterion");
  std::string wa_draws, wa_counts, wa_covariates, wa_neighbors, wa_out;
  wa->add_option("--draws", wa_draws, "draws directory")->required();
  wa->add_option("--counts", wa_counts, "counts CSV (post-hoc mode)");
  wa->add_option("--covariates", wa_covariates, "covariates CSV");
  wa->add_option("--neighbors", wa_neighbors, "neighbours CSV");
  wa->add_option("--out", wa_out, "output CSV");

  // ---- score ----
  auto* sc = app.add_subcommand("score", "one-week-ahead multivariate log score");
  std::string sc_draws, sc_counts, sc_covariates, sc_neighbors, sc_out;
  long sc_seed = 9002;
  sc->add_option("--draws", sc_draws, "draws directory (fit through week W)")->required();
  sc->add_option("--counts", sc_counts, "counts CSV extending past week W")->required();
  sc->add_option("--covariates", sc_covariates, "covariates CSV");
  sc->add_option("--neighbors", sc_neighbors, "neighbours CSV");
  sc->add_option("--seed", sc_seed, "scoring rng seed");
  sc->add_option("--out", sc_out, "append week,score to this CSV");

  // ---- eval-detect ----
  auto* ev = app.add_subcommand("eval-detect", "detection metrics against truth");
  std::string ev_scores, ev_truth, ev_out;
  double ev_thresh = 0.5;
  int ev_from = -1, ev_to = -1;
  ev->add_option("--scores", ev_scores, "state probability CSV")->required();
  ev->add_option("--truth", ev_truth, "truth CSV (area_id,week,state)")->required();
  ev->add_option("--threshold", ev_thresh, "detection threshold");
  ev->add_option("--from", ev_from, "evaluation window start (week label)");
  ev->add_option("--to", ev_to, "evaluation window end (inclusive)");
  ev->add_option("--out", ev_out, "output CSV");

  // ---- weights ----
  auto* wg = app.add_subcommand("weights", "spatial weights from patient samples");
  std::string wg_patients, wg_out = "neighbors.csv";
  int wg_k = 5;
  wg->add_option("--patients", wg_patients, "patients CSV")->required();
  wg->add_option("--k", wg_k, "neighbours kept per area");
  wg->add_option("--out", wg_out, "output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      Config c = load_config_opt(sim_config);
      if (sim_seed >= 0) c.kv["seed"] = std::to_string(sim_seed);
      std::error_code ec;
      std::filesystem::create_directories(sim_out, ec);
      if (ec) fail("io", "cannot create " + sim_out);
      if (sim_kind == "benchmark") {
        BenchmarkConfig bc;
        bc.n_clusters = static_cast<int>(c.num("bench_clusters", bc.n_clusters));
        bc.areas_per_cluster =
            static_cast<int>(c.num("bench_areas_per_cluster", bc.areas_per_cluster));
        bc.period = static_cast<int>(c.num("bench_period", bc.period));
        bc.cycles = static_cast<int>(c.num("bench_cycles", bc.cycles));
        bc.jitter = static_cast<int>(c.num("bench_jitter", bc.jitter));
        bc.absence_prob = c.real("bench_absence_prob", bc.absence_prob);
        bc.absence_len = static_cast<int>(c.num("bench_absence_len", bc.absence_len));
        bc.seed = static_cast<std::uint64_t>(c.num("seed", 1));
        BenchmarkResult br = simulate_cluster_benchmark(bc);
        write_counts_csv(sim_out + "/counts.csv", br.data);
        write_covariates_csv(sim_out + "/covariates.csv", br.data);
        write_neighbors_csv(sim_out + "/neighbors.csv", br.data);
        std::string truth = "area_id,week,state\n";
        for (int i = 0; i < br.truth.N; ++i)
          for (int t = 0; t < br.truth.T; ++t)
            truth += br.data.area_ids[i] + "," + std::to_string(br.data.weeks[t]) +
                     "," + std::to_string(br.truth.at(i, t)) + "\n";
        write_text_atomic(sim_out + "/truth.csv", truth);
        std::string starts = "area_id,start_week\n";
        for (int i = 0; i < br.truth.N; ++i)
          for (int s : br.truth.outbreak_start[i])
            starts += br.data.area_ids[i] + "," + std::to_string(br.data.weeks[s]) + "\n";
        write_text_atomic(sim_out + "/outbreak_starts.csv", starts);
        std::cout << "benchmark written to " << sim_out << "\n";
      } else if (sim_kind == "model") {
        if (sim_counts.empty() || sim_params.empty())
          fail("config", "--kind model needs --counts (grid skeleton) and --params");
        RunConfig rc = run_config_from(c);
        PanelData data = load_panel(sim_counts, sim_covariates, sim_neighbors);
        resolve_covariates(rc, data);
        if (rc.init_dist == "collapsed")
          data.set_collapsed_uniform_init(rc.spec.ss);
        else
          data.set_uniform_init(rc.spec.ss.K());
        data.build_rev_nbrs();
        Config pf = Config::load(sim_params);
        ParamLayout lay =
            ParamLayout::build(rc.spec, data.N, data.x_names, data.z_names);
        Params p;
        shape_params(rc.spec, data, p);
        for (const auto& [key, val] : pf.kv) {
          int k = -1;
          for (int q = 0; q < lay.P(); ++q)
            if (lay.names[q] == key) {
              k = q;
              break;
            }
          if (k < 0) fail("config", "unknown parameter '" + key + "'");
          lay.set(p, k, pf.real(key, 0.0));
        }
        std::uint64_t seed = static_cast<std::uint64_t>(c.num("seed", 1));
        Rng state_rng(seed, 0), count_rng(seed, 1);
        SimResult sr = simulate_from_model(rc.spec, p, data, state_rng, count_rng);
        write_counts_csv(sim_out + "/counts.csv", sr.data);
        std::string truth = "area_id,week,state\n";
        for (int i = 0; i < sr.data.N; ++i)
          for (int t = 0; t < sr.data.T; ++t)
            truth += sr.data.area_ids[i] + "," + std::to_string(sr.data.weeks[t]) +
                     "," + std::to_string(sr.states.at(i, t)) + "\n";
        write_text_atomic(sim_out + "/states.csv", truth);
        std::cout << "simulation written to " << sim_out << "\n";
      } else {
        fail("config", "--kind must be benchmark or model");
      }
      return 0;
    }

    if (*fit) return cmd_fit(fa);

    if (*diag) {
      PosteriorDraws dr = load_draws(diag_draws);
      GateReport rep = convergence_gate(dr);
      write_diagnostics_csv(diag_out.empty() ? diag_draws + "/diagnostics.csv" : diag_out,
                            dr, rep);
      print_gate(rep);
      return rep.pass ? 0 : 2;
    }

    if (*states) {
      PosteriorDraws dr = load_draws(st_draws);
      const int T = dr.T();
      auto week_index = [&](int label, int dflt) {
        if (label < 0) return dflt;
        for (int t = 0; t < T; ++t)
          if (dr.weeks[t] == label) return t;
        fail("config", "week " + std::to_string(label) + " is not in the fit window");
      };
      int lo = week_index(st_from, 0), hi = week_index(st_to, T - 1) + 1;
      StateProbSeries sp = state_probabilities(dr, lo, hi);
      std::string out = "area_id,week,p_absence,p_endemic,p_outbreak\n";
      for (int i = 0; i < sp.N; ++i)
        for (int t = lo; t < hi; ++t)
          out += dr.area_ids[i] + "," + std::to_string(dr.weeks[t]) + "," +
                 format_g17(sp.at(i, t, 0)) + "," + format_g17(sp.at(i, t, 1)) +
                 "," + format_g17(sp.at(i, t, 2)) + "\n";
      write_text_atomic(st_out, out);
      std::cout << "state probabilities written to " << st_out << "\n";
      return 0;
    }

    if (*fc) {
      PosteriorDraws dr = load_draws(fc_draws);
      PanelData data = panel_for_draws(dr, fc_counts, fc_covariates, fc_neighbors);
      if (data.weeks != dr.weeks)
        fail("domain", "panel weeks do not match the fitted window");
      Rng rng(static_cast<std::uint64_t>(fc_seed), 7);
      ForecastDraws f = posterior_predictive(dr.spec, data, dr, fc_horizon, rng);
      std::string out = "area_id,step,week,mean,q2.5,q97.5,p_outbreak\n";
      std::vector<long> col(f.M);
      for (int i = 0; i < data.N; ++i)
        for (int k = 0; k < f.H; ++k) {
          for (long m = 0; m < f.M; ++m)
            col[m] = f.y[(static_cast<size_t>(m) * f.H + k) * f.N + i];
          std::sort(col.begin(), col.end());
          double mean = 0;
          for (long v : col) mean += static_cast<double>(v);
          mean /= f.M;
          auto q = [&](double p) {
            long idx = static_cast<long>(p * (f.M - 1));
            return col[idx];
          };
          out += data.area_ids[i] + "," + std::to_string(k + 1) + "," +
                 std::to_string(data.weeks.back() + k + 1) + "," + format_g17(mean) +
                 "," + std::to_string(q(0.025)) + "," + std::to_string(q(0.975)) +
                 "," + format_g17(f.state_prob(k, i, OUTBREAK, dr.spec.ss)) + "\n";
        }
      write_text_atomic(fc_out, out);
      std::cout << "forecasts written to " << fc_out << "\n";
      return 0;
    }

    if (*wa) {
      PosteriorDraws dr = load_draws(wa_draws);
      WaicAccum acc = dr.merged_pred();
      WaicResult w;
      if (!acc.empty()) {
        w = waic_from_accum(acc);
      } else {
        if (wa_counts.empty())
          fail("config",
               "draws lack online accumulators; post-hoc WAIC needs --counts (and "
               "covariates/neighbours as fitted)");
        PanelData data = panel_for_draws(dr, wa_counts, wa_covariates, wa_neighbors);
        w = waic_from_draws(dr.spec, data, dr);
      }
      if (!wa_out.empty()) write_waic_csv(wa_out, w);
      std::cout << "waic=" << format_g17(w.waic) << " lpd=" << format_g17(w.lpd)
                << " p_eff=" << format_g17(w.p_eff) << " n_draws=" << w.n_draws
                << "\n";
      return 0;
    }

    if (*sc) {
      PosteriorDraws dr = load_draws(sc_draws);
      PanelData full = panel_for_draws(dr, sc_counts, sc_covariates, sc_neighbors);
      const int T_fit = dr.T();
      if (full.T <= T_fit)
        fail("domain", "counts file does not extend past the fitted window");
      if (!std::equal(dr.weeks.begin(), dr.weeks.end(), full.weeks.begin()))
        fail("domain", "panel weeks do not match the fitted window");
      PanelData cond = full.slice_weeks(T_fit);
      std::vector<long> y_obs(full.N);
      std::vector<double> x_next(static_cast<size_t>(full.N) * full.x_names.size());
      std::vector<double> z_next(static_cast<size_t>(full.N) * full.z_names.size());
      for (int i = 0; i < full.N; ++i) {
        y_obs[i] = full.count(i, T_fit);
        for (size_t q = 0; q < full.x_names.size(); ++q)
          x_next[i * full.x_names.size() + q] = full.x_at(i, T_fit)[q];
        for (size_t q = 0; q < full.z_names.size(); ++q)
          z_next[i * full.z_names.size() + q] = full.z_at(i, T_fit)[q];
      }
      Rng rng(static_cast<std::uint64_t>(sc_seed), 11);
      double s = multivariate_log_score(dr.spec, cond, dr, y_obs, rng,
                                        x_next.empty() ? nullptr : x_next.data(),
                                        z_next.empty() ? nullptr : z_next.data());
      std::cout << "week=" << full.weeks[T_fit] << " score=" << format_g17(s) << "\n";
      if (!sc_out.empty()) {
        std::ifstream probe(sc_out);
        std::string content;
        if (probe) {
          std::string line;
          while (std::getline(probe, line)) content += line + "\n";
        } else {
          content = "week,score\n";
        }
        content += std::to_string(full.weeks[T_fit]) + "," + format_g17(s) + "\n";
        write_text_atomic(sc_out, content);
      }
      return 0;
    }

    if (*ev) {
      // scores CSV: area_id,week,p_absence,p_endemic,p_outbreak
      std::map<std::string, int> areas;
      std::map<int, int> weeks;
      struct SRow {
        std::string area;
        int week;
        double p_ob;
      };
      std::vector<SRow> srows;
      {
        std::ifstream in(ev_scores);
        if (!in) fail("io", "cannot open " + ev_scores);
        std::string line;
        long ln = 0;
        bool header = true;
        while (std::getline(in, line)) {
          ++ln;
          if (line.empty()) continue;
          if (header) {
            header = false;
            continue;
          }
          std::vector<std::string> f;
          std::string cur;
          for (char ch : line) {
            if (ch == ',') {
              f.push_back(cur);
              cur.clear();
            } else {
              cur += ch;
            }
          }
          f.push_back(cur);
          if (f.size() != 5)
            fail("parse", ev_scores + ":" + std::to_string(ln) + ": expected 5 fields");
          srows.push_back({f[0], std::atoi(f[1].c_str()), std::atof(f[4].c_str())});
        }
      }
      struct TRow {
        std::string area;
        int week;
        int state;
      };
      std::vector<TRow> trows;
      {
        std::ifstream in(ev_truth);
        if (!in) fail("io", "cannot open " + ev_truth);
        std::string line;
        long ln = 0;
        bool header = true;
        while (std::getline(in, line)) {
          ++ln;
          if (line.empty()) continue;
          if (header) {
            header = false;
            continue;
          }
          std::vector<std::string> f;
          std::string cur;
          for (char ch : line) {
            if (ch == ',') {
              f.push_back(cur);
              cur.clear();
            } else {
              cur += ch;
            }
          }
          f.push_back(cur);
          if (f.size() != 3)
            fail("parse", ev_truth + ":" + std::to_string(ln) + ": expected 3 fields");
          trows.push_back({f[0], std::atoi(f[1].c_str()), std::atoi(f[2].c_str())});
        }
      }
      for (const auto& r : trows) {
        areas.emplace(r.area, static_cast<int>(areas.size()));
        weeks.emplace(r.week, 0);
      }
      int tpos = 0;
      for (auto& [wk, idx] : weeks) idx = tpos++;
      BenchmarkTruth truth;
      truth.N = static_cast<int>(areas.size());
      truth.T = static_cast<int>(weeks.size());
      truth.state.assign(static_cast<size_t>(truth.N) * truth.T, 0);
      truth.outbreak_start.resize(truth.N);
      for (const auto& r : trows)
        truth.state[static_cast<size_t>(areas[r.area]) * truth.T + weeks[r.week]] =
            static_cast<std::uint8_t>(r.state);
      std::vector<double> scores(truth.state.size(), 0.0);
      for (const auto& r : srows) {
        auto ai = areas.find(r.area);
        auto wi = weeks.find(r.week);
        if (ai == areas.end() || wi == weeks.end())
          fail("domain", "score cell (" + r.area + ", " + std::to_string(r.week) +
                             ") is not covered by the truth file");
        scores[static_cast<size_t>(ai->second) * truth.T + wi->second] = r.p_ob;
      }
      auto widx = [&](int label, int dflt) {
        if (label < 0) return dflt;
        auto it = weeks.find(label);
        if (it == weeks.end())
          fail("config", "week " + std::to_string(label) + " is not in the truth file");
        return it->second;
      };
      int lo = widx(ev_from, 0), hi = widx(ev_to, truth.T - 1) + 1;
      std::vector<double> sc_win;
      std::vector<std::uint8_t> lb_win;
      for (int i = 0; i < truth.N; ++i)
        for (int t = lo; t < hi; ++t) {
          sc_win.push_back(scores[static_cast<size_t>(i) * truth.T + t]);
          lb_win.push_back(truth.at(i, t) == OUTBREAK ? 1 : 0);
        }
      double auc = roc_auc(sc_win, lb_win);
      SensSpec ssp = sens_spec(sc_win, lb_win, ev_thresh);
      TimelinessResult tl = timeliness(scores, truth, ev_thresh, lo, hi);
      std::string out = "auc,sensitivity,specificity,timeliness,detected,missed\n";
      out += format_g17(auc) + "," + format_g17(ssp.sensitivity) + "," +
             format_g17(ssp.specificity) + "," + format_g17(tl.mean_weeks) + "," +
             std::to_string(tl.detected) + "," + std::to_string(tl.missed) + "\n";
      if (!ev_out.empty()) write_text_atomic(ev_out, out);
      std::cout << out;
      return 0;
    }

    if (*wg) {
      WeightTable wt = neighbor_weights_from_patients(wg_patients, wg_k);
      save_neighbors(wg_out, wt);
      std::cout << "weights written to " << wg_out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error[" << e.category << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
