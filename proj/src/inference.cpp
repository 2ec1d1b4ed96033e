#include "cmsnb/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmsnb {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_prepared(const PanelData& data) {
  if (data.rev_nbrs.size() != static_cast<size_t>(data.N))
    fail("domain", "panel is missing the reverse-neighbour index; call build_rev_nbrs() first");
  if (data.init_dist.empty())
    fail("domain", "panel has no initial state distribution");
}
}  // namespace

StateProbSeries state_probabilities(const PosteriorDraws& draws, int t_lo,
                                    int t_hi) {
  const int N = draws.N(), T = draws.T();
  if (t_hi < 0) t_hi = T;
  if (t_lo < 0 || t_lo >= t_hi || t_hi > T)
    fail("domain", "state-probability range is empty or out of bounds");
  long total = 0;
  for (const auto& c : draws.chains) total += c.n_state_draws;
  if (total == 0) fail("domain", "no stored state draws");

  StateProbSeries out;
  out.N = N;
  out.T = T;
  out.t_lo = t_lo;
  out.t_hi = t_hi;
  out.p.assign(static_cast<size_t>(N) * T * 3, 0.0);
  const StateSpace& ss = draws.spec.ss;
  for (size_t c = 0; c < draws.chains.size(); ++c) {
    for (long d = 0; d < draws.chains[c].n_state_draws; ++d) {
      const std::uint8_t* st = draws.state_draw(static_cast<int>(c), d);
      for (int i = 0; i < N; ++i)
        for (int t = t_lo; t < t_hi; ++t) {
          int cs = ss.collapse(st[static_cast<size_t>(i) * T + t]);
          out.p[(static_cast<size_t>(i) * T + t) * 3 + (cs - 1)] += 1.0;
        }
    }
  }
  for (double& v : out.p) v /= total;
  return out;
}

Params params_from_row(const PosteriorDraws& draws, const PanelData& data,
                       int chain, long kept_row) {
  const ParamLayout lay =
      ParamLayout::build(draws.spec, data.N, data.x_names, data.z_names);
  if (lay.names != draws.names)
    fail("domain", "stored parameter names do not match this model/panel");
  Params p;
  shape_params(draws.spec, data, p);
  const ChainDraws& c = draws.chains[chain];
  for (int k = 0; k < lay.P(); ++k)
    lay.set(p, k, c.at(kept_row, k, lay.P()));
  return p;
}

namespace {
// shared core: per-cell predictive log densities from the blocked filter
std::vector<double> filter_predictive(const ModelSpec& spec,
                                      const PanelData& data, const Params& p,
                                      const LatentStates& states) {
  require_prepared(data);
  EmissionCache emis;
  emis.bind(data);
  emis.rebuild(spec, data, p.count);
  std::vector<double> out(static_cast<size_t>(data.N) * data.T, 0.0);
  AreaFilter f;
  for (int i = 0; i < data.N; ++i) {
    forward_filter_area(spec, data, p, emis, states, i, true, f);
    for (int t = 1; t < data.T; ++t)
      out[static_cast<size_t>(i) * data.T + t] = f.logpred[t];
  }
  return out;
}
}  // namespace

std::vector<double> marginal_loglik_forward(const ModelSpec& spec,
                                            const PanelData& data,
                                            const Params& p) {
  if ((spec.couple12 && p.chain.t12.spat != 0.0) ||
      (spec.couple21 && p.chain.t21.spat != 0.0) ||
      (spec.couple23 && p.chain.t23.spat != 0.0) ||
      (spec.couple33 && p.chain.t33.spat != 0.0))
    fail("domain", "the plain forward marginal requires zero spatial coupling");
  // neighbour paths only reach the (zeroed) coupling terms, so any fixed
  // placeholder path yields the exact marginal
  LatentStates dummy(data.N, data.T);
  return filter_predictive(spec, data, p, dummy);
}

std::vector<double> partial_marginal_loglik(const ModelSpec& spec,
                                            const PanelData& data,
                                            const Params& p,
                                            const LatentStates& states) {
  return filter_predictive(spec, data, p, states);
}

std::vector<double> partial_marginal_loglik(const ModelSpec& spec,
                                            const PanelData& data,
                                            const PosteriorDraws& draws,
                                            int chain, long d) {
  const ChainDraws& c = draws.chains[chain];
  if (d < 0 || d >= c.n_state_draws) fail("domain", "state draw index out of range");
  Params p = params_from_row(draws, data, chain, d * draws.cfg.thin_states);
  LatentStates st(data.N, data.T);
  const std::uint8_t* s = draws.state_draw(chain, d);
  std::copy(s, s + st.s.size(), st.s.begin());
  return partial_marginal_loglik(spec, data, p, st);
}

WaicResult waic(const std::vector<std::vector<double>>& per_draw_logp) {
  const size_t M = per_draw_logp.size();
  if (M < 2) fail("domain", "WAIC needs at least two draws");
  const size_t C = per_draw_logp[0].size();
  for (const auto& row : per_draw_logp)
    if (row.size() != C) fail("domain", "ragged per-draw log-density matrix");
  WaicResult r;
  r.n_draws = static_cast<long>(M);
  std::vector<double> col(M);
  for (size_t c = 0; c < C; ++c) {
    for (size_t m = 0; m < M; ++m) col[m] = per_draw_logp[m][c];
    double lse = logsumexp(col.data(), static_cast<int>(M));
    r.lpd += lse - std::log(static_cast<double>(M));
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= M;
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    r.p_eff += var / (M - 1);
  }
  r.waic = -2.0 * (r.lpd - r.p_eff);
  return r;
}

WaicResult waic_from_accum(const WaicAccum& acc) {
  if (acc.n < 2) fail("domain", "WAIC needs at least two draws");
  WaicResult r;
  r.n_draws = acc.n;
  const double logn = std::log(static_cast<double>(acc.n));
  for (int i = 0; i < acc.N; ++i)
    for (int t = 1; t < acc.T; ++t) {
      const size_t c = static_cast<size_t>(i) * acc.T + t;
      r.lpd += acc.lse[c] - logn;
      r.p_eff += acc.m2[c] / (acc.n - 1);
    }
  r.waic = -2.0 * (r.lpd - r.p_eff);
  return r;
}

WaicResult waic_from_draws(const ModelSpec& spec, const PanelData& data,
                           const PosteriorDraws& draws) {
  WaicAccum acc;
  acc.init(data.N, data.T);
  for (size_t c = 0; c < draws.chains.size(); ++c)
    for (long d = 0; d < draws.chains[c].n_state_draws; ++d) {
      std::vector<double> lp =
          partial_marginal_loglik(spec, data, draws, static_cast<int>(c), d);
      acc.add_draw(lp.data());
    }
  return waic_from_accum(acc);
}

// ---- posterior predictive ----------------------------------------------------

namespace {
// advance one member's state slice one week; z_row(i) supplies the transition
// covariates of the arrival week
template <typename ZRow>
void step_states(const ModelSpec& spec, const PanelData& data,
                 const ChainParams& chain, const std::uint8_t* prev,
                 ZRow z_row, Rng& rng, std::uint8_t* next) {
  const StateSpace& ss = spec.ss;
  const int K = ss.K();
  std::vector<double> row(K);
  for (int i = 0; i < data.N; ++i) {
    double nbr = 0.0;
    for (const auto& e : data.in_nbrs[i])
      if (ss.collapse(prev[e.j]) == OUTBREAK) nbr += e.w;
    TransScores sc = transition_scores(spec, chain, z_row(i), nbr);
    transition_row(spec, sc, prev[i], row.data());
    int d = rng.categorical(row.data(), K);
    if (d < 0) fail("numeric", "degenerate transition row in forecast");
    next[i] = static_cast<std::uint8_t>(d + 1);
  }
}

long draw_count(const ModelSpec& spec, const PanelData&,
                const CountParams& cp, int i, int state, long prev_y,
                const double* x_row, Rng& rng) {
  const int cs = spec.ss.collapse(state);
  if (cs == ABSENCE) return 0;
  double lm = cs == ENDEMIC ? cp.intercept_en(i) : cp.intercept_ob(i);
  const auto& sub = cs == ENDEMIC ? spec.x_en : spec.x_ob;
  const auto& beta = cs == ENDEMIC ? cp.beta_en : cp.beta_ob;
  for (int q : sub) lm += beta[q] * x_row[q];
  lm += (cs == ENDEMIC ? cp.rho_en : cp.rho_ob) * std::log1p(static_cast<double>(prev_y));
  return rng.neg_binomial(std::exp(lm), cs == ENDEMIC ? cp.r_en : cp.r_ob);
}
}  // namespace

double ForecastDraws::state_prob(int k, int i, int collapsed,
                                 const StateSpace& ss) const {
  long hits = 0;
  for (long m = 0; m < M; ++m)
    if (ss.collapse(s[(static_cast<size_t>(m) * H + k) * N + i]) == collapsed) ++hits;
  return M > 0 ? static_cast<double>(hits) / M : 0.0;
}

ForecastDraws posterior_predictive(const ModelSpec& spec, const PanelData& data,
                                   const PosteriorDraws& draws, int horizon,
                                   Rng& rng) {
  if (horizon < 1) fail("domain", "forecast horizon must be >= 1");
  require_prepared(data);
  long M = 0;
  for (const auto& c : draws.chains) M += c.n_state_draws;
  if (M == 0) fail("domain", "no stored state draws to forecast from");

  ForecastDraws out;
  out.N = data.N;
  out.H = horizon;
  out.M = M;
  out.s.resize(static_cast<size_t>(M) * horizon * data.N);
  out.y.resize(out.s.size());

  const int T = data.T;
  auto z_last = [&](int i) { return data.z_at(i, T - 1); };
  std::vector<std::uint8_t> prev(data.N), next(data.N);
  std::vector<long> prev_y(data.N), next_y(data.N);
  long m = 0;
  for (size_t c = 0; c < draws.chains.size(); ++c) {
    for (long d = 0; d < draws.chains[c].n_state_draws; ++d, ++m) {
      Params p = params_from_row(draws, data, static_cast<int>(c),
                                 d * draws.cfg.thin_states);
      const std::uint8_t* st = draws.state_draw(static_cast<int>(c), d);
      for (int i = 0; i < data.N; ++i) {
        prev[i] = st[static_cast<size_t>(i) * T + (T - 1)];
        prev_y[i] = data.count(i, T - 1);
      }
      for (int k = 0; k < horizon; ++k) {
        step_states(spec, data, p.chain, prev.data(), z_last, rng, next.data());
        for (int i = 0; i < data.N; ++i)
          next_y[i] = draw_count(spec, data, p.count, i, next[i], prev_y[i],
                                 data.x_at(i, T - 1), rng);
        std::uint8_t* srow = out.s.data() + (static_cast<size_t>(m) * horizon + k) * data.N;
        long* yrow = out.y.data() + (static_cast<size_t>(m) * horizon + k) * data.N;
        for (int i = 0; i < data.N; ++i) {
          srow[i] = next[i];
          yrow[i] = next_y[i];
        }
        prev.swap(next);
        prev_y.swap(next_y);
      }
    }
  }
  return out;
}

double multivariate_log_score(const ModelSpec& spec, const PanelData& data,
                              const PosteriorDraws& draws,
                              const std::vector<long>& y_obs, Rng& rng,
                              const double* x_next, const double* z_next) {
  if (y_obs.size() != static_cast<size_t>(data.N))
    fail("domain", "observed count vector does not match the panel's areas");
  require_prepared(data);
  long M = 0;
  for (const auto& c : draws.chains) M += c.n_state_draws;
  if (M == 0) fail("domain", "no stored state draws to score with");

  const int T = data.T;
  const size_t zdim = data.z_names.size();
  const size_t xdim = data.x_names.size();
  auto z_row = [&](int i) {
    return z_next ? z_next + static_cast<size_t>(i) * zdim : data.z_at(i, T - 1);
  };
  std::vector<std::uint8_t> prev(data.N), next(data.N);
  std::vector<double> member(M);
  long m = 0;
  for (size_t c = 0; c < draws.chains.size(); ++c) {
    for (long d = 0; d < draws.chains[c].n_state_draws; ++d, ++m) {
      Params p = params_from_row(draws, data, static_cast<int>(c),
                                 d * draws.cfg.thin_states);
      const std::uint8_t* st = draws.state_draw(static_cast<int>(c), d);
      for (int i = 0; i < data.N; ++i)
        prev[i] = st[static_cast<size_t>(i) * T + (T - 1)];
      step_states(spec, data, p.chain, prev.data(), z_row, rng, next.data());
      double s = 0.0;
      for (int i = 0; i < data.N; ++i) {
        const int cs = spec.ss.collapse(next[i]);
        if (cs == ABSENCE) {
          if (y_obs[i] != 0) {
            s = kNegInf;
            break;
          }
          continue;
        }
        const CountParams& cp = p.count;
        double lm = cs == ENDEMIC ? cp.intercept_en(i) : cp.intercept_ob(i);
        const auto& sub = cs == ENDEMIC ? spec.x_en : spec.x_ob;
        const auto& beta = cs == ENDEMIC ? cp.beta_en : cp.beta_ob;
        const double* xr =
            x_next ? x_next + static_cast<size_t>(i) * xdim : data.x_at(i, T - 1);
        for (int q : sub) lm += beta[q] * xr[q];
        lm += (cs == ENDEMIC ? cp.rho_en : cp.rho_ob) *
              std::log1p(static_cast<double>(data.count(i, T - 1)));
        s += nb_logpmf_logmean(y_obs[i], lm, cs == ENDEMIC ? cp.r_en : cp.r_ob);
      }
      member[m] = s;
    }
  }
  double lse = logsumexp(member.data(), static_cast<int>(M));
  return -(lse - std::log(static_cast<double>(M))) / data.N;
}

}  // namespace cmsnb
