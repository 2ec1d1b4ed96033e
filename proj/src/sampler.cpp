#include "cmsnb/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <thread>

namespace cmsnb {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string cell_str(int i, int t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "(area %d, week index %d)", i, t);
  return buf;
}

}  // namespace

// ---- adaptive random-walk Metropolis ---------------------------------------

double AdaptState::sd() const { return std::exp(log_sd); }

void AdaptState::record(bool accepted) {
  ++total_tries;
  if (accepted) ++total_accepts;
  if (frozen) return;
  ++tries;
  if (accepted) ++accepts;
  if (tries == interval) {
    ++batches;
    double rate = static_cast<double>(accepts) / interval;
    double step = std::min(1.0, 1.0 / std::sqrt(static_cast<double>(batches)));
    log_sd += step * (rate - target);
    log_sd = std::clamp(log_sd, -15.0, 15.0);
    tries = accepts = 0;
  }
}

double adaptive_rwm_step(const std::function<double(double)>& target_logpdf,
                         double x, AdaptState& st, Rng& rng) {
  double prop = x + st.sd() * rng.normal();
  double dl = target_logpdf(prop) - target_logpdf(x);
  bool acc = false;
  if (dl >= 0.0)
    acc = true;
  else if (dl > kNegInf)
    acc = rng.unif() < std::exp(dl);
  st.record(acc);
  return acc ? prop : x;
}

// ---- parameter layout -------------------------------------------------------

ParamLayout ParamLayout::build(const ModelSpec& spec, int N,
                               const std::vector<std::string>& x_names,
                               const std::vector<std::string>& z_names) {
  ParamLayout lay;
  lay.share_r = spec.share_r;
  auto add = [&](ParamRef r, const std::string& name) {
    lay.refs.push_back(r);
    lay.names.push_back(name);
  };
  if (spec.random_intercepts) {
    for (int i = 0; i < N; ++i)
      add({ParamRef::B0_EN, i, -1}, "b0_en[" + std::to_string(i) + "]");
    for (int i = 0; i < N; ++i)
      add({ParamRef::B0_OB, i, -1}, "b0_ob[" + std::to_string(i) + "]");
    add({ParamRef::B0_MEAN_EN, -1, -1}, "b0_mean_en");
    add({ParamRef::B0_MEAN_OB, -1, -1}, "b0_mean_ob");
    add({ParamRef::SIGMA_EN, -1, -1}, "sigma_en");
    add({ParamRef::SIGMA_OB, -1, -1}, "sigma_ob");
  } else {
    add({ParamRef::B0_EN, 0, -1}, "b0_en");
    add({ParamRef::B0_OB, 0, -1}, "b0_ob");
  }
  for (int q : spec.x_en) add({ParamRef::BETA_EN, q, -1}, "beta_en." + x_names[q]);
  for (int q : spec.x_ob) add({ParamRef::BETA_OB, q, -1}, "beta_ob." + x_names[q]);
  add({ParamRef::RHO_EN, -1, -1}, "rho_en");
  add({ParamRef::RHO_OB, -1, -1}, "rho_ob");
  if (spec.share_r) {
    add({ParamRef::R_EN, -1, -1}, "r");
  } else {
    add({ParamRef::R_EN, -1, -1}, "r_en");
    add({ParamRef::R_OB, -1, -1}, "r_ob");
  }
  struct TD {
    int idx;
    const char* tag;
    const std::vector<int>* sub;
    bool coupled;
    bool present;
  };
  const TD tds[4] = {
      {0, "a12", &spec.z12, spec.couple12, spec.ss.absence},
      {1, "a21", &spec.z21, spec.couple21, spec.ss.absence},
      {2, "a23", &spec.z23, spec.couple23, true},
      {3, "a33", &spec.z33, spec.couple33, true},
  };
  for (const TD& td : tds) {
    if (!td.present) continue;
    add({ParamRef::A0, -1, td.idx}, std::string(td.tag) + ".intercept");
    for (int q : *td.sub)
      add({ParamRef::COEF, q, td.idx}, std::string(td.tag) + "." + z_names[q]);
    if (td.coupled) add({ParamRef::SPAT, -1, td.idx}, std::string(td.tag) + ".spatial");
  }
  return lay;
}

namespace {
TransParams& trans_of(Params& p, int t) {
  switch (t) {
    case 0: return p.chain.t12;
    case 1: return p.chain.t21;
    case 2: return p.chain.t23;
    default: return p.chain.t33;
  }
}
const TransParams& trans_of(const Params& p, int t) {
  return trans_of(const_cast<Params&>(p), t);
}
}  // namespace

double ParamLayout::get(const Params& p, int k) const {
  const ParamRef& r = refs[k];
  switch (r.what) {
    case ParamRef::B0_EN: return p.count.b0_en[r.idx];
    case ParamRef::B0_OB: return p.count.b0_ob[r.idx];
    case ParamRef::B0_MEAN_EN: return p.count.b0_mean_en;
    case ParamRef::B0_MEAN_OB: return p.count.b0_mean_ob;
    case ParamRef::SIGMA_EN: return p.count.sigma_en;
    case ParamRef::SIGMA_OB: return p.count.sigma_ob;
    case ParamRef::BETA_EN: return p.count.beta_en[r.idx];
    case ParamRef::BETA_OB: return p.count.beta_ob[r.idx];
    case ParamRef::RHO_EN: return p.count.rho_en;
    case ParamRef::RHO_OB: return p.count.rho_ob;
    case ParamRef::R_EN: return p.count.r_en;
    case ParamRef::R_OB: return p.count.r_ob;
    case ParamRef::A0: return trans_of(p, r.trans).a0;
    case ParamRef::COEF: return trans_of(p, r.trans).coef[r.idx];
    case ParamRef::SPAT: return trans_of(p, r.trans).spat;
  }
  return 0.0;
}

void ParamLayout::set(Params& p, int k, double v) const {
  const ParamRef& r = refs[k];
  switch (r.what) {
    case ParamRef::B0_EN: p.count.b0_en[r.idx] = v; break;
    case ParamRef::B0_OB: p.count.b0_ob[r.idx] = v; break;
    case ParamRef::B0_MEAN_EN: p.count.b0_mean_en = v; break;
    case ParamRef::B0_MEAN_OB: p.count.b0_mean_ob = v; break;
    case ParamRef::SIGMA_EN: p.count.sigma_en = v; break;
    case ParamRef::SIGMA_OB: p.count.sigma_ob = v; break;
    case ParamRef::BETA_EN: p.count.beta_en[r.idx] = v; break;
    case ParamRef::BETA_OB: p.count.beta_ob[r.idx] = v; break;
    case ParamRef::RHO_EN: p.count.rho_en = v; break;
    case ParamRef::RHO_OB: p.count.rho_ob = v; break;
    case ParamRef::R_EN:
      p.count.r_en = v;
      if (share_r) p.count.r_ob = v;
      break;
    case ParamRef::R_OB: p.count.r_ob = v; break;
    case ParamRef::A0: trans_of(p, r.trans).a0 = v; break;
    case ParamRef::COEF: trans_of(p, r.trans).coef[r.idx] = v; break;
    case ParamRef::SPAT: trans_of(p, r.trans).spat = v; break;
  }
}

bool ParamLayout::touches_emission(int k) const {
  switch (refs[k].what) {
    case ParamRef::B0_EN:
    case ParamRef::B0_OB:
    case ParamRef::BETA_EN:
    case ParamRef::BETA_OB:
    case ParamRef::RHO_EN:
    case ParamRef::RHO_OB:
    case ParamRef::R_EN:
    case ParamRef::R_OB:
      return true;
    default:
      return false;
  }
}

bool ParamLayout::touches_chain(int k) const {
  switch (refs[k].what) {
    case ParamRef::A0:
    case ParamRef::COEF:
    case ParamRef::SPAT:
      return true;
    default:
      return false;
  }
}

bool ParamLayout::touches_constraint(const ModelSpec& spec, int k) const {
  switch (refs[k].what) {
    case ParamRef::B0_EN:
    case ParamRef::B0_OB:
    case ParamRef::BETA_EN:
    case ParamRef::BETA_OB:
    case ParamRef::RHO_EN:
    case ParamRef::RHO_OB:
      return true;
    case ParamRef::B0_MEAN_EN:
    case ParamRef::B0_MEAN_OB:
      return spec.weak_constraints;  // weak mode orders the hyper means
    default:
      return false;
  }
}

int ParamLayout::emission_area(int k) const {
  const ParamRef& r = refs[k];
  if ((r.what == ParamRef::B0_EN || r.what == ParamRef::B0_OB) && r.idx >= 0)
    return r.idx;
  return -1;
}

Dist ParamLayout::prior(const ModelSpec&, const PriorSpec& ps, int k) const {
  const ParamRef& r = refs[k];
  switch (r.what) {
    case ParamRef::B0_EN:
    case ParamRef::B0_OB:
      // in random-intercept mode the per-area layer is Normal(mean, sigma),
      // which depends on other coordinates; callers handle it explicitly
      return ps.emission_coef;
    case ParamRef::B0_MEAN_EN:
    case ParamRef::B0_MEAN_OB: return ps.emission_coef;
    case ParamRef::SIGMA_EN:
    case ParamRef::SIGMA_OB: return ps.sigma;
    case ParamRef::BETA_EN:
    case ParamRef::BETA_OB: return ps.emission_coef;
    case ParamRef::RHO_EN:
    case ParamRef::RHO_OB: return ps.rho;
    case ParamRef::R_EN: return share_r ? ps.r_shared : ps.r_en;
    case ParamRef::R_OB: return ps.r_ob;
    case ParamRef::A0: return ps.trans_intercept;
    case ParamRef::COEF:
      switch (r.trans) {
        case 0: return ps.coef12[r.idx];
        case 1: return ps.coef21[r.idx];
        case 2: return ps.coef23[r.idx];
        default: return ps.coef33[r.idx];
      }
    case ParamRef::SPAT: return ps.spatial;
  }
  return ps.emission_coef;
}

// ---- emission cache ---------------------------------------------------------

void EmissionCache::bind(const PanelData& data) {
  N = data.N;
  T = data.T;
  const size_t cells = static_cast<size_t>(N) * T;
  en.assign(cells, 0.0);
  ob.assign(cells, 0.0);
  // index the distinct counts so lgamma terms are shared across cells
  std::vector<long> sorted(data.y);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  uy_ = std::move(sorted);
  yidx_.resize(cells);
  for (size_t c = 0; c < cells; ++c)
    yidx_[c] = static_cast<int>(
        std::lower_bound(uy_.begin(), uy_.end(), data.y[c]) - uy_.begin());
  c_en_.assign(uy_.size(), 0.0);
  c_ob_.assign(uy_.size(), 0.0);
  r_en_ = r_ob_ = -1;
}

namespace {
// the per-count coefficient of nb_logpmf_logmean, so both evaluation routes
// agree bit for bit
void fill_ctab(const std::vector<long>& uy, double r, std::vector<double>& c) {
  for (size_t u = 0; u < uy.size(); ++u) c[u] = nb_log_coeff(uy[u], r);
}
}  // namespace

void EmissionCache::rebuild(const ModelSpec& spec, const PanelData& data,
                            const CountParams& p) {
  if (p.r_en != r_en_) {
    fill_ctab(uy_, p.r_en, c_en_);
    r_en_ = p.r_en;
  }
  if (p.r_ob != r_ob_) {
    fill_ctab(uy_, p.r_ob, c_ob_);
    r_ob_ = p.r_ob;
  }
  const double lr_en = std::log(p.r_en), lr_ob = std::log(p.r_ob);
  for (int i = 0; i < N; ++i) {
    for (int t = 1; t < T; ++t) {
      const size_t c = static_cast<size_t>(i) * T + t;
      const long yv = data.y[c];
      double lm = log_count_mean(spec, data, p, i, t, ENDEMIC);
      double s = log1pexp(lm - lr_en);
      en[c] = c_en_[yidx_[c]] - p.r_en * s + yv * (lm - s);
      lm = log_count_mean(spec, data, p, i, t, OUTBREAK);
      s = log1pexp(lm - lr_ob);
      ob[c] = c_ob_[yidx_[c]] - p.r_ob * s + yv * (lm - s);
    }
  }
}

double EmissionCache::at_state(const StateSpace& ss, const PanelData& data,
                               int i, int t, int s) const {
  const size_t c = static_cast<size_t>(i) * T + t;
  switch (ss.collapse(s)) {
    case ABSENCE: return data.y[c] == 0 ? 0.0 : kNegInf;
    case ENDEMIC: return en[c];
    default: return ob[c];
  }
}

// ---- coupling ratio ---------------------------------------------------------

namespace {
// log of the ratio of the t -> t+1 transition likelihood of the areas
// listening to `i`, outbreak scenario over non-outbreak scenario
double coupling_logratio(const ModelSpec& spec, const PanelData& data,
                         const ChainParams& chain, const LatentStates& states,
                         int i, int t) {
  const StateSpace& ss = spec.ss;
  double delta = 0.0;
  for (const auto& e : data.rev_nbrs[i]) {
    const int from = states.at(e.j, t);
    bool relevant;
    if (ss.absence && from == 1)
      relevant = spec.couple12;
    else if (from == ss.last_en())
      relevant = ss.absence ? (spec.couple21 || spec.couple23) : spec.couple23;
    else if (from == ss.last_ob())
      relevant = spec.couple33;
    else
      relevant = false;  // corridor move, probability one either way
    if (!relevant) continue;
    double base = 0.0;
    for (const auto& e2 : data.in_nbrs[e.j])
      if (e2.j != i && ss.collapse(states.at(e2.j, t)) == OUTBREAK) base += e2.w;
    const double* zz = data.z_at(e.j, t + 1);
    TransScores s0 = transition_scores(spec, chain, zz, base);
    TransScores s1 = transition_scores(spec, chain, zz, base + e.w);
    const int to = states.at(e.j, t + 1);
    delta += transition_logprob(spec, s1, from, to) -
             transition_logprob(spec, s0, from, to);
  }
  return delta;
}
}  // namespace

// ---- forward filter ---------------------------------------------------------

void forward_filter_area(const ModelSpec& spec, const PanelData& data,
                         const Params& p, const EmissionCache& emis,
                         const LatentStates& states, int i, bool want_pred,
                         AreaFilter& out) {
  const StateSpace& ss = spec.ss;
  const int K = ss.K(), T = data.T;
  out.T = T;
  out.K = K;
  out.filt.resize(static_cast<size_t>(T) * K);
  out.sc.resize(T);
  out.logpred.assign(T, 0.0);
  const bool couple_fwd = spec.coupled() && !data.rev_nbrs[i].empty();

  std::vector<double> pred(K), lp(K);
  for (int t = 0; t < T; ++t) {
    if (t >= 1) {
      double nbr = neighbor_outbreak_sum(data, ss, states, i, t - 1);
      out.sc[t] = transition_scores(spec, p.chain, data.z_at(i, t), nbr);
      std::fill(pred.begin(), pred.end(), 0.0);
      const double* fprev = out.filt.data() + static_cast<size_t>(t - 1) * K;
      for (int s = 1; s <= K; ++s)
        accumulate_transition(spec, out.sc[t], s, fprev[s - 1], pred.data());
      for (int s = 0; s < K; ++s)
        lp[s] = emis.at_state(ss, data, i, t, s + 1) + std::log(pred[s]);
      if (want_pred) out.logpred[t] = logsumexp(lp.data(), K);
    } else {
      for (int s = 0; s < K; ++s) lp[s] = initial_log_mass(spec, data, i, s + 1);
    }
    if (couple_fwd && t + 1 < T) {
      double delta = coupling_logratio(spec, data, p.chain, states, i, t);
      if (delta != 0.0)
        for (int s = 0; s < K; ++s)
          if (ss.collapse(s + 1) == OUTBREAK) lp[s] += delta;
    }
    double m = kNegInf;
    for (int s = 0; s < K; ++s) m = std::max(m, lp[s]);
    if (m == kNegInf)
      fail("numeric", "filter ran out of mass at " + cell_str(i, t) +
                          "; the state path cannot explain the count");
    double* frow = out.filt.data() + static_cast<size_t>(t) * K;
    double norm = 0.0;
    for (int s = 0; s < K; ++s) {
      frow[s] = std::exp(lp[s] - m);
      norm += frow[s];
    }
    for (int s = 0; s < K; ++s) frow[s] /= norm;
  }
}

void iffbs_sample_area(const ModelSpec& spec, const PanelData& data,
                       const Params& p, const EmissionCache& emis,
                       LatentStates& states, int i, Rng& rng, bool want_pred,
                       AreaFilter& f) {
  forward_filter_area(spec, data, p, emis, states, i, want_pred, f);
  const int K = f.K, T = f.T;
  int next = rng.categorical(f.filt.data() + static_cast<size_t>(T - 1) * K, K);
  if (next < 0) fail("numeric", "degenerate filter row at " + cell_str(i, T - 1));
  states.set(i, T - 1, next + 1);
  std::vector<double> w(K);
  for (int t = T - 2; t >= 0; --t) {
    const double* frow = f.filt.data() + static_cast<size_t>(t) * K;
    for (int s = 0; s < K; ++s) {
      double l = transition_logprob(spec, f.sc[t + 1], s + 1, next + 1);
      w[s] = l == kNegInf ? 0.0 : frow[s] * std::exp(l);
    }
    int d = rng.categorical(w.data(), K);
    if (d < 0) fail("numeric", "degenerate backward step at " + cell_str(i, t));
    states.set(i, t, d + 1);
    next = d;
  }
}

void single_site_sample_area(const ModelSpec& spec, const PanelData& data,
                             const Params& p, const EmissionCache& emis,
                             LatentStates& states, int i, Rng& rng) {
  const StateSpace& ss = spec.ss;
  const int K = ss.K(), T = data.T;
  std::vector<double> lp(K), w(K);
  for (int t = 0; t < T; ++t) {
    TransScores sc_in, sc_out;
    if (t >= 1)
      sc_in = transition_scores(spec, p.chain, data.z_at(i, t),
                                neighbor_outbreak_sum(data, ss, states, i, t - 1));
    if (t + 1 < T)
      sc_out = transition_scores(spec, p.chain, data.z_at(i, t + 1),
                                 neighbor_outbreak_sum(data, ss, states, i, t));
    double delta = 0.0;
    if (t + 1 < T && spec.coupled() && !data.rev_nbrs[i].empty())
      delta = coupling_logratio(spec, data, p.chain, states, i, t);
    for (int s = 1; s <= K; ++s) {
      double v;
      if (t == 0)
        v = initial_log_mass(spec, data, i, s);
      else
        v = emis.at_state(ss, data, i, t, s) +
            transition_logprob(spec, sc_in, states.at(i, t - 1), s);
      if (t + 1 < T) {
        v += transition_logprob(spec, sc_out, s, states.at(i, t + 1));
        if (delta != 0.0 && ss.collapse(s) == OUTBREAK) v += delta;
      }
      lp[s - 1] = v;
    }
    double m = kNegInf;
    for (int s = 0; s < K; ++s) m = std::max(m, lp[s]);
    if (m == kNegInf)
      fail("numeric", "single-site update ran out of mass at " + cell_str(i, t));
    for (int s = 0; s < K; ++s) w[s] = std::exp(lp[s] - m);
    int d = rng.categorical(w.data(), K);
    if (d < 0) fail("numeric", "single-site update degenerate at " + cell_str(i, t));
    states.set(i, t, d + 1);
  }
}

// ---- initialization ---------------------------------------------------------

LatentStates init_latent_chains(const ModelSpec& spec, const PanelData& data,
                                double stay, Rng& rng) {
  const StateSpace& ss = spec.ss;
  LatentStates st(data.N, data.T);
  const int nfree = ss.K() - (ss.absence ? 1 : 0);
  for (int i = 0; i < data.N; ++i) {
    int s = ss.first_en() + static_cast<int>(rng.integer(nfree));
    st.set(i, 0, s);
    for (int t = 1; t < data.T; ++t) {
      if (s == ss.last_en())
        s = rng.unif() < stay ? s : ss.first_ob();
      else if (s == ss.last_ob())
        s = rng.unif() < stay ? s : ss.first_en();
      else
        s = s + 1;  // corridor
      st.set(i, t, s);
    }
  }
  return st;
}

Params init_params(const ModelSpec& spec, const PanelData& data,
                   const PriorSpec& priors, Rng& rng, long max_tries) {
  Params p;
  shape_params(spec, data, p);
  // anchor the count intercepts at quantiles of the positive counts: a chain
  // started from a diffuse prior draw tends to park one regime where no count
  // supports it, and the random walk then needs ~forever to bring it back
  std::vector<long> pos;
  for (long v : data.y)
    if (v > 0) pos.push_back(v);
  std::sort(pos.begin(), pos.end());
  auto qlog = [&](double f, double shift) {
    if (pos.empty()) return std::log(shift);
    size_t k = std::min(pos.size() - 1, static_cast<size_t>(f * pos.size()));
    return std::log(static_cast<double>(pos[k]) + shift);
  };
  const double lo = qlog(0.5, 0.5), hi = std::max(qlog(0.9, 1.0), lo + 0.7);
  auto mid = [&](const Dist& d) {
    // a central draw; tiny overdispersion values make the first sweeps numb
    if (d.kind == Dist::Uniform) return d.a + (d.b - d.a) * (0.2 + 0.6 * rng.unif());
    double x = d.draw(rng);
    if (d.kind == Dist::Cauchy)
      while (std::abs(x) > 25.0) x = d.draw(rng);
    return x;
  };
  for (long it = 0; it < max_tries; ++it) {
    CountParams& c = p.count;
    if (spec.random_intercepts) {
      c.b0_mean_en = lo + 0.3 * rng.normal();
      c.b0_mean_ob = hi + 0.3 * rng.normal();
      c.sigma_en = 0.05 + 0.3 * std::abs(rng.normal());
      c.sigma_ob = 0.05 + 0.3 * std::abs(rng.normal());
      for (int i = 0; i < data.N; ++i) {
        c.b0_en[i] = rng.normal(c.b0_mean_en, c.sigma_en);
        c.b0_ob[i] = rng.normal(c.b0_mean_ob, c.sigma_ob);
      }
    } else {
      c.b0_en[0] = lo + 0.3 * rng.normal();
      c.b0_ob[0] = hi + 0.3 * rng.normal();
    }
    for (int q : spec.x_en) c.beta_en[q] = 0.1 * rng.normal();
    for (int q : spec.x_ob) c.beta_ob[q] = 0.1 * rng.normal();
    c.rho_en = 0.05 + 0.4 * rng.unif();
    c.rho_ob = 0.05 + 0.4 * rng.unif();
    if (spec.share_r) {
      c.r_en = c.r_ob = mid(priors.r_shared);
    } else {
      c.r_en = mid(priors.r_en);
      c.r_ob = mid(priors.r_ob);
    }
    // transition gates start nearly flat so every move stays live; a slammed
    // gate freezes the state paths before the counts get a say
    if (spec.ss.absence) {
      p.chain.t12.a0 = 0.5 * rng.normal();
      for (int q : spec.z12) p.chain.t12.coef[q] = 0.2 * rng.normal();
      if (spec.couple12) p.chain.t12.spat = mid(priors.spatial);
      p.chain.t21.a0 = 0.5 * rng.normal();
      for (int q : spec.z21) p.chain.t21.coef[q] = 0.2 * rng.normal();
      if (spec.couple21) p.chain.t21.spat = mid(priors.spatial);
    }
    p.chain.t23.a0 = 0.5 * rng.normal();
    for (int q : spec.z23) p.chain.t23.coef[q] = 0.2 * rng.normal();
    if (spec.couple23) p.chain.t23.spat = mid(priors.spatial);
    p.chain.t33.a0 = 0.5 * rng.normal();
    for (int q : spec.z33) p.chain.t33.coef[q] = 0.2 * rng.normal();
    if (spec.couple33) p.chain.t33.spat = mid(priors.spatial);

    if (constraints_satisfied(spec, data, c)) return p;
    if (spec.x_en == spec.x_ob) {
      // the ordering often just means the blocks were drawn swapped
      std::swap(c.b0_en, c.b0_ob);
      std::swap(c.b0_mean_en, c.b0_mean_ob);
      std::swap(c.sigma_en, c.sigma_ob);
      std::swap(c.beta_en, c.beta_ob);
      std::swap(c.rho_en, c.rho_ob);
      if (constraints_satisfied(spec, data, c)) return p;
    }
  }
  fail("numeric", "could not draw initial parameters inside the constraint region");
}

// ---- Gibbs runner -----------------------------------------------------------

namespace {

// per-cell bookkeeping for fast partial recomputation of the chain loglik:
// cells grouped by the type of their realized from-state row
struct ChainGroups {
  // flat cell ids (i*T + t, t >= 1) plus cached neighbour sums and endpoints
  struct Group {
    std::vector<int> cells;
    std::vector<double> nbr;
    std::vector<std::uint8_t> from, to;
    void clear() {
      cells.clear();
      nbr.clear();
      from.clear();
      to.clear();
    }
  };
  Group g12, g_en, g33;
  double init_sum = 0.0;

  void rebuild(const ModelSpec& spec, const PanelData& data,
               const LatentStates& st) {
    const StateSpace& ss = spec.ss;
    g12.clear();
    g_en.clear();
    g33.clear();
    init_sum = 0.0;
    for (int i = 0; i < data.N; ++i) {
      init_sum += initial_log_mass(spec, data, i, st.at(i, 0));
      for (int t = 1; t < data.T; ++t) {
        const int from = st.at(i, t - 1);
        Group* g = nullptr;
        if (ss.absence && from == 1)
          g = &g12;
        else if (from == ss.last_en())
          g = &g_en;
        else if (from == ss.last_ob())
          g = &g33;
        else
          continue;  // corridor rows contribute log 1
        g->cells.push_back(i * data.T + t);
        g->nbr.push_back(neighbor_outbreak_sum(data, ss, st, i, t - 1));
        g->from.push_back(static_cast<std::uint8_t>(from));
        g->to.push_back(static_cast<std::uint8_t>(st.at(i, t)));
      }
    }
  }
};

struct Worker {
  const ModelSpec& spec;
  const PanelData& data;
  const PriorSpec& priors;
  const SamplerConfig& cfg;
  const ParamLayout& lay;
  const bool single_site;
  Rng rng;

  Params p;
  LatentStates st;
  EmissionCache emis;
  std::vector<AdaptState> ad;
  ChainGroups groups;
  // cached target components
  std::vector<double> emis_area;  // realized emission sums per area
  double total_emis = 0.0;
  double s12 = 0.0, s_en = 0.0, s33 = 0.0;  // chain-part component sums
  double lprior = 0.0;
  ChainDraws out;
  AreaFilter scratch;
  std::vector<double> pred_slice, ea_scratch;

  // correlated block proposals over groups whose scalar moves crawl along
  // posterior ridges (count intercept vs autoregression, gate intercept vs
  // spatial term); covariance learned over burn-in, frozen with the scalar
  // adaptation
  struct Block {
    std::vector<int> idx;   // layout coordinates
    int comp = -1;          // -1 emission part, else 0 g12 / 1 g_en / 2 g33
    bool constrained = false;
    AdaptState sc;          // extra step factor on top of 2.38 / sqrt(d)
    long n = 0;
    std::vector<double> mu, cacc;  // running mean, centered-product sums
    std::vector<double> fac;       // lower Cholesky of cov + ridge
    bool ready = false;
  };
  std::vector<Block> blocks;
  std::vector<double> bx_, bz_, bold_;  // block scratch

  Worker(const ModelSpec& sp, const PanelData& d, const PriorSpec& pr,
         const SamplerConfig& c, const ParamLayout& l, bool ss_mode, int chain_id)
      : spec(sp), data(d), priors(pr), cfg(c), lay(l), single_site(ss_mode),
        rng(c.seed, static_cast<std::uint64_t>(chain_id) + 1) {}

  // realized-state emission sum with the current count parameters; uses the
  // cached lgamma tables via a throwaway cache when r moved
  double realized_emis_sum(int area, std::vector<double>* per_area) {
    double lr_en = std::log(p.count.r_en), lr_ob = std::log(p.count.r_ob);
    rt_ensure();
    double tot = 0.0;
    const int lo = area < 0 ? 0 : area, hi = area < 0 ? data.N : area + 1;
    for (int i = lo; i < hi; ++i) {
      double s = 0.0;
      for (int t = 1; t < data.T; ++t) {
        const size_t cc = static_cast<size_t>(i) * data.T + t;
        const int cs = spec.ss.collapse(st.at(i, t));
        if (cs == ABSENCE) continue;  // log 1; absence with y>0 cannot occur here
        const long yv = data.y[cc];
        double lm, sp;
        if (cs == ENDEMIC) {
          lm = log_count_mean(spec, data, p.count, i, t, ENDEMIC);
          sp = log1pexp(lm - lr_en);
          s += rc_en_[ridx_[cc]] - p.count.r_en * sp + yv * (lm - sp);
        } else {
          lm = log_count_mean(spec, data, p.count, i, t, OUTBREAK);
          sp = log1pexp(lm - lr_ob);
          s += rc_ob_[ridx_[cc]] - p.count.r_ob * sp + yv * (lm - sp);
        }
      }
      if (per_area) (*per_area)[i] = s;
      tot += s;
    }
    return tot;
  }

  // chain-part component sums
  double sum_g12() const {
    const auto& g = groups.g12;
    const TransParams& tp = p.chain.t12;
    double s = 0.0;
    for (size_t n = 0; n < g.cells.size(); ++n) {
      const double* zz = data.z.data() +
                         static_cast<size_t>(g.cells[n]) * data.z_names.size();
      double e = tp.a0;
      for (int q : spec.z12) e += tp.coef[q] * zz[q];
      if (spec.couple12) e += tp.spat * g.nbr[n];
      s += g.to[n] == 1 ? -log1pexp(e) : -log1pexp(-e);
    }
    return s;
  }
  double sum_g_en() const {
    const auto& g = groups.g_en;
    const StateSpace& ss = spec.ss;
    double s = 0.0;
    for (size_t n = 0; n < g.cells.size(); ++n) {
      const double* zz = data.z.data() +
                         static_cast<size_t>(g.cells[n]) * data.z_names.size();
      if (ss.absence) {
        double e21 = p.chain.t21.a0, e23 = p.chain.t23.a0;
        for (int q : spec.z21) e21 += p.chain.t21.coef[q] * zz[q];
        for (int q : spec.z23) e23 += p.chain.t23.coef[q] * zz[q];
        if (spec.couple21) e21 += p.chain.t21.spat * g.nbr[n];
        if (spec.couple23) e23 += p.chain.t23.spat * g.nbr[n];
        double v[3] = {e21, 0.0, e23};
        double lse = logsumexp(v, 3);
        if (g.to[n] == 1)
          s += e21 - lse;
        else if (g.to[n] == ss.last_en())
          s += -lse;
        else
          s += e23 - lse;
      } else {
        double e23 = p.chain.t23.a0;
        for (int q : spec.z23) e23 += p.chain.t23.coef[q] * zz[q];
        if (spec.couple23) e23 += p.chain.t23.spat * g.nbr[n];
        s += g.to[n] == ss.last_en() ? -log1pexp(e23) : -log1pexp(-e23);
      }
    }
    return s;
  }
  double sum_g33() const {
    const auto& g = groups.g33;
    const TransParams& tp = p.chain.t33;
    double s = 0.0;
    for (size_t n = 0; n < g.cells.size(); ++n) {
      const double* zz = data.z.data() +
                         static_cast<size_t>(g.cells[n]) * data.z_names.size();
      double e = tp.a0;
      for (int q : spec.z33) e += tp.coef[q] * zz[q];
      if (spec.couple33) e += tp.spat * g.nbr[n];
      s += g.to[n] == spec.ss.last_ob() ? -log1pexp(-e) : -log1pexp(e);
    }
    return s;
  }

  void refresh_after_states() {
    groups.rebuild(spec, data, st);
    s12 = sum_g12();
    s_en = sum_g_en();
    s33 = sum_g33();
    emis_area.assign(data.N, 0.0);
    total_emis = 0.0;
    for (int i = 0; i < data.N; ++i) {
      double s = 0.0;
      for (int t = 1; t < data.T; ++t)
        s += emis.at_state(spec.ss, data, i, t, st.at(i, t));
      emis_area[i] = s;
      total_emis += s;
    }
  }

  void metropolis_sweep() {
    const int P = lay.P();
    for (int k = 0; k < P; ++k) {
      AdaptState& a = ad[k];
      const double x = lay.get(p, k);
      lay.set(p, k, x + a.sd() * rng.normal());
      const double lp2 =
          log_prior(spec, data, priors, p, lay.touches_constraint(spec, k));
      bool acc = false;
      if (lp2 > kNegInf) {
        double dlog = lp2 - lprior;
        int comp = -1;
        double new_comp = 0.0, new_area = 0.0;
        bool all_areas = false;
        if (lay.touches_emission(k)) {
          const int ia = lay.emission_area(k);
          if (ia >= 0) {
            new_area = realized_emis_sum(ia, nullptr);
            dlog += new_area - emis_area[ia];
          } else {
            all_areas = true;
            ea_scratch.assign(data.N, 0.0);
            double tot = realized_emis_sum(-1, &ea_scratch);
            dlog += tot - total_emis;
          }
        }
        if (lay.touches_chain(k)) {
          const int tr = lay.refs[k].trans;
          comp = tr == 0 ? 0 : (tr == 3 ? 2 : 1);
          new_comp = comp == 0 ? sum_g12() : (comp == 1 ? sum_g_en() : sum_g33());
          dlog += new_comp - (comp == 0 ? s12 : comp == 1 ? s_en : s33);
        }
        acc = dlog >= 0.0 || rng.unif() < std::exp(dlog);
        if (acc) {
          lprior = lp2;
          if (lay.touches_emission(k)) {
            const int ia = lay.emission_area(k);
            if (ia >= 0) {
              total_emis += new_area - emis_area[ia];
              emis_area[ia] = new_area;
            } else if (all_areas) {
              emis_area.swap(ea_scratch);
              total_emis = 0.0;
              for (double v : emis_area) total_emis += v;
            }
          }
          if (comp == 0) s12 = new_comp;
          else if (comp == 1) s_en = new_comp;
          else if (comp == 2) s33 = new_comp;
        }
      }
      if (!acc) lay.set(p, k, x);
      a.record(acc);
    }
  }

  void init_blocks() {
    blocks.clear();
    const int P = lay.P();
    Block em;
    Block gb[4];
    for (int g = 0; g < 4; ++g) gb[g].comp = g == 0 ? 0 : (g == 3 ? 2 : 1);
    for (int k = 0; k < P; ++k) {
      if (lay.touches_emission(k)) em.idx.push_back(k);
      else if (lay.touches_chain(k)) gb[lay.refs[k].trans].idx.push_back(k);
    }
    auto add = [&](Block& b) {
      const int d = static_cast<int>(b.idx.size());
      if (d < 2 || d > 25) return;  // nothing to correlate, or too big to learn
      for (int k : b.idx)
        b.constrained = b.constrained || lay.touches_constraint(spec, k);
      b.sc.interval = cfg.adapt_interval;
      b.sc.target = 0.234;
      b.sc.log_sd = 0.0;
      b.mu.assign(d, 0.0);
      b.cacc.assign(static_cast<size_t>(d) * d, 0.0);
      b.fac.assign(static_cast<size_t>(d) * d, 0.0);
      blocks.push_back(std::move(b));
    };
    add(em);
    for (int g = 0; g < 4; ++g) add(gb[g]);
  }

  void block_stats_update() {
    for (auto& b : blocks) {
      const int d = static_cast<int>(b.idx.size());
      bx_.resize(d);
      bz_.resize(d);
      for (int a = 0; a < d; ++a) bx_[a] = lay.get(p, b.idx[a]);
      b.n += 1;
      for (int a = 0; a < d; ++a) {
        bz_[a] = bx_[a] - b.mu[a];
        b.mu[a] += bz_[a] / static_cast<double>(b.n);
      }
      const double w = static_cast<double>(b.n - 1) / static_cast<double>(b.n);
      for (int a = 0; a < d; ++a) {
        double* row = b.cacc.data() + static_cast<size_t>(a) * d;
        const double wa = w * bz_[a];
        for (int c = 0; c < d; ++c) row[c] += wa * bz_[c];
      }
    }
  }

  void block_refresh(Block& b) {
    const int d = static_cast<int>(b.idx.size());
    if (b.n < std::max<long>(20, 5L * d)) return;
    std::vector<double> cov(b.cacc);
    for (double& v : cov) v /= static_cast<double>(b.n - 1);
    double maxd = 0.0;
    for (int a = 0; a < d; ++a)
      maxd = std::max(maxd, cov[static_cast<size_t>(a) * d + a]);
    double ridge = 1e-8 * maxd + 1e-12;
    for (int tries = 0; tries < 3; ++tries, ridge *= 100.0) {
      std::vector<double> L(cov);
      for (int a = 0; a < d; ++a) L[static_cast<size_t>(a) * d + a] += ridge;
      bool ok = true;
      for (int a = 0; a < d && ok; ++a) {
        for (int c = 0; c <= a; ++c) {
          double s = L[static_cast<size_t>(a) * d + c];
          for (int q = 0; q < c; ++q)
            s -= L[static_cast<size_t>(a) * d + q] * L[static_cast<size_t>(c) * d + q];
          if (c == a) {
            if (s <= 0.0) { ok = false; break; }
            L[static_cast<size_t>(a) * d + a] = std::sqrt(s);
          } else {
            L[static_cast<size_t>(a) * d + c] = s / L[static_cast<size_t>(c) * d + c];
          }
        }
      }
      if (ok) {
        for (int a = 0; a < d; ++a)
          for (int c = a + 1; c < d; ++c) L[static_cast<size_t>(a) * d + c] = 0.0;
        b.fac.swap(L);
        b.ready = true;
        return;
      }
    }
    b.ready = false;
  }

  void block_move(Block& b) {
    if (!b.ready) return;
    const int d = static_cast<int>(b.idx.size());
    bold_.resize(d);
    bz_.resize(d);
    for (int a = 0; a < d; ++a) {
      bold_[a] = lay.get(p, b.idx[a]);
      bz_[a] = rng.normal();
    }
    const double s = b.sc.sd() * 2.38 / std::sqrt(static_cast<double>(d));
    for (int a = 0; a < d; ++a) {
      double dv = 0.0;
      const double* row = b.fac.data() + static_cast<size_t>(a) * d;
      for (int c = 0; c <= a; ++c) dv += row[c] * bz_[c];
      lay.set(p, b.idx[a], bold_[a] + s * dv);
    }
    const double lp2 = log_prior(spec, data, priors, p, b.constrained);
    bool acc = false;
    if (lp2 > kNegInf) {
      double dlog = lp2 - lprior;
      double new_comp = 0.0, new_tot = 0.0;
      if (b.comp < 0) {
        ea_scratch.assign(data.N, 0.0);
        new_tot = realized_emis_sum(-1, &ea_scratch);
        dlog += new_tot - total_emis;
      } else {
        new_comp = b.comp == 0 ? sum_g12() : (b.comp == 1 ? sum_g_en() : sum_g33());
        dlog += new_comp - (b.comp == 0 ? s12 : b.comp == 1 ? s_en : s33);
      }
      acc = dlog >= 0.0 || rng.unif() < std::exp(dlog);
      if (acc) {
        lprior = lp2;
        if (b.comp < 0) {
          emis_area.swap(ea_scratch);
          total_emis = new_tot;
        } else if (b.comp == 0) {
          s12 = new_comp;
        } else if (b.comp == 1) {
          s_en = new_comp;
        } else {
          s33 = new_comp;
        }
      }
    }
    if (!acc)
      for (int a = 0; a < d; ++a) lay.set(p, b.idx[a], bold_[a]);
    b.sc.record(acc);
  }

  void run() {
    p = init_params(spec, data, priors, rng, cfg.max_init_tries);
    st = init_latent_chains(spec, data, cfg.init_stay, rng);
    emis.bind(data);
    rt_bind();
    emis.rebuild(spec, data, p.count);
    lprior = log_prior(spec, data, priors, p, true);
    refresh_after_states();

    const int P = lay.P();
    ad.assign(P, AdaptState{});
    for (auto& a : ad) {
      a.interval = cfg.adapt_interval;
      a.target = cfg.adapt_target;
      a.log_sd = std::log(0.5);
    }
    init_blocks();
    const long n_kept = cfg.n_kept();
    out.n_kept = n_kept;
    out.n_state_draws = cfg.n_state_draws();
    out.params.resize(static_cast<size_t>(n_kept) * P);
    out.states.resize(static_cast<size_t>(out.n_state_draws) * data.N * data.T);
    const bool track_pred = cfg.online_predictive && !single_site;
    if (track_pred) {
      out.pred.init(data.N, data.T);
      pred_slice.assign(static_cast<size_t>(data.N) * data.T, 0.0);
    }

    long stored_states = 0;
    for (long m = 1; m <= cfg.iters; ++m) {
      if (m == cfg.burnin + 1) {
        for (auto& a : ad) a.frozen = true;
        for (auto& b : blocks) {
          block_refresh(b);
          b.sc.frozen = true;
        }
      }
      metropolis_sweep();
      for (auto& b : blocks)
        for (int rep = 0; rep < (b.comp < 0 ? 3 : 2); ++rep) block_move(b);
      if (m <= cfg.burnin) {
        if (m > 50) block_stats_update();  // drop the rawest start-up drift
        if (m % 200 == 0)
          for (auto& b : blocks) block_refresh(b);
      }
      emis.rebuild(spec, data, p.count);
      const bool keep = m > cfg.burnin;
      const bool collect = keep && track_pred;
      for (int i = 0; i < data.N; ++i) {
        if (single_site) {
          single_site_sample_area(spec, data, p, emis, st, i, rng);
        } else {
          iffbs_sample_area(spec, data, p, emis, st, i, rng, false, scratch);
        }
      }
      refresh_after_states();
      if (collect) {
        // one-step-ahead densities must condition on the finished draw, not on
        // the half-updated paths seen mid-sweep, or they drift from what a
        // recomputation over the stored states yields
        for (int i = 0; i < data.N; ++i) {
          forward_filter_area(spec, data, p, emis, st, i, true, scratch);
          for (int t = 1; t < data.T; ++t)
            pred_slice[static_cast<size_t>(i) * data.T + t] = scratch.logpred[t];
        }
      }
      if (!keep) continue;
      const long kidx = m - cfg.burnin - 1;
      double* row = out.params.data() + static_cast<size_t>(kidx) * P;
      for (int k = 0; k < P; ++k) row[k] = lay.get(p, k);
      if (kidx % cfg.thin_states == 0) {
        std::copy(st.s.begin(), st.s.end(),
                  out.states.begin() +
                      static_cast<size_t>(stored_states) * data.N * data.T);
        ++stored_states;
      }
      if (collect) out.pred.add_draw(pred_slice.data());
    }
    if (stored_states != out.n_state_draws)
      fail("numeric", "state thinning bookkeeping is inconsistent");
    out.accept_rate.resize(P);
    out.prop_sd.resize(P);
    for (int k = 0; k < P; ++k) {
      out.accept_rate[k] =
          ad[k].total_tries ? static_cast<double>(ad[k].total_accepts) / ad[k].total_tries : 0.0;
      out.prop_sd[k] = ad[k].sd();
    }
    out.final_loglik = joint_loglik(spec, data, p, st);
  }

 private:
  // lgamma tables for the realized-sum fast path, keyed on the current r
  std::vector<int> ridx_;
  std::vector<long> ruy_;
  std::vector<double> rc_en_, rc_ob_;
  double rr_en_ = -1, rr_ob_ = -1;

  void rt_bind() {
    std::vector<long> sorted(data.y);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    ruy_ = std::move(sorted);
    const size_t cells = data.y.size();
    ridx_.resize(cells);
    for (size_t c = 0; c < cells; ++c)
      ridx_[c] = static_cast<int>(
          std::lower_bound(ruy_.begin(), ruy_.end(), data.y[c]) - ruy_.begin());
    rc_en_.assign(ruy_.size(), 0.0);
    rc_ob_.assign(ruy_.size(), 0.0);
    rr_en_ = rr_ob_ = -1;
  }
  void rt_ensure() {
    if (p.count.r_en != rr_en_) {
      fill_ctab(ruy_, p.count.r_en, rc_en_);
      rr_en_ = p.count.r_en;
    }
    if (p.count.r_ob != rr_ob_) {
      fill_ctab(ruy_, p.count.r_ob, rc_ob_);
      rr_ob_ = p.count.r_ob;
    }
  }
};

}  // namespace

void SamplerConfig::validate() const {
  if (iters <= 0 || burnin < 0 || burnin >= iters)
    fail("config", "need 0 <= burnin < iterations");
  if (chains < 1) fail("config", "need at least one chain");
  if (thin_states < 1) fail("config", "state thinning must be >= 1");
  if (adapt_interval < 1) fail("config", "adaptation interval must be >= 1");
  if (!(adapt_target > 0.0 && adapt_target < 1.0))
    fail("config", "adaptation target must lie in (0, 1)");
  if (!(init_stay > 0.0 && init_stay < 1.0))
    fail("config", "initialization stay probability must lie in (0, 1)");
}

PosteriorDraws gibbs_run(const ModelSpec& spec, const PanelData& data,
                         const PriorSpec& priors, const SamplerConfig& cfg,
                         bool single_site) {
  cfg.validate();
  PanelData local;
  const PanelData* d = &data;
  if (data.init_dist.empty() || data.rev_nbrs.size() != static_cast<size_t>(data.N)) {
    local = data;
    if (local.init_dist.empty()) local.set_uniform_init(spec.ss.K());
    local.build_rev_nbrs();
    d = &local;
  }
  d->validate(spec);

  const ParamLayout lay = ParamLayout::build(spec, d->N, d->x_names, d->z_names);
  PosteriorDraws out;
  out.names = lay.names;
  out.spec = spec;
  out.cfg = cfg;
  out.area_ids = d->area_ids;
  out.weeks = d->weeks;
  out.x_names = d->x_names;
  out.z_names = d->z_names;

  std::vector<std::unique_ptr<Worker>> workers;
  for (int c = 0; c < cfg.chains; ++c)
    workers.push_back(std::make_unique<Worker>(spec, *d, priors, cfg, lay,
                                               single_site, c));
  unsigned hw = std::thread::hardware_concurrency();
  int n_threads = cfg.threads > 0
                      ? cfg.threads
                      : std::max(1, std::min<int>(cfg.chains, hw ? hw : 1));
  if (n_threads <= 1) {
    for (auto& w : workers) w->run();
  } else {
    std::vector<std::thread> pool;
    for (int tid = 0; tid < n_threads; ++tid)
      pool.emplace_back([&, tid] {
        for (size_t c = tid; c < workers.size(); c += n_threads)
          workers[c]->run();
      });
    for (auto& th : pool) th.join();
  }
  for (auto& w : workers) out.chains.push_back(std::move(w->out));
  return out;
}

}  // namespace cmsnb
