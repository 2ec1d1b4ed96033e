#include "cmsnb/model.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace cmsnb {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string cell(int i, int t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "(area %d, week index %d)", i, t);
  return buf;
}
}  // namespace

double log1pexp(double x) {
  if (x > 33.0) return x;  // 1 is lost to rounding past here
  if (x < -37.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double logsumexp(const double* v, int n) {
  double m = kNegInf;
  for (int k = 0; k < n; ++k)
    if (v[k] > m) m = v[k];
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += std::exp(v[k] - m);
  return m + std::log(s);
}

double nb_logpmf(long y, double mean, double r) {
  if (!(mean > 0.0)) fail("domain", "nb_logpmf needs mean > 0");
  return nb_logpmf_logmean(y, std::log(mean), r);
}

double nb_log_coeff(long y, double r) {
  if (y < 0) fail("domain", "nb_logpmf needs y >= 0");
  if (!(r > 0.0)) fail("domain", "nb_logpmf needs overdispersion r > 0");
  // lgamma(y+r) - lgamma(r) - y log r; the log1p sum keeps full precision in
  // the near-Poisson regime (huge r), where the lgamma difference cancels
  double d = 0.0;
  if (y <= 256) {
    for (long k = 1; k < y; ++k) d += std::log1p(static_cast<double>(k) / r);
  } else {
    d = std::lgamma(y + r) - std::lgamma(r) - y * std::log(r);
  }
  return d - std::lgamma(static_cast<double>(y) + 1.0);
}

double nb_logpmf_logmean(long y, double log_mean, double r) {
  // r*(log r - log(r+lam)) + y*(log lam - log(r+lam)) with
  // log(r+lam) = log r + log1pexp(log lam - log r); never forms lam itself
  double c = nb_log_coeff(y, r);
  double u = log_mean - std::log(r);
  double t = log1pexp(u);
  return c - r * t + y * (log_mean - t);
}

double log_count_mean(const ModelSpec& spec, const PanelData& data,
                      const CountParams& p, int i, int t, int cs) {
  const double* x = data.x_at(i, t);
  double eta;
  if (cs == ENDEMIC) {
    eta = p.intercept_en(i);
    for (int q : spec.x_en) eta += p.beta_en[q] * x[q];
    eta += p.rho_en * std::log1p(static_cast<double>(data.count(i, t - 1)));
  } else {
    eta = p.intercept_ob(i);
    for (int q : spec.x_ob) eta += p.beta_ob[q] * x[q];
    eta += p.rho_ob * std::log1p(static_cast<double>(data.count(i, t - 1)));
  }
  return eta;
}

double emission_logdensity(const ModelSpec& spec, const PanelData& data,
                           const CountParams& p, int i, int t, int s) {
  if (t < 1) fail("domain", "emissions start at the second week; got " + cell(i, t));
  int cs = spec.ss.collapse(s);
  long yv = data.count(i, t);
  if (cs == ABSENCE) return yv == 0 ? 0.0 : kNegInf;
  double r = cs == ENDEMIC ? p.r_en : p.r_ob;
  return nb_logpmf_logmean(yv, log_count_mean(spec, data, p, i, t, cs), r);
}

double neighbor_outbreak_sum(const PanelData& data, const StateSpace& ss,
                             const LatentStates& states, int i, int t) {
  double s = 0.0;
  for (const auto& e : data.in_nbrs[i])
    if (ss.collapse(states.at(e.j, t)) == OUTBREAK) s += e.w;
  return s;
}

TransScores transition_scores(const ModelSpec& spec, const ChainParams& c,
                              const double* z_it, double nbr) {
  TransScores sc;
  sc.e12 = c.t12.a0;
  for (int q : spec.z12) sc.e12 += c.t12.coef[q] * z_it[q];
  sc.e21 = c.t21.a0;
  for (int q : spec.z21) sc.e21 += c.t21.coef[q] * z_it[q];
  sc.e23 = c.t23.a0;
  for (int q : spec.z23) sc.e23 += c.t23.coef[q] * z_it[q];
  sc.e33 = c.t33.a0;
  for (int q : spec.z33) sc.e33 += c.t33.coef[q] * z_it[q];
  if (spec.couple12) sc.e12 += c.t12.spat * nbr;
  if (spec.couple21) sc.e21 += c.t21.spat * nbr;
  if (spec.couple23) sc.e23 += c.t23.spat * nbr;
  if (spec.couple33) sc.e33 += c.t33.spat * nbr;
  return sc;
}

void accumulate_transition(const ModelSpec& spec, const TransScores& sc,
                           int from_state, double w, double* pred) {
  if (w == 0.0) return;
  const StateSpace& ss = spec.ss;
  if (ss.absence && from_state == 1) {
    pred[0] += w * std::exp(-log1pexp(sc.e12));        // stay absent
    pred[ss.first_en() - 1] += w * std::exp(-log1pexp(-sc.e12));
  } else if (from_state < ss.last_en()) {
    pred[from_state] += w;                             // endemic corridor
  } else if (from_state == ss.last_en()) {
    if (ss.absence) {
      double v[3] = {sc.e21, 0.0, sc.e23};             // leave, stay, outbreak
      double lse = logsumexp(v, 3);
      pred[0] += w * std::exp(sc.e21 - lse);
      pred[ss.last_en() - 1] += w * std::exp(-lse);
      pred[ss.first_ob() - 1] += w * std::exp(sc.e23 - lse);
    } else {
      pred[ss.last_en() - 1] += w * std::exp(-log1pexp(sc.e23));
      pred[ss.first_ob() - 1] += w * std::exp(-log1pexp(-sc.e23));
    }
  } else if (from_state < ss.last_ob()) {
    pred[from_state] += w;                             // outbreak corridor
  } else {
    pred[ss.K() - 1] += w * std::exp(-log1pexp(-sc.e33));  // stay in outbreak
    pred[ss.first_en() - 1] += w * std::exp(-log1pexp(sc.e33));
  }
}

void transition_row(const ModelSpec& spec, const TransScores& sc,
                    int from_state, double* out) {
  const int K = spec.ss.K();
  if (from_state < 1 || from_state > K) fail("domain", "transition_row: state out of range");
  for (int k = 0; k < K; ++k) out[k] = 0.0;
  accumulate_transition(spec, sc, from_state, 1.0, out);
}

double transition_logprob(const ModelSpec& spec, const TransScores& sc,
                          int from_state, int to_state) {
  const StateSpace& ss = spec.ss;
  if (ss.absence && from_state == 1) {
    if (to_state == 1) return -log1pexp(sc.e12);
    if (to_state == ss.first_en()) return -log1pexp(-sc.e12);
    return kNegInf;
  }
  if (from_state < ss.last_en())
    return to_state == from_state + 1 ? 0.0 : kNegInf;
  if (from_state == ss.last_en()) {
    if (ss.absence) {
      double v[3] = {sc.e21, 0.0, sc.e23};
      double lse = logsumexp(v, 3);
      if (to_state == 1) return sc.e21 - lse;
      if (to_state == ss.last_en()) return -lse;
      if (to_state == ss.first_ob()) return sc.e23 - lse;
      return kNegInf;
    }
    if (to_state == ss.last_en()) return -log1pexp(sc.e23);
    if (to_state == ss.first_ob()) return -log1pexp(-sc.e23);
    return kNegInf;
  }
  if (from_state < ss.last_ob())
    return to_state == from_state + 1 ? 0.0 : kNegInf;
  if (to_state == ss.last_ob()) return -log1pexp(-sc.e33);
  if (to_state == ss.first_en()) return -log1pexp(sc.e33);
  return kNegInf;
}

double initial_log_mass(const ModelSpec& spec, const PanelData& data,
                        int i, int s) {
  const int K = spec.ss.K();
  double base = data.init_dist[static_cast<size_t>(i) * K + (s - 1)];
  if (spec.ss.absence && data.count(i, 0) > 0) {
    // positive first count rules the absence state out a priori
    if (spec.ss.collapse(s) == ABSENCE) return kNegInf;
    double denom = 1.0 - data.init_dist[static_cast<size_t>(i) * K];
    if (!(denom > 0.0))
      fail("numeric", "initial distribution puts all mass on absence but area " +
                          data.area_ids[i] + " starts with a positive count");
    return std::log(base) - std::log(denom);
  }
  return std::log(base);
}

bool constraints_satisfied(const ModelSpec& spec, const PanelData& data,
                           const CountParams& p) {
  if (!(p.rho_en + spec.eps_rho < p.rho_ob)) return false;
  if (spec.weak_constraints) {
    double en = spec.random_intercepts ? p.b0_mean_en : p.b0_en[0];
    double ob = spec.random_intercepts ? p.b0_mean_ob : p.b0_ob[0];
    return en + spec.eps_weak < ob;
  }
  const size_t P = data.x_names.size();
  std::vector<double> d(P);
  for (size_t q = 0; q < P; ++q) d[q] = p.beta_ob[q] - p.beta_en[q];
  for (int i = 0; i < data.N; ++i) {
    double d0 = p.intercept_ob(i) - p.intercept_en(i);
    for (int t = 1; t < data.T; ++t) {
      const double* x = data.x_at(i, t);
      double gap = d0;
      for (size_t q = 0; q < P; ++q) gap += d[q] * x[q];
      if (!(gap > spec.eps_rate)) return false;
    }
  }
  return true;
}

double joint_loglik(const ModelSpec& spec, const PanelData& data,
                    const Params& p, const LatentStates& states) {
  const StateSpace& ss = spec.ss;
  double ll = 0.0;
  for (int i = 0; i < data.N; ++i) {
    int s1 = states.at(i, 0);
    if (!ss.valid_state(s1)) fail("domain", "latent state out of range at " + cell(i, 0));
    double l0 = initial_log_mass(spec, data, i, s1);
    if (l0 == kNegInf) return kNegInf;
    ll += l0;
    for (int t = 1; t < data.T; ++t) {
      int s = states.at(i, t);
      if (!ss.valid_state(s)) fail("domain", "latent state out of range at " + cell(i, t));
      double le = emission_logdensity(spec, data, p.count, i, t, s);
      if (le == kNegInf) return kNegInf;
      double nbr = neighbor_outbreak_sum(data, ss, states, i, t - 1);
      TransScores sc = transition_scores(spec, p.chain, data.z_at(i, t), nbr);
      double lt = transition_logprob(spec, sc, states.at(i, t - 1), s);
      if (lt == kNegInf) return kNegInf;
      ll += le + lt;
    }
  }
  return ll;
}

void PanelData::set_collapsed_uniform_init(const StateSpace& ss) {
  const int K = ss.K();
  init_dist.assign(static_cast<size_t>(N) * K, 0.0);
  int blocks = ss.absence ? 3 : 2;
  for (int i = 0; i < N; ++i) {
    double* row = init_dist.data() + static_cast<size_t>(i) * K;
    if (ss.absence) row[0] = 1.0 / blocks;
    for (int s = ss.first_en(); s <= ss.last_en(); ++s)
      row[s - 1] = 1.0 / (blocks * ss.m_en);
    for (int s = ss.first_ob(); s <= ss.last_ob(); ++s)
      row[s - 1] = 1.0 / (blocks * ss.m_ob);
  }
}

void PanelData::build_rev_nbrs() {
  rev_nbrs.assign(N, {});
  for (int i = 0; i < N; ++i)
    for (const auto& e : in_nbrs[i]) rev_nbrs[e.j].push_back({i, e.w});
}

PanelData PanelData::slice_weeks(int n_weeks) const {
  if (n_weeks < 1 || n_weeks > T) fail("domain", "week slice out of range");
  PanelData out = *this;
  out.T = n_weeks;
  out.weeks.assign(weeks.begin(), weeks.begin() + n_weeks);
  out.y.resize(static_cast<size_t>(N) * n_weeks);
  out.x.resize(static_cast<size_t>(N) * n_weeks * x_names.size());
  out.z.resize(static_cast<size_t>(N) * n_weeks * z_names.size());
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < n_weeks; ++t) {
      out.y[static_cast<size_t>(i) * n_weeks + t] = y[static_cast<size_t>(i) * T + t];
      for (size_t q = 0; q < x_names.size(); ++q)
        out.x[(static_cast<size_t>(i) * n_weeks + t) * x_names.size() + q] =
            x[(static_cast<size_t>(i) * T + t) * x_names.size() + q];
      for (size_t q = 0; q < z_names.size(); ++q)
        out.z[(static_cast<size_t>(i) * n_weeks + t) * z_names.size() + q] =
            z[(static_cast<size_t>(i) * T + t) * z_names.size() + q];
    }
  }
  return out;
}

void PanelData::validate(const ModelSpec& spec) const {
  spec.ss.validate();
  const int K = spec.ss.K();
  if (N <= 0 || T < 2) fail("domain", "panel needs at least one area and two weeks");
  if (y.size() != static_cast<size_t>(N) * T) fail("domain", "count matrix size mismatch");
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t)
      if (count(i, t) < 0)
        fail("domain", "negative count at " + cell(i, t));
  if (x.size() != static_cast<size_t>(N) * T * x_names.size() ||
      z.size() != static_cast<size_t>(N) * T * z_names.size())
    fail("domain", "covariate matrix size mismatch");
  if (init_dist.size() != static_cast<size_t>(N) * K)
    fail("domain", "initial state distribution has the wrong shape");
  for (int i = 0; i < N; ++i) {
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      double v = init_dist[static_cast<size_t>(i) * K + k];
      if (v < 0.0) fail("domain", "negative initial state mass for area " + area_ids[i]);
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-8)
      fail("domain", "initial state distribution for area " + area_ids[i] +
                         " does not sum to one");
  }
  if (in_nbrs.size() != static_cast<size_t>(N) || rev_nbrs.size() != static_cast<size_t>(N))
    fail("domain", "neighbour lists have the wrong shape");
  for (int i = 0; i < N; ++i)
    for (const auto& e : in_nbrs[i])
      if (e.j < 0 || e.j >= N || e.j == i || !(e.w > 0.0))
        fail("domain", "bad neighbour entry for area " + area_ids[i]);
  auto check_subset = [&](const std::vector<int>& sub, size_t dim, const char* what) {
    for (int q : sub)
      if (q < 0 || static_cast<size_t>(q) >= dim)
        fail("config", std::string("covariate subset out of range for ") + what);
  };
  check_subset(spec.x_en, x_names.size(), "the endemic count mean");
  check_subset(spec.x_ob, x_names.size(), "the outbreak count mean");
  check_subset(spec.z12, z_names.size(), "absence exit");
  check_subset(spec.z21, z_names.size(), "endemic-to-absence");
  check_subset(spec.z23, z_names.size(), "outbreak emergence");
  check_subset(spec.z33, z_names.size(), "outbreak persistence");
}

void shape_params(const ModelSpec& spec, const PanelData& data, Params& p) {
  size_t nb0 = spec.random_intercepts ? static_cast<size_t>(data.N) : 1;
  p.count.b0_en.resize(nb0, 0.0);
  p.count.b0_ob.resize(nb0, 0.0);
  p.count.beta_en.assign(data.x_names.size(), 0.0);
  p.count.beta_ob.assign(data.x_names.size(), 0.0);
  for (TransParams* tp : {&p.chain.t12, &p.chain.t21, &p.chain.t23, &p.chain.t33})
    tp->coef.assign(data.z_names.size(), 0.0);
}

}  // namespace cmsnb
