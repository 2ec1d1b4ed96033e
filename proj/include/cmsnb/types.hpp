#pragma once
// Core types for the coupled Markov-switching negative binomial count model:
// an expanded latent state space (absence + duration-enforcing clone states),
// area/week panel data with a directed neighbourhood structure, and the
// parameter blocks of the count and chain parts.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cmsnb {

// Error carrying a coarse category ("io", "parse", "config", "domain",
// "numeric") so the CLI can report machine-readable failures.
struct Error : std::runtime_error {
  std::string category;
  Error(std::string cat, const std::string& msg)
      : std::runtime_error(msg), category(std::move(cat)) {}
};

[[noreturn]] inline void fail(const char* cat, const std::string& msg) {
  throw Error(cat, msg);
}

// Collapsed epidemiological states.
enum : int { ABSENCE = 1, ENDEMIC = 2, OUTBREAK = 3 };

// Expanded state space, 1-based: state 1 is absence (when present), the next
// m_en states are endemic clones, the last m_ob states outbreak clones.  Only
// the last clone of each block may leave the block, so a visit lasts at least
// m_en (resp. m_ob) weeks.  The variant without an absence state has no
// corridors: one endemic and one outbreak state.
struct StateSpace {
  bool absence = true;
  int m_en = 2;
  int m_ob = 4;

  int K() const { return (absence ? 1 : 0) + m_en + m_ob; }
  int first_en() const { return absence ? 2 : 1; }
  int last_en() const { return first_en() + m_en - 1; }  // free endemic state
  int first_ob() const { return last_en() + 1; }
  int last_ob() const { return first_ob() + m_ob - 1; }  // free outbreak state

  int collapse(int s) const {
    if (absence && s == 1) return ABSENCE;
    return s <= last_en() ? ENDEMIC : OUTBREAK;
  }
  bool valid_state(int s) const { return s >= 1 && s <= K(); }

  void validate() const {
    if (m_en < 1 || m_ob < 1)
      fail("config", "state space needs at least one endemic and one outbreak state");
    if (!absence && (m_en != 1 || m_ob != 1))
      fail("config", "the no-absence variant is the plain two-state model (m_en = m_ob = 1)");
  }
};

// Which covariates enter each linear predictor, and which couplings exist.
// Covariate subsets are index lists into PanelData::x_names / z_names;
// coefficients outside a subset are pinned at zero and not sampled.
struct ModelSpec {
  StateSpace ss;
  bool random_intercepts = true;  // per-area count intercepts with a shared
                                  // Normal(mean, sigma^2) layer
  bool share_r = false;           // one overdispersion for both count states
  std::vector<int> x_en, x_ob;    // emission covariates per block
  std::vector<int> z12, z21, z23, z33;  // transition covariates per regression
  bool couple12 = false, couple21 = false, couple23 = false, couple33 = false;

  // mean/autoregressive ordering margins between the endemic and outbreak
  // blocks; weak mode orders only the intercept level
  double eps_rate = 0.01;
  double eps_rho = 0.05;
  bool weak_constraints = false;
  double eps_weak = 0.10;

  bool coupled() const { return couple12 || couple21 || couple23 || couple33; }
};

// Rectangular area/week panel.  Internal indices are 0-based; `area_ids` and
// `weeks` keep the external labels.  Covariates are stored per cell even when
// constant over weeks.
struct PanelData {
  int N = 0;
  int T = 0;
  std::vector<std::string> area_ids;
  std::vector<int> weeks;  // consecutive week labels, weeks[t]
  std::vector<long> y;     // counts, y[i*T + t]

  std::vector<std::string> x_names, z_names;
  std::vector<double> x;  // x[(i*T + t)*x_names.size() + q]
  std::vector<double> z;

  struct Edge {
    int j;     // other area index
    double w;  // influence weight
  };
  // in_nbrs[i]: areas j in NE(i) with weights w_ji (j influences i);
  // rev_nbrs[j]: areas i with j in NE(i), mirrored weights.
  std::vector<std::vector<Edge>> in_nbrs, rev_nbrs;

  // initial distribution over expanded states, init_dist[i*K + (s-1)];
  // set_uniform_init fills the default (uniform over all K expanded states)
  std::vector<double> init_dist;

  long count(int i, int t) const { return y[static_cast<size_t>(i) * T + t]; }
  const double* x_at(int i, int t) const {
    return x.data() + (static_cast<size_t>(i) * T + t) * x_names.size();
  }
  const double* z_at(int i, int t) const {
    return z.data() + (static_cast<size_t>(i) * T + t) * z_names.size();
  }

  void set_uniform_init(int K) {
    init_dist.assign(static_cast<size_t>(N) * K, 1.0 / K);
  }
  // copy restricted to the first n_weeks weeks (neighbours and init kept)
  PanelData slice_weeks(int n_weeks) const;
  // uniform over the three collapsed states, split evenly inside each block
  void set_collapsed_uniform_init(const StateSpace& ss);

  void build_rev_nbrs();  // rebuild rev_nbrs from in_nbrs
  void validate(const ModelSpec& spec) const;
};

// Latent expanded states for every (area, week) cell, values in 1..K.
struct LatentStates {
  int N = 0, T = 0;
  std::vector<std::uint8_t> s;  // s[i*T + t]

  LatentStates() = default;
  LatentStates(int n, int t) : N(n), T(t), s(static_cast<size_t>(n) * t, 1) {}
  int at(int i, int t) const { return s[static_cast<size_t>(i) * T + t]; }
  void set(int i, int t, int v) {
    s[static_cast<size_t>(i) * T + t] = static_cast<std::uint8_t>(v);
  }
};

// Count-part parameters.  Intercept vectors hold one entry per area in
// random-intercept mode, a single shared entry otherwise; beta vectors span
// all of x_names with pinned entries at zero.
struct CountParams {
  std::vector<double> b0_en, b0_ob;
  double b0_mean_en = 0, b0_mean_ob = 0;  // random-intercept layer
  double sigma_en = 1, sigma_ob = 1;
  std::vector<double> beta_en, beta_ob;
  double rho_en = 0, rho_ob = 0;
  double r_en = 1, r_ob = 1;

  double intercept_en(int i) const { return b0_en.size() == 1 ? b0_en[0] : b0_en[i]; }
  double intercept_ob(int i) const { return b0_ob.size() == 1 ? b0_ob[0] : b0_ob[i]; }
};

// One transition regression: intercept, covariate effects (full z dimension,
// pinned entries zero) and the spatial coupling (zero when uncoupled).
struct TransParams {
  double a0 = 0;
  std::vector<double> coef;
  double spat = 0;
};

// Chain-part parameters; t12/t21 are ignored by the no-absence variant.
struct ChainParams {
  TransParams t12, t21, t23, t33;
};

struct Params {
  CountParams count;
  ChainParams chain;
};

// Sizes parameter vectors to match a spec/panel pair: coefficient blocks are
// zero-filled, intercept vectors resized (existing leading entries kept).
void shape_params(const ModelSpec& spec, const PanelData& data, Params& p);

}  // namespace cmsnb
