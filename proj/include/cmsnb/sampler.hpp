#pragma once
// Posterior sampler: scalar adaptive random-walk Metropolis over the
// parameters interleaved with a per-area blocked update of the latent state
// paths.  The per-area update filters forward conditional on every other
// area's current path (their next-week transitions enter as a two-valued
// likelihood ratio) and samples backward; areas nobody listens to reduce to
// the plain forward-backward pass.

#include <functional>

#include "cmsnb/draws.hpp"
#include "cmsnb/model.hpp"
#include "cmsnb/priors.hpp"
#include "cmsnb/rng.hpp"
#include "cmsnb/types.hpp"

namespace cmsnb {

// ---- scalar adaptive random-walk Metropolis -------------------------------

// Proposal-scale adaptation: every `interval` tries the log sd moves toward
// the target acceptance rate with a step that decays as batch^-1/2; frozen
// once burn-in ends so the kept draws come from a fixed kernel.
struct AdaptState {
  double log_sd = 0.0;
  double target = 0.44;
  int interval = 50;
  bool frozen = false;
  long tries = 0, accepts = 0, batches = 0;
  long total_tries = 0, total_accepts = 0;

  double sd() const;
  void record(bool accepted);
};

// One Metropolis step on a scalar coordinate; returns the new value and
// updates the adaptation state.
double adaptive_rwm_step(const std::function<double(double)>& target_logpdf,
                         double x, AdaptState& st, Rng& rng);

// ---- flat view of the sampled parameters -----------------------------------

// Maps flat coordinate indices onto Params fields, in update order: count
// intercepts (and their hyper layer), count effects, rho, overdispersion,
// then the four transition regressions.  Pinned coordinates (masked
// covariates, uncoupled spatial terms) are not listed.
struct ParamRef {
  enum What {
    B0_EN, B0_OB, B0_MEAN_EN, B0_MEAN_OB, SIGMA_EN, SIGMA_OB,
    BETA_EN, BETA_OB, RHO_EN, RHO_OB, R_EN, R_OB, A0, COEF, SPAT
  } what;
  int idx = -1;    // area index (intercepts) or covariate index
  int trans = -1;  // 0..3 for the 12/21/23/33 regressions
};

struct ParamLayout {
  std::vector<ParamRef> refs;
  std::vector<std::string> names;
  bool share_r = false;

  static ParamLayout build(const ModelSpec& spec, int N,
                           const std::vector<std::string>& x_names,
                           const std::vector<std::string>& z_names);
  int P() const { return static_cast<int>(refs.size()); }
  double get(const Params& p, int k) const;
  void set(Params& p, int k, double v) const;  // mirrors a shared r
  bool touches_emission(int k) const;
  bool touches_chain(int k) const;
  bool touches_constraint(const ModelSpec& spec, int k) const;
  int emission_area(int k) const;  // area whose emission sum moves; -1 = all
  // prior of coordinate k under a PriorSpec
  Dist prior(const ModelSpec& spec, const PriorSpec& ps, int k) const;
};

// ---- latent-state machinery -------------------------------------------------

// Per-cell emission log densities for the two count blocks, rebuilt whenever
// count parameters move; lgamma terms are cached per distinct count.
struct EmissionCache {
  int N = 0, T = 0;
  std::vector<double> en, ob;  // t = 0 slots unused

  void bind(const PanelData& data);
  void rebuild(const ModelSpec& spec, const PanelData& data, const CountParams& p);
  double at_state(const StateSpace& ss, const PanelData& data, int i, int t, int s) const;

 private:
  std::vector<int> yidx_;
  std::vector<long> uy_;
  std::vector<double> c_en_, c_ob_;
  double r_en_ = -1, r_ob_ = -1;
};

struct AreaFilter {
  int T = 0, K = 0;
  std::vector<double> filt;      // T*K filtered probabilities, rows normalized
  std::vector<TransScores> sc;   // arrival scores per week (valid t >= 1)
  std::vector<double> logpred;   // log p(y_it | neighbours through t, own
                                 // counts through t-1); t >= 1, else 0
};

// forward pass for area i given the other areas' current paths
void forward_filter_area(const ModelSpec& spec, const PanelData& data,
                         const Params& p, const EmissionCache& emis,
                         const LatentStates& states, int i, bool want_pred,
                         AreaFilter& out);

// blocked draw of area i's path (filter + backward sampling), in place
void iffbs_sample_area(const ModelSpec& spec, const PanelData& data,
                       const Params& p, const EmissionCache& emis,
                       LatentStates& states, int i, Rng& rng, bool want_pred,
                       AreaFilter& scratch);

// one-at-a-time full-conditional sweep over area i's path; reference sampler
// used to cross-check the blocked update
void single_site_sample_area(const ModelSpec& spec, const PanelData& data,
                             const Params& p, const EmissionCache& emis,
                             LatentStates& states, int i, Rng& rng);

// ---- initialization ---------------------------------------------------------

// state paths started from a no-absence chain that keeps each block with
// probability `stay` and walks the corridors otherwise
LatentStates init_latent_chains(const ModelSpec& spec, const PanelData& data,
                                double stay, Rng& rng);

// parameters drawn from their priors, redrawn until the ordering constraints
// hold (swapping the count blocks when that fixes the ordering); heavy-tailed
// draws outside |x| <= 25 are redrawn for numeric sanity
Params init_params(const ModelSpec& spec, const PanelData& data,
                   const PriorSpec& priors, Rng& rng, long max_tries);

// ---- the full Gibbs run -----------------------------------------------------

// Runs `cfg.chains` independent chains (threaded) and collects draws.  Uses
// the blocked area update; per-cell predictive densities are accumulated
// online after burn-in when cfg.online_predictive is set.
PosteriorDraws gibbs_run(const ModelSpec& spec, const PanelData& data,
                         const PriorSpec& priors, const SamplerConfig& cfg,
                         bool single_site = false);

}  // namespace cmsnb
