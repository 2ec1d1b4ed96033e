#pragma once
// Model core: negative binomial emissions, transition rows over the expanded
// state space, ordering constraints between the endemic and outbreak blocks,
// and the joint log-likelihood of counts and latent states.

#include <vector>

#include "cmsnb/types.hpp"

namespace cmsnb {

// log P(y) for the negative binomial with mean `mean` > 0 and overdispersion
// r > 0 (variance mean * (1 + mean/r)).
double nb_logpmf(long y, double mean, double r);

// same pmf evaluated from log(mean); stable for extreme linear predictors
double nb_logpmf_logmean(long y, double log_mean, double r);

// count-only coefficient lgamma(y+r) - lgamma(r) - y log r - lgamma(y+1);
// the emission caches share it with nb_logpmf_logmean so every evaluation
// route agrees bit for bit
double nb_log_coeff(long y, double r);

// log of the count mean at (i, t): intercept + x'beta + rho*log(y_prev + 1)
// for the collapsed block `cs` (ENDEMIC or OUTBREAK); t >= 1 (0-based).
double log_count_mean(const ModelSpec& spec, const PanelData& data,
                      const CountParams& p, int i, int t, int cs);

// log p(y_it | S_it = s, y_{i,t-1}); absence is a point mass at zero.
// t >= 1 (0-based): week-1 counts are conditioned on, not modelled.
double emission_logdensity(const ModelSpec& spec, const PanelData& data,
                           const CountParams& p, int i, int t, int s);

// weighted number of neighbours of `i` in the outbreak block at week t
double neighbor_outbreak_sum(const PanelData& data, const StateSpace& ss,
                             const LatentStates& states, int i, int t);

// Linear scores of the four transition regressions at one cell.  z_it is the
// cell's transition covariate row; nbr is the weighted outbreak neighbour sum
// entering every coupled regression.
struct TransScores {
  double e12 = 0, e21 = 0, e23 = 0, e33 = 0;
};
TransScores transition_scores(const ModelSpec& spec, const ChainParams& c,
                              const double* z_it, double nbr);

// transition probability row from `from_state` (out[k] = P(to state k+1));
// corridor rows are unit vectors
void transition_row(const ModelSpec& spec, const TransScores& sc,
                    int from_state, double* out);

// log P(from -> to) evaluated without forming the full row; exact -inf on
// structurally impossible moves, stable for extreme scores
double transition_logprob(const ModelSpec& spec, const TransScores& sc,
                          int from_state, int to_state);

// pred[k] += w * P(from -> k+1); touches only the structurally nonzero
// entries, so corridor rows cost one add.  Zero weights are skipped.  Both
// forward recursions (blocked filter and plain marginal) run on this helper,
// which keeps their arithmetic identical.
void accumulate_transition(const ModelSpec& spec, const TransScores& sc,
                           int from_state, double w, double* pred);

// initial mass log p(S*_i1 = s | y_i1): the configured initial distribution
// with absence masked out (and the rest renormalized) when y_i1 > 0.
// Errors when masking removes all mass.
double initial_log_mass(const ModelSpec& spec, const PanelData& data,
                        int i, int s);

// ordering of the endemic below the outbreak block: every (i, t >= 2) cell's
// log rate separated by eps_rate and rho_en + eps_rho < rho_ob; weak mode
// orders only the intercept level (per-area in random-intercept mode).
bool constraints_satisfied(const ModelSpec& spec, const PanelData& data,
                           const CountParams& p);

// joint log density of counts (weeks >= 2) and the latent state paths, given
// parameters; -inf when the path hits a structural zero
double joint_loglik(const ModelSpec& spec, const PanelData& data,
                    const Params& p, const LatentStates& states);

// numerically stable helpers shared across modules
double log1pexp(double x);                       // log(1 + e^x)
double logsumexp(const double* v, int n);

}  // namespace cmsnb
