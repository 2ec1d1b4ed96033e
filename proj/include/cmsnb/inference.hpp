#pragma once
// Posterior summaries: collapsed-state probabilities, posterior-predictive
// simulation, one-step-ahead predictive densities (marginal and partially
// marginalized), WAIC and the multivariate log score.

#include <cstdint>
#include <vector>

#include "cmsnb/draws.hpp"
#include "cmsnb/rng.hpp"
#include "cmsnb/sampler.hpp"
#include "cmsnb/types.hpp"

namespace cmsnb {

// Empirical collapsed-state probabilities per cell, p[(i*T + t)*3 + c] with
// c = 0/1/2 for absence/endemic/outbreak; rows outside [t_lo, t_hi) are zero.
struct StateProbSeries {
  int N = 0, T = 0;
  int t_lo = 0, t_hi = 0;
  std::vector<double> p;

  double at(int i, int t, int c) const {
    return p[(static_cast<size_t>(i) * T + t) * 3 + c];
  }
};

// frequencies over all stored (thinned) state draws of every chain
StateProbSeries state_probabilities(const PosteriorDraws& draws, int t_lo = 0,
                                    int t_hi = -1);

// parameters of one kept draw, reassembled into Params form
Params params_from_row(const PosteriorDraws& draws, const PanelData& data,
                       int chain, long kept_row);

// Per-cell one-step-ahead predictive log densities log p(y_it | y_{i,1:t-1})
// from the plain HMM forward recursion, cells indexed i*T + t with the t = 0
// slots zero (first-week counts are conditioned on).  Valid only when every
// active spatial coupling coefficient is zero.
std::vector<double> marginal_loglik_forward(const ModelSpec& spec,
                                            const PanelData& data,
                                            const Params& p);

// Coupled-model analogue: log p(y_it | S_{(-i),1:t}, y_{i,1:t-1}, v), the
// predictive of the blocked filter given every other area's path.  With all
// spatial couplings at zero this equals marginal_loglik_forward bit for bit.
std::vector<double> partial_marginal_loglik(const ModelSpec& spec,
                                            const PanelData& data,
                                            const Params& p,
                                            const LatentStates& states);

// same, for stored draw d of one chain (draw d pairs with kept row d*thin)
std::vector<double> partial_marginal_loglik(const ModelSpec& spec,
                                            const PanelData& data,
                                            const PosteriorDraws& draws,
                                            int chain, long d);

struct WaicResult {
  double lpd = 0;    // sum over cells of log mean predictive density
  double p_eff = 0;  // sum of over-draw variances of the log density
  double waic = 0;   // -2 * (lpd - p_eff)
  long n_draws = 0;
};

// WAIC from an explicit draws x cells matrix of log predictive densities
WaicResult waic(const std::vector<std::vector<double>>& per_draw_logp);

// WAIC from online accumulators (cells with t = 0 are skipped)
WaicResult waic_from_accum(const WaicAccum& acc);

// post-hoc WAIC from stored thinned draws, for runs without online
// accumulation; reconstructs the per-draw predictive densities
WaicResult waic_from_draws(const ModelSpec& spec, const PanelData& data,
                           const PosteriorDraws& draws);

// Posterior-predictive simulation `horizon` weeks past the panel end: per
// member (one per stored state draw) the states advance through the
// transition model using the member's own simulated previous slice, counts
// follow from the emissions.  Covariates past the panel reuse the last week.
struct ForecastDraws {
  int N = 0, H = 0;
  long M = 0;                   // members = chains x stored state draws
  std::vector<std::uint8_t> s;  // s[(m*H + k)*N + i], expanded states
  std::vector<long> y;          // same layout
  double state_prob(int k, int i, int collapsed, const StateSpace& ss) const;
};

ForecastDraws posterior_predictive(const ModelSpec& spec, const PanelData& data,
                                   const PosteriorDraws& draws, int horizon,
                                   Rng& rng);

// Multivariate log score of an observed count vector one week past the panel:
// -(1/N) log of the draw-averaged product over areas of the emission density
// at each member's drawn next state.  Optional covariate rows for the scored
// week default to the panel's last week.
double multivariate_log_score(const ModelSpec& spec, const PanelData& data,
                              const PosteriorDraws& draws,
                              const std::vector<long>& y_obs, Rng& rng,
                              const double* x_next = nullptr,
                              const double* z_next = nullptr);

}  // namespace cmsnb
