#pragma once
// Prior layer: elementwise densities plus the joint log prior, including the
// truncation to the region where the endemic block sits below the outbreak
// block (the truncation constant cancels in Metropolis ratios and is dropped).

#include <vector>

#include "cmsnb/rng.hpp"
#include "cmsnb/types.hpp"

namespace cmsnb {

struct Dist {
  enum Kind { Normal, Cauchy, Uniform, Gamma } kind = Normal;
  double a = 0, b = 1;  // loc/sd, loc/scale, lo/hi, shape/rate

  double logpdf(double x) const;
  double draw(Rng& rng) const;
};

struct PriorSpec {
  Dist emission_coef{Dist::Normal, 0, 10};  // count intercepts (or their
                                            // means) and count covariate effects
  Dist sigma{Dist::Gamma, 1.0, 0.5};        // random-intercept scale
  Dist rho{Dist::Uniform, 0, 1};
  Dist r_en{Dist::Uniform, 0, 10};
  Dist r_ob{Dist::Uniform, 0, 50};
  Dist r_shared{Dist::Uniform, 0, 50};      // used when one r is shared
  Dist trans_intercept{Dist::Cauchy, 0, 10};
  std::vector<Dist> coef12, coef21, coef23, coef33;  // per z covariate
  Dist spatial{Dist::Normal, 0, 0.36};
};

// Weakly-informative defaults: transition covariate effects get Cauchy scale
// 2.5 / (2 * sample sd of the covariate); the spatial coupling sd is
// 0.36 / max weight so a one-neighbour outbreak at the largest weight moves
// the odds by about a factor two at the 97.5% prior quantile.
// `shrink_intercepts` swaps the Cauchy transition intercepts for Normal(0, 2.5^2).
PriorSpec default_priors(const ModelSpec& spec, const PanelData& data,
                         bool shrink_intercepts = false);

// joint log prior over the sampled parameters; -inf outside a support or
// (when check_constraints) outside the ordering-constraint region
double log_prior(const ModelSpec& spec, const PanelData& data,
                 const PriorSpec& ps, const Params& p,
                 bool check_constraints = true);

}  // namespace cmsnb
