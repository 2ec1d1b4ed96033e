#pragma once
// Shared fixtures: the 2-area/3-week panel behind the frozen reference
// values, plus builders for fabricated posterior draws.

#include <string>
#include <vector>

#include "cmsnb/draws.hpp"
#include "cmsnb/model.hpp"
#include "cmsnb/sampler.hpp"
#include "cmsnb/types.hpp"

namespace fix {

using namespace cmsnb;

// CMSNB(1,2,4), pooled intercepts, one emission and one transition
// covariate, every transition coupled
inline ModelSpec spec124() {
  ModelSpec sp;
  sp.ss = StateSpace{true, 2, 4};
  sp.random_intercepts = false;
  sp.x_en = {0};
  sp.x_ob = {0};
  sp.z12 = {0};
  sp.z21 = {0};
  sp.z23 = {0};
  sp.z33 = {0};
  sp.couple12 = sp.couple21 = sp.couple23 = sp.couple33 = true;
  return sp;
}

// N=2, T=3 panel: counts {0,3,1}/{2,0,5}, NE(0)={1} w=.4, NE(1)={0} w=.7
inline PanelData small_panel() {
  PanelData d;
  d.N = 2;
  d.T = 3;
  d.area_ids = {"a", "b"};
  d.weeks = {1, 2, 3};
  d.y = {0, 3, 1, 2, 0, 5};
  d.x_names = {"x1"};
  d.z_names = {"z1"};
  d.x = {0.3, -0.2, 0.1, -0.5, 0.4, 0.0};
  d.z = {0.1, 0.6, -0.3, 0.2, -0.1, 0.5};
  d.in_nbrs = {{{1, 0.4}}, {{0, 0.7}}};
  d.set_uniform_init(7);
  d.build_rev_nbrs();
  return d;
}

// parameter values behind the frozen joint-loglik reference
inline Params small_params() {
  Params p;
  p.count.b0_en = {0.2};
  p.count.b0_ob = {1.0};
  p.count.beta_en = {0.15};
  p.count.beta_ob = {0.05};
  p.count.rho_en = 0.4;
  p.count.rho_ob = 0.6;
  p.count.r_en = 5;
  p.count.r_ob = 12;
  p.chain.t12 = {-0.5, {0.3}, 0.8};
  p.chain.t21 = {-2.0, {-0.4}, 0.6};
  p.chain.t23 = {-1.5, {0.25}, 1.2};
  p.chain.t33 = {1.0, {0.1}, 0.5};
  return p;
}

// the latent path of the reference fixture
inline LatentStates small_states() {
  LatentStates s(2, 3);
  s.set(0, 0, 2);
  s.set(0, 1, 3);
  s.set(0, 2, 4);
  s.set(1, 0, 7);
  s.set(1, 1, 7);
  s.set(1, 2, 2);
  return s;
}

// single-chain draw container holding `copies` identical kept rows of `p`
// and one stored state draw per row (thin 1)
inline PosteriorDraws fake_draws(const ModelSpec& spec, const PanelData& data,
                                 const Params& p, const LatentStates& st,
                                 long copies = 1) {
  PosteriorDraws dr;
  dr.spec = spec;
  dr.area_ids = data.area_ids;
  dr.weeks = data.weeks;
  dr.x_names = data.x_names;
  dr.z_names = data.z_names;
  dr.cfg.iters = copies;
  dr.cfg.burnin = 0;
  dr.cfg.chains = 1;
  dr.cfg.thin_states = 1;
  ParamLayout lay = ParamLayout::build(spec, data.N, data.x_names, data.z_names);
  dr.names = lay.names;
  ChainDraws cd;
  cd.n_kept = copies;
  cd.n_state_draws = copies;
  std::vector<double> row(lay.P());
  for (int k = 0; k < lay.P(); ++k) row[k] = lay.get(p, k);
  for (long m = 0; m < copies; ++m) {
    cd.params.insert(cd.params.end(), row.begin(), row.end());
    cd.states.insert(cd.states.end(), st.s.begin(), st.s.end());
  }
  cd.accept_rate.assign(lay.P(), 0.0);
  cd.prop_sd.assign(lay.P(), 1.0);
  dr.chains.push_back(std::move(cd));
  return dr;
}

}  // namespace fix
