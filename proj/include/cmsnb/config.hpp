#pragma once
// Flat key=value run configuration: model variant, state-space sizes,
// covariate assignments, sampler settings and prior overrides.

#include <map>
#include <string>
#include <vector>

#include "cmsnb/draws.hpp"
#include "cmsnb/priors.hpp"
#include "cmsnb/types.hpp"

namespace cmsnb {

struct Config {
  std::map<std::string, std::string> kv;

  static Config load(const std::string& path);
  bool has(const std::string& key) const { return kv.count(key) != 0; }
  std::string str(const std::string& key, const std::string& dflt) const;
  long num(const std::string& key, long dflt) const;
  double real(const std::string& key, double dflt) const;
  bool flag(const std::string& key, bool dflt) const;
  // comma-separated list; missing key -> nullopt-like via `has`
  std::vector<std::string> list(const std::string& key) const;
};

// Everything a fit needs besides the data files.  Covariate assignments stay
// symbolic until the panel is loaded.
struct RunConfig {
  std::string variant = "coupled";  // coupled | non-coupled | no-absence-clone
  ModelSpec spec;
  SamplerConfig sampler;
  bool standardize = true;
  bool shrink_intercepts = false;
  std::string init_dist = "uniform";  // uniform | collapsed
  // covariate names per role; empty + not set -> all loaded columns
  std::vector<std::string> x_en_cols, x_ob_cols;
  std::vector<std::string> z12_cols, z21_cols, z23_cols, z33_cols;
  bool x_en_set = false, x_ob_set = false;
  bool z12_set = false, z21_set = false, z23_set = false, z33_set = false;
  // prior overrides (negative = use the default rule)
  double prior_emission_sd = 10.0;
  double prior_spatial_sd = -1.0;
  double prior_r_en_hi = 10.0, prior_r_ob_hi = 50.0, prior_r_shared_hi = 50.0;
  double prior_sigma_shape = 1.0, prior_sigma_rate = 0.5;
};

RunConfig run_config_from(const Config& c);

// Restrict the panel's covariate matrices to the referenced columns and
// resolve the spec's index subsets; call once after load_panel.
void resolve_covariates(RunConfig& rc, PanelData& data);

// default priors with the configured overrides applied
PriorSpec priors_for(const RunConfig& rc, const PanelData& data);

}  // namespace cmsnb
