#include "cmsnb/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "cmsnb/io.hpp"

namespace cmsnb {

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open config " + path);
  Config c;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      fail("parse", path + ":" + std::to_string(n) + ": expected key=value");
    c.kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return c;
}

std::string Config::str(const std::string& key, const std::string& dflt) const {
  auto it = kv.find(key);
  return it == kv.end() ? dflt : it->second;
}

long Config::num(const std::string& key, long dflt) const {
  auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  char* end = nullptr;
  long v = std::strtol(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0')
    fail("config", "key '" + key + "' expects an integer, got '" + it->second + "'");
  return v;
}

double Config::real(const std::string& key, double dflt) const {
  auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  char* end = nullptr;
  double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0')
    fail("config", "key '" + key + "' expects a number, got '" + it->second + "'");
  return v;
}

bool Config::flag(const std::string& key, bool dflt) const {
  auto it = kv.find(key);
  if (it == kv.end()) return dflt;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail("config", "key '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<std::string> Config::list(const std::string& key) const {
  auto it = kv.find(key);
  if (it == kv.end() || trim(it->second).empty()) return {};
  std::vector<std::string> out;
  std::string cur;
  for (char ch : it->second) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

RunConfig run_config_from(const Config& c) {
  RunConfig rc;
  rc.variant = c.str("variant", "coupled");
  ModelSpec& sp = rc.spec;
  if (rc.variant == "coupled" || rc.variant == "non-coupled") {
    sp.ss.absence = true;
    sp.ss.m_en = static_cast<int>(c.num("m_en", 2));
    sp.ss.m_ob = static_cast<int>(c.num("m_ob", 4));
  } else if (rc.variant == "no-absence-clone") {
    sp.ss.absence = false;
    sp.ss.m_en = 1;
    sp.ss.m_ob = 1;
  } else {
    fail("config", "unknown variant '" + rc.variant +
                       "' (expected coupled, non-coupled or no-absence-clone)");
  }
  const bool coupled_default = rc.variant != "non-coupled";
  sp.couple12 = sp.ss.absence && c.flag("couple12", coupled_default);
  sp.couple21 = sp.ss.absence && c.flag("couple21", coupled_default);
  sp.couple23 = c.flag("couple23", coupled_default);
  sp.couple33 = c.flag("couple33", coupled_default);
  sp.random_intercepts = c.flag("random_intercepts", true);
  sp.share_r = c.flag("share_r", false);
  sp.eps_rate = c.real("eps_rate", 0.01);
  sp.eps_rho = c.real("eps_rho", 0.05);
  sp.weak_constraints = c.flag("weak_constraints", false);
  sp.eps_weak = c.real("eps_weak", 0.10);
  sp.ss.validate();

  SamplerConfig& sc = rc.sampler;
  sc.iters = c.num("iters", 200000);
  sc.burnin = c.num("burnin", 50000);
  sc.chains = static_cast<int>(c.num("chains", 3));
  sc.thin_states = static_cast<int>(c.num("thin_states", 10));
  sc.seed = static_cast<std::uint64_t>(c.num("seed", 1));
  sc.adapt_interval = static_cast<int>(c.num("adapt_interval", 50));
  sc.adapt_target = c.real("adapt_target", 0.44);
  sc.init_stay = c.real("init_stay", 0.8);
  sc.max_init_tries = c.num("max_init_tries", 10000);
  sc.online_predictive = c.flag("online_predictive", true);
  sc.threads = static_cast<int>(c.num("threads", 0));

  rc.standardize = c.flag("standardize", true);
  rc.shrink_intercepts = c.flag("shrink_intercepts", false);
  rc.init_dist = c.str("init_dist", "uniform");
  if (rc.init_dist != "uniform" && rc.init_dist != "collapsed")
    fail("config", "init_dist must be 'uniform' or 'collapsed'");

  rc.x_en_set = c.has("x_en");
  rc.x_ob_set = c.has("x_ob");
  rc.z12_set = c.has("z12");
  rc.z21_set = c.has("z21");
  rc.z23_set = c.has("z23");
  rc.z33_set = c.has("z33");
  rc.x_en_cols = c.list("x_en");
  rc.x_ob_cols = c.list("x_ob");
  rc.z12_cols = c.list("z12");
  rc.z21_cols = c.list("z21");
  rc.z23_cols = c.list("z23");
  rc.z33_cols = c.list("z33");

  rc.prior_emission_sd = c.real("prior_emission_sd", 10.0);
  rc.prior_spatial_sd = c.real("prior_spatial_sd", -1.0);
  rc.prior_r_en_hi = c.real("prior_r_en_hi", 10.0);
  rc.prior_r_ob_hi = c.real("prior_r_ob_hi", 50.0);
  rc.prior_r_shared_hi = c.real("prior_r_shared_hi", 50.0);
  rc.prior_sigma_shape = c.real("prior_sigma_shape", 1.0);
  rc.prior_sigma_rate = c.real("prior_sigma_rate", 0.5);
  return rc;
}

namespace {
std::vector<std::string> union_in_order(
    const std::vector<const std::vector<std::string>*>& lists) {
  std::vector<std::string> out;
  for (const auto* l : lists)
    for (const auto& n : *l)
      if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  return out;
}

std::vector<int> resolve(const std::vector<std::string>& cols,
                         const std::vector<std::string>& names) {
  std::vector<int> idx;
  for (const auto& n : cols) {
    auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) fail("config", "unknown covariate '" + n + "'");
    idx.push_back(static_cast<int>(it - names.begin()));
  }
  return idx;
}
}  // namespace

void resolve_covariates(RunConfig& rc, PanelData& data) {
  const std::vector<std::string> loaded = data.x_names;
  auto or_all = [&](bool set, std::vector<std::string>& cols) {
    if (!set) cols = loaded;
  };
  or_all(rc.x_en_set, rc.x_en_cols);
  or_all(rc.x_ob_set, rc.x_ob_cols);
  or_all(rc.z12_set, rc.z12_cols);
  or_all(rc.z21_set, rc.z21_cols);
  or_all(rc.z23_set, rc.z23_cols);
  or_all(rc.z33_set, rc.z33_cols);
  if (!rc.spec.ss.absence) {
    rc.z12_cols.clear();  // those regressions do not exist without absence
    rc.z21_cols.clear();
  }
  std::vector<std::string> x_cols = union_in_order({&rc.x_en_cols, &rc.x_ob_cols});
  std::vector<std::string> z_cols = union_in_order(
      {&rc.z12_cols, &rc.z21_cols, &rc.z23_cols, &rc.z33_cols});
  split_covariates(data, x_cols, z_cols);
  rc.spec.x_en = resolve(rc.x_en_cols, data.x_names);
  rc.spec.x_ob = resolve(rc.x_ob_cols, data.x_names);
  rc.spec.z12 = resolve(rc.z12_cols, data.z_names);
  rc.spec.z21 = resolve(rc.z21_cols, data.z_names);
  rc.spec.z23 = resolve(rc.z23_cols, data.z_names);
  rc.spec.z33 = resolve(rc.z33_cols, data.z_names);
}

PriorSpec priors_for(const RunConfig& rc, const PanelData& data) {
  PriorSpec ps = default_priors(rc.spec, data, rc.shrink_intercepts);
  ps.emission_coef.b = rc.prior_emission_sd;
  if (rc.prior_spatial_sd > 0.0) ps.spatial.b = rc.prior_spatial_sd;
  ps.r_en.b = rc.prior_r_en_hi;
  ps.r_ob.b = rc.prior_r_ob_hi;
  ps.r_shared.b = rc.prior_r_shared_hi;
  ps.sigma.a = rc.prior_sigma_shape;
  ps.sigma.b = rc.prior_sigma_rate;
  return ps;
}

}  // namespace cmsnb
