#include "cmsnb/priors.hpp"

#include <cmath>
#include <limits>

#include "cmsnb/model.hpp"

namespace cmsnb {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double sample_sd(const std::vector<double>& v, size_t stride, size_t offset, size_t n) {
  // an exactly constant column must report zero spread; the accumulated mean
  // of identical values can carry rounding noise
  bool constant = true;
  for (size_t k = 1; k < n && constant; ++k)
    constant = v[k * stride + offset] == v[offset];
  if (constant) return 0.0;
  double mean = 0.0;
  for (size_t k = 0; k < n; ++k) mean += v[k * stride + offset];
  mean /= n;
  double ss = 0.0;
  for (size_t k = 0; k < n; ++k) {
    double d = v[k * stride + offset] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / (n - 1));
}
}  // namespace

double Dist::logpdf(double x) const {
  switch (kind) {
    case Normal:
      return -0.5 * kLog2Pi - std::log(b) - (x - a) * (x - a) / (2 * b * b);
    case Cauchy: {
      double u = (x - a) / b;
      return -std::log(M_PI * b * (1 + u * u));
    }
    case Uniform:
      return (x > a && x < b) ? -std::log(b - a) : kNegInf;
    case Gamma:
      if (!(x > 0)) return kNegInf;
      return a * std::log(b) - std::lgamma(a) + (a - 1) * std::log(x) - b * x;
  }
  return kNegInf;
}

double Dist::draw(Rng& rng) const {
  switch (kind) {
    case Normal:
      return rng.normal(a, b);
    case Cauchy:
      return rng.cauchy(a, b);
    case Uniform:
      return a + (b - a) * rng.unif();
    case Gamma:
      return rng.gamma(a, 1.0 / b);
  }
  return 0.0;
}

PriorSpec default_priors(const ModelSpec& spec, const PanelData& data,
                         bool shrink_intercepts) {
  PriorSpec ps;
  if (shrink_intercepts) ps.trans_intercept = {Dist::Normal, 0, 2.5};

  const size_t P = data.z_names.size();
  const size_t cells = static_cast<size_t>(data.N) * data.T;
  std::vector<Dist> coef(P);
  for (size_t q = 0; q < P; ++q) {
    double sd = sample_sd(data.z, P, q, cells);
    if (!(sd > 0.0))
      fail("domain", "transition covariate '" + data.z_names[q] +
                         "' is constant; its prior scale is undefined");
    coef[q] = {Dist::Cauchy, 0, 2.5 / (2.0 * sd)};
  }
  ps.coef12 = ps.coef21 = ps.coef23 = ps.coef33 = coef;

  double wmax = 0.0;
  for (const auto& nb : data.in_nbrs)
    for (const auto& e : nb) wmax = std::max(wmax, e.w);
  if (spec.coupled() && wmax > 0.0) ps.spatial = {Dist::Normal, 0, 0.36 / wmax};
  return ps;
}

double log_prior(const ModelSpec& spec, const PanelData& data,
                 const PriorSpec& ps, const Params& p,
                 bool check_constraints) {
  if (check_constraints && !constraints_satisfied(spec, data, p.count))
    return kNegInf;

  const CountParams& c = p.count;
  double lp = 0.0;
  if (spec.random_intercepts) {
    lp += ps.emission_coef.logpdf(c.b0_mean_en) + ps.emission_coef.logpdf(c.b0_mean_ob);
    lp += ps.sigma.logpdf(c.sigma_en) + ps.sigma.logpdf(c.sigma_ob);
    if (lp == kNegInf) return kNegInf;
    Dist ri_en{Dist::Normal, c.b0_mean_en, c.sigma_en};
    Dist ri_ob{Dist::Normal, c.b0_mean_ob, c.sigma_ob};
    for (int i = 0; i < data.N; ++i)
      lp += ri_en.logpdf(c.b0_en[i]) + ri_ob.logpdf(c.b0_ob[i]);
  } else {
    lp += ps.emission_coef.logpdf(c.b0_en[0]) + ps.emission_coef.logpdf(c.b0_ob[0]);
  }
  for (int q : spec.x_en) lp += ps.emission_coef.logpdf(c.beta_en[q]);
  for (int q : spec.x_ob) lp += ps.emission_coef.logpdf(c.beta_ob[q]);
  lp += ps.rho.logpdf(c.rho_en) + ps.rho.logpdf(c.rho_ob);
  if (spec.share_r) {
    lp += ps.r_shared.logpdf(c.r_en);
  } else {
    lp += ps.r_en.logpdf(c.r_en) + ps.r_ob.logpdf(c.r_ob);
  }

  auto trans = [&](const TransParams& tp, const std::vector<int>& sub,
                   const std::vector<Dist>& coef, bool coupled) {
    double v = ps.trans_intercept.logpdf(tp.a0);
    for (int q : sub) v += coef[q].logpdf(tp.coef[q]);
    if (coupled) v += ps.spatial.logpdf(tp.spat);
    return v;
  };
  if (spec.ss.absence) {
    lp += trans(p.chain.t12, spec.z12, ps.coef12, spec.couple12);
    lp += trans(p.chain.t21, spec.z21, ps.coef21, spec.couple21);
  }
  lp += trans(p.chain.t23, spec.z23, ps.coef23, spec.couple23);
  lp += trans(p.chain.t33, spec.z33, ps.coef33, spec.couple33);
  return lp;
}

}  // namespace cmsnb
