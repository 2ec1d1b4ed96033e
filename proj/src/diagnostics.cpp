#include "cmsnb/diagnostics.hpp"

#include <cmath>
#include <numeric>

namespace cmsnb {

namespace {
double mean_of(const double* v, size_t n) {
  double s = 0.0;
  for (size_t k = 0; k < n; ++k) s += v[k];
  return s / n;
}

double var_of(const double* v, size_t n, double mean) {  // ddof = 1
  double s = 0.0;
  for (size_t k = 0; k < n; ++k) s += (v[k] - mean) * (v[k] - mean);
  return s / (n - 1);
}

void check_chains(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) fail("domain", "diagnostics need at least two chains");
  const size_t len = chains[0].size();
  for (const auto& c : chains)
    if (c.size() != len) fail("domain", "chains have unequal lengths");
  if (len < 10) fail("domain", "chains must hold at least 10 draws");
}
}  // namespace

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  check_chains(chains);
  // split each chain in half so within-chain drift shows up as disagreement
  const size_t n = chains[0].size() / 2;
  std::vector<const double*> halves;
  for (const auto& c : chains) {
    halves.push_back(c.data());
    halves.push_back(c.data() + (c.size() - n));
  }
  const size_t m = halves.size();
  std::vector<double> means(m), vars(m);
  for (size_t j = 0; j < m; ++j) {
    means[j] = mean_of(halves[j], n);
    vars[j] = var_of(halves[j], n, means[j]);
  }
  double W = mean_of(vars.data(), m);
  double grand = mean_of(means.data(), m);
  double B = n * var_of(means.data(), m, grand);
  if (W == 0.0 && B == 0.0) return 1.0;
  double varplus = (static_cast<double>(n - 1) / n) * W + B / n;
  return std::sqrt(varplus / W);
}

namespace {
// Geyer initial-positive-sequence tau for one chain; returns the chain's ESS
double chain_ess(const std::vector<double>& c, bool& degenerate) {
  const size_t n = c.size();
  const double mean = mean_of(c.data(), n);
  double c0 = 0.0;
  for (double v : c) c0 += (v - mean) * (v - mean);
  c0 /= n;
  if (c0 == 0.0) {
    degenerate = true;
    return 0.0;
  }
  auto rho = [&](size_t lag) {
    double s = 0.0;
    for (size_t t = 0; t + lag < n; ++t) s += (c[t] - mean) * (c[t + lag] - mean);
    return s / n / c0;
  };
  double sum_pairs = 0.0;  // sum of Gamma_k = rho(2k) + rho(2k+1) while > 0
  // the 1000-pair cap bounds the cost on badly mixing chains; such chains
  // already report tau >= 2000, far past any practical gate
  const size_t max_pairs = 1000;
  for (size_t k = 0; 2 * k + 1 < n && k < max_pairs; ++k) {
    double g = rho(2 * k) + rho(2 * k + 1);
    if (g <= 0.0) break;
    sum_pairs += g;
  }
  double tau = std::max(2.0 * sum_pairs - 1.0, 1.0 / 1.25);
  return std::min(n / tau, 1.25 * n);
}
}  // namespace

double effective_sample_size(const std::vector<std::vector<double>>& chains,
                             bool* degenerate) {
  check_chains(chains);
  bool degen = false;
  double total = 0.0;
  for (const auto& c : chains) total += chain_ess(c, degen);
  if (degenerate) *degenerate = degen;
  return total;
}

GateReport convergence_gate(const PosteriorDraws& draws, double ess_min,
                            double rhat_max) {
  if (draws.chains.size() < 2)
    fail("domain", "the convergence gate needs at least two chains");
  GateReport rep;
  rep.ess_min = ess_min;
  rep.rhat_max = rhat_max;
  const int P = draws.P();
  rep.ess.resize(P);
  rep.rhat.resize(P);
  rep.degenerate.assign(P, 0);
  rep.pass = true;
  for (int k = 0; k < P; ++k) {
    std::vector<std::vector<double>> cols;
    for (size_t c = 0; c < draws.chains.size(); ++c)
      cols.push_back(draws.column(static_cast<int>(c), k));
    bool degen = false;
    rep.ess[k] = effective_sample_size(cols, &degen);
    rep.rhat[k] = gelman_rubin(cols);
    rep.degenerate[k] = degen ? 1 : 0;
    if (!(rep.ess[k] > ess_min) || !(rep.rhat[k] < rhat_max) || degen) {
      rep.pass = false;
      rep.offenders.push_back(draws.names[k]);
    }
  }
  return rep;
}

}  // namespace cmsnb
