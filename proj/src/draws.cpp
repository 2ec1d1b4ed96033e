#include "cmsnb/draws.hpp"

#include <cmath>
#include <limits>

#include "cmsnb/model.hpp"

namespace cmsnb {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + log1pexp(b - a) : b + log1pexp(a - b);
}
}  // namespace

void WaicAccum::init(int n_areas, int n_weeks) {
  N = n_areas;
  T = n_weeks;
  n = 0;
  const size_t cells = static_cast<size_t>(N) * T;
  lse.assign(cells, kNegInf);
  mean.assign(cells, 0.0);
  m2.assign(cells, 0.0);
}

void WaicAccum::add_draw(const double* logp_cells) {
  ++n;
  for (int i = 0; i < N; ++i) {
    for (int t = 1; t < T; ++t) {
      const size_t c = static_cast<size_t>(i) * T + t;
      const double lp = logp_cells[c];
      lse[c] = logaddexp(lse[c], lp);
      const double d = lp - mean[c];
      mean[c] += d / n;
      m2[c] += d * (lp - mean[c]);
    }
  }
}

void WaicAccum::merge(const WaicAccum& other) {
  if (other.n == 0) return;
  if (n == 0) {
    *this = other;
    return;
  }
  if (other.N != N || other.T != T)
    fail("domain", "predictive accumulators cover different panels");
  const long na = n, nb = other.n;
  for (size_t c = 0; c < lse.size(); ++c) {
    lse[c] = logaddexp(lse[c], other.lse[c]);
    const double d = other.mean[c] - mean[c];
    mean[c] += d * nb / (na + nb);
    m2[c] += other.m2[c] + d * d * (static_cast<double>(na) * nb) / (na + nb);
  }
  n = na + nb;
}

int PosteriorDraws::name_index(const std::string& name) const {
  for (size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return static_cast<int>(k);
  return -1;
}

std::vector<double> PosteriorDraws::column(int chain, int k) const {
  const ChainDraws& c = chains[chain];
  std::vector<double> out(c.n_kept);
  for (long d = 0; d < c.n_kept; ++d) out[d] = c.at(d, k, P());
  return out;
}

const std::uint8_t* PosteriorDraws::state_draw(int chain, long d) const {
  const ChainDraws& c = chains[chain];
  return c.states.data() + static_cast<size_t>(d) * N() * T();
}

WaicAccum PosteriorDraws::merged_pred() const {
  WaicAccum acc;
  for (const ChainDraws& c : chains) acc.merge(c.pred);
  return acc;
}

}  // namespace cmsnb
