#include "cmsnb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cmsnb {

double roc_auc(const std::vector<double>& scores,
               const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size())
    fail("domain", "scores and labels differ in length");
  const size_t n = scores.size();
  size_t n1 = 0;
  for (auto l : labels) n1 += l ? 1 : 0;
  const size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0)
    fail("domain", "AUC needs both outbreak and non-outbreak weeks");

  std::vector<size_t> ord(n);
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // rank-sum with average ranks over ties
  double rank_sum_pos = 0.0;
  size_t k = 0;
  while (k < n) {
    size_t j = k;
    while (j + 1 < n && scores[ord[j + 1]] == scores[ord[k]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(k + 1) + static_cast<double>(j + 1));
    for (size_t q = k; q <= j; ++q)
      if (labels[ord[q]]) rank_sum_pos += avg_rank;
    k = j + 1;
  }
  return (rank_sum_pos - 0.5 * n1 * (n1 + 1)) / (static_cast<double>(n1) * n0);
}

SensSpec sens_spec(const std::vector<double>& scores,
                   const std::vector<std::uint8_t>& labels, double threshold) {
  if (scores.size() != labels.size())
    fail("domain", "scores and labels differ in length");
  long tp = 0, fn = 0, tn = 0, fp = 0;
  for (size_t k = 0; k < scores.size(); ++k) {
    const bool hit = scores[k] > threshold;
    if (labels[k])
      (hit ? tp : fn)++;
    else
      (hit ? fp : tn)++;
  }
  if (tp + fn == 0 || tn + fp == 0)
    fail("domain", "sensitivity/specificity need both classes present");
  return {static_cast<double>(tp) / (tp + fn), static_cast<double>(tn) / (tn + fp)};
}

TimelinessResult timeliness(const std::vector<double>& scores,
                            const BenchmarkTruth& truth, double threshold,
                            int t_lo, int t_hi) {
  const int N = truth.N, T = truth.T;
  if (scores.size() != static_cast<size_t>(N) * T)
    fail("domain", "score grid does not match the truth grid");
  if (t_hi < 0) t_hi = T;
  TimelinessResult res;
  double total = 0.0;
  int runs = 0;
  for (int i = 0; i < N; ++i) {
    int t = 0;
    while (t < T) {
      if (truth.at(i, t) != OUTBREAK) {
        ++t;
        continue;
      }
      int start = t;
      while (t < T && truth.at(i, t) == OUTBREAK) ++t;
      if (start < t_lo || start >= t_hi) continue;
      ++runs;
      int det = -1;
      for (int u = start; u < t; ++u)
        if (scores[static_cast<size_t>(i) * T + u] > threshold) {
          det = u;
          break;
        }
      if (det < 0) {
        ++res.missed;
      } else {
        ++res.detected;
        total += det - start + 1;
      }
    }
  }
  if (runs == 0) fail("domain", "no outbreaks start inside the evaluation window");
  res.mean_weeks = res.detected > 0 ? total / res.detected : 0.0;
  return res;
}

double permutation_test(const std::vector<double>& a,
                        const std::vector<double>& b, long n_perm, Rng& rng) {
  if (a.size() != b.size()) fail("domain", "paired series differ in length");
  const size_t n = a.size();
  if (n < 2) fail("domain", "permutation test needs series of length >= 2");
  std::vector<double> d(n);
  for (size_t k = 0; k < n; ++k) d[k] = a[k] - b[k];
  double obs = 0.0;
  for (double v : d) obs += v;
  obs = std::abs(obs / n);

  if (n <= 20 && (1L << n) <= n_perm) {
    // exact: every sign assignment once
    const long total = 1L << n;
    long extreme = 0;
    for (long mask = 0; mask < total; ++mask) {
      double s = 0.0;
      for (size_t k = 0; k < n; ++k) s += (mask >> k) & 1 ? -d[k] : d[k];
      if (std::abs(s / n) >= obs - 1e-12) ++extreme;
    }
    return static_cast<double>(extreme) / total;
  }
  long extreme = 0;
  for (long p = 0; p < n_perm; ++p) {
    double s = 0.0;
    for (size_t k = 0; k < n; ++k) s += rng.unif() < 0.5 ? -d[k] : d[k];
    if (std::abs(s / n) >= obs - 1e-12) ++extreme;
  }
  return static_cast<double>(extreme + 1) / (n_perm + 1);
}

}  // namespace cmsnb
