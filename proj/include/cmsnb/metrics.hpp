#pragma once
// Detection quality metrics for per-(area, week) outbreak probabilities
// against a known truth, plus a paired permutation test for score series.

#include <cstdint>
#include <vector>

#include "cmsnb/rng.hpp"
#include "cmsnb/simulation.hpp"

namespace cmsnb {

// Probability that a random outbreak-week score exceeds a random
// non-outbreak-week score, ties counted one half (rank form).  `labels` is
// 1 for outbreak weeks.  Errors when only one class is present.
double roc_auc(const std::vector<double>& scores,
               const std::vector<std::uint8_t>& labels);

struct SensSpec {
  double sensitivity = 0;
  double specificity = 0;
};
SensSpec sens_spec(const std::vector<double>& scores,
                   const std::vector<std::uint8_t>& labels,
                   double threshold = 0.5);

// Weeks-to-detection, 1-indexed within each outbreak: for every contiguous
// outbreak run in the truth that starts inside [t_lo, t_hi), the first week
// whose score crosses the threshold.  Undetected runs are excluded from the
// mean and counted separately.
struct TimelinessResult {
  double mean_weeks = 0;
  int detected = 0;
  int missed = 0;
};
TimelinessResult timeliness(const std::vector<double>& scores,
                            const BenchmarkTruth& truth, double threshold = 0.5,
                            int t_lo = 0, int t_hi = -1);

// Two-sided paired permutation test on mean(a) - mean(b) under per-index
// sign flips; exact enumeration when 2^n fits inside n_perm, Monte Carlo
// with add-one smoothing otherwise.
double permutation_test(const std::vector<double>& a,
                        const std::vector<double>& b, long n_perm, Rng& rng);

}  // namespace cmsnb
