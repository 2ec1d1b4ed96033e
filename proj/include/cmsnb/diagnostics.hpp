#pragma once
// Convergence diagnostics gating the reports: split-chain Gelman-Rubin,
// autocorrelation-based effective sample size, and the pass/fail rule
// (min ESS > 1000, max R-hat < 1.05).

#include <string>
#include <vector>

#include "cmsnb/draws.hpp"

namespace cmsnb {

// Split-chain potential scale reduction factor; needs >= 2 chains of equal
// length >= 10.  Zero within- and between-chain variance gives 1.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

// Effective sample size summed over chains, each estimated with Geyer's
// initial-positive-sequence autocorrelation truncation and capped at 1.25x
// the chain length.  A constant chain contributes 0 and sets *degenerate.
double effective_sample_size(const std::vector<std::vector<double>>& chains,
                             bool* degenerate = nullptr);

struct GateReport {
  bool pass = false;
  std::vector<double> ess, rhat;         // per parameter, draw order
  std::vector<int> degenerate;           // 0/1 per parameter
  std::vector<std::string> offenders;    // names failing either rule
  double ess_min = 0, rhat_max = 0;      // thresholds used
};

// paper rule over all sampled parameters
GateReport convergence_gate(const PosteriorDraws& draws, double ess_min = 1000.0,
                            double rhat_max = 1.05);

}  // namespace cmsnb
