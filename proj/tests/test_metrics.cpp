#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "cmsnb/metrics.hpp"

using namespace cmsnb;

TEST_SUITE_BEGIN("metrics");

namespace {

BenchmarkTruth grid(int N, int T) {
  BenchmarkTruth tr;
  tr.N = N;
  tr.T = T;
  tr.state.assign(static_cast<size_t>(N) * T, ENDEMIC);
  return tr;
}

void mark(BenchmarkTruth& tr, int i, int from, int upto) {  // [from, upto)
  for (int t = from; t < upto; ++t) tr.state[static_cast<size_t>(i) * tr.T + t] = OUTBREAK;
}

}  // namespace

TEST_CASE("roc auc closed cases") {
  CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
  CHECK(roc_auc({0.9, 0.8, 0.7, 0.1}, {1, 0, 1, 0}) == doctest::Approx(0.75).epsilon(1e-14));
  // one tied pair counts a half
  CHECK(roc_auc({0.5, 0.5, 0.9}, {1, 0, 0}) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(roc_auc({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0}) == 0.5);

  CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), Error);
  CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {0, 0}), Error);
  CHECK_THROWS_AS(roc_auc({0.1, 0.2, 0.3}, {1, 0}), Error);
}

TEST_CASE("roc auc on uninformative scores and the complement identity") {
  const int n = 10000;
  std::vector<double> s(n);
  std::vector<std::uint8_t> l(n);
  Rng rng(3, 0);
  for (int k = 0; k < n; ++k) {
    s[k] = rng.unif();
    l[k] = static_cast<std::uint8_t>(k % 2);
  }
  double auc = roc_auc(s, l);
  CHECK(std::fabs(auc - 0.5) < 0.02);

  std::vector<double> flipped(n);
  for (int k = 0; k < n; ++k) flipped[k] = 1.0 - s[k];
  CHECK(roc_auc(flipped, l) == doctest::Approx(1.0 - auc).epsilon(1e-12));
}

TEST_CASE("sensitivity and specificity at a threshold") {
  SensSpec r = sens_spec({0.9, 0.1}, {1, 0});
  CHECK(r.sensitivity == 1.0);
  CHECK(r.specificity == 1.0);

  r = sens_spec({0.2, 0.2}, {1, 0});
  CHECK(r.sensitivity == 0.0);
  CHECK(r.specificity == 1.0);

  r = sens_spec({0.9, 0.4, 0.6, 0.2, 0.8, 0.3}, {1, 1, 1, 0, 0, 0});
  CHECK(r.sensitivity == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(r.specificity == doctest::Approx(2.0 / 3).epsilon(1e-14));

  // the crossing is strict, so a score equal to the threshold is a miss
  r = sens_spec({0.5, 0.1}, {1, 0});
  CHECK(r.sensitivity == 0.0);

  CHECK_THROWS_AS(sens_spec({0.1, 0.2}, {1, 1}), Error);
}

TEST_CASE("timeliness over outbreak runs") {
  BenchmarkTruth tr = grid(1, 10);
  mark(tr, 0, 2, 6);
  std::vector<double> s(10, 0.0);
  s[2] = 0.9;
  TimelinessResult res = timeliness(s, tr);
  CHECK(res.detected == 1);
  CHECK(res.missed == 0);
  CHECK(res.mean_weeks == 1.0);

  // detection two weeks into a run starting at week 10
  tr = grid(1, 20);
  mark(tr, 0, 10, 16);
  s.assign(20, 0.0);
  s[12] = 0.8;
  res = timeliness(s, tr);
  CHECK(res.detected == 1);
  CHECK(res.mean_weeks == 3.0);

  // two areas, detections at one and two weeks
  tr = grid(2, 12);
  mark(tr, 0, 3, 8);
  mark(tr, 1, 5, 9);
  s.assign(24, 0.0);
  s[3] = 0.7;       // area 0, week 3: immediate
  s[12 + 6] = 0.7;  // area 1, week 6: second week of its run
  res = timeliness(s, tr);
  CHECK(res.detected == 2);
  CHECK(res.mean_weeks == doctest::Approx(1.5).epsilon(1e-14));

  // a crossing after the run has ended does not count
  tr = grid(1, 10);
  mark(tr, 0, 2, 5);
  s.assign(10, 0.0);
  s[7] = 0.9;
  res = timeliness(s, tr);
  CHECK(res.detected == 0);
  CHECK(res.missed == 1);
  CHECK(res.mean_weeks == 0.0);
}

TEST_CASE("timeliness evaluation window and errors") {
  BenchmarkTruth tr = grid(1, 30);
  mark(tr, 0, 4, 8);
  mark(tr, 0, 14, 18);
  mark(tr, 0, 24, 28);
  std::vector<double> s(30, 0.0);
  s[4] = s[15] = s[26] = 0.9;

  TimelinessResult res = timeliness(s, tr, 0.5, 10, 25);  // keeps starts 14 and 24
  CHECK(res.detected == 2);
  CHECK(res.mean_weeks == doctest::Approx((2.0 + 3.0) / 2).epsilon(1e-14));

  res = timeliness(s, tr, 0.5, 10, 24);  // start 24 now falls outside
  CHECK(res.detected == 1);
  CHECK(res.mean_weeks == 2.0);

  CHECK_THROWS_AS(timeliness(s, tr, 0.5, 28, 30), Error);     // no runs start there
  CHECK_THROWS_AS(timeliness({0.1, 0.2}, tr, 0.5), Error);    // grid mismatch
  BenchmarkTruth calm = grid(1, 10);
  CHECK_THROWS_AS(timeliness(std::vector<double>(10, 0.0), calm), Error);
}

TEST_CASE("paired permutation test") {
  Rng rng(17, 0);
  std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  CHECK(permutation_test(a, a, 1000, rng) == 1.0);

  // strong paired shift, Monte Carlo branch (n = 29)
  std::vector<double> x(29), y(29);
  Rng gen(5, 0);
  for (int k = 0; k < 29; ++k) {
    y[k] = gen.normal(0.0, 0.2);
    x[k] = y[k] + 1.0 + gen.normal(0.0, 0.05);
  }
  CHECK(permutation_test(x, y, 20000, rng) < 0.01);

  // exact enumeration agrees with its Monte Carlo estimate
  std::vector<double> d = {1.0, -0.8, 0.6, -0.4, 0.2, 0.1,
                           -0.3, 0.5, -0.2, 0.7, -0.6, 0.05};
  std::vector<double> zero(d.size(), 0.0);
  double exact = permutation_test(d, zero, 4096, rng);  // 2^12 fits
  double mc = permutation_test(d, zero, 4095, rng);     // one short: sampled
  CHECK(exact > 0.0);
  CHECK(exact <= 1.0);
  CHECK(std::fabs(exact - mc) < 0.05);

  // order of the pair only flips the sign of every difference
  CHECK(permutation_test(zero, d, 4096, rng) == exact);

  CHECK_THROWS_AS(permutation_test({1.0}, {2.0}, 100, rng), Error);
  CHECK_THROWS_AS(permutation_test({1.0, 2.0}, {1.0}, 100, rng), Error);
}

TEST_SUITE_END();
