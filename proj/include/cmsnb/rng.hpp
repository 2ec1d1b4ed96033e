#pragma once
// Seeded random streams.  Every consumer derives its own stream from the run
// seed plus a stream id, so e.g. the simulated truth is unchanged when only
// the count stream advances differently.

#include <cstdint>
#include <random>

namespace cmsnb {

// splitmix64: cheap, well-mixed seed expansion
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Rng {
  std::mt19937_64 g;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : g(splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1))) {}

  double unif() { return std::uniform_real_distribution<double>(0.0, 1.0)(g); }
  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(g);
  }
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(g);
  }
  double cauchy(double loc, double scale) {
    return std::cauchy_distribution<double>(loc, scale)(g);
  }
  long poisson(double mean) {
    return std::poisson_distribution<long>(mean)(g);
  }
  std::uint64_t integer(std::uint64_t n) {  // uniform on {0, .., n-1}
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(g);
  }

  // negative binomial with mean `mean` and overdispersion `r`, drawn as a
  // gamma-mixed Poisson
  long neg_binomial(double mean, double r) {
    if (mean <= 0.0) return 0;
    double lambda = gamma(r, mean / r);
    return lambda > 0.0 ? poisson(lambda) : 0;
  }

  // index draw from unnormalized nonnegative weights by cumulative-sum
  // inversion; returns -1 when the total mass is zero
  int categorical(const double* w, int K) {
    double total = 0.0;
    for (int k = 0; k < K; ++k) total += w[k];
    if (!(total > 0.0)) return -1;
    double u = unif() * total, c = 0.0;
    for (int k = 0; k < K; ++k) {
      c += w[k];
      if (u <= c) return k;
    }
    return K - 1;  // guard against round-off past the last bin
  }
};

}  // namespace cmsnb
