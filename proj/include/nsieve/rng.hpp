#pragma once

#include <cstdint>
#include <random>

namespace nsieve {

// SplitMix64 finalizer. Good 64-bit mixing for seed derivation.
std::uint64_t mix64(std::uint64_t z) noexcept;

// Seed splitting rule for parallel replicas: the replica stream r of a master
// seed s is seeded with mix64(s + (r + 1) * 0x9E3779B97F4A7C15). Distinct
// replica indices give independent-looking, reproducible streams.
std::uint64_t replica_seed(std::uint64_t master, std::uint64_t index) noexcept;

// std::mt19937_64 plus the variate samplers used across the project.
//
// The samplers live here instead of relying on std::*_distribution, whose
// results are implementation-defined; a seed must reproduce the same stream
// everywhere. A Rng is single-owner: different threads use different Rng
// instances seeded via replica_seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0,1); by construction never 0 or 1.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate = 1.0);
  double normal();             // standard normal, Box-Muller with cache
  double gamma(double shape);  // Gamma(shape, 1), Marsaglia-Tsang
  double beta(double a, double b);

  // Exact Binomial(n, p) variate. Inversion when n*min(p,1-p) is small,
  // Hormann's BTRS transformed rejection otherwise. Valid for n up to 2^63;
  // never a normal approximation.
  std::uint64_t binomial(std::uint64_t n, double p);

  // Number of boundary (0 or 1) beta draws that had to be resampled.
  std::uint64_t boundary_resamples() const { return boundary_resamples_; }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
  std::uint64_t boundary_resamples_ = 0;
};

}  // namespace nsieve
