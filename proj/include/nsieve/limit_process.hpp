#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nsieve/rng.hpp"

namespace nsieve {

// Covariance specification for the Gaussian limit objects:
//   FixedGen{i_1..i_l}:      Cov(N_i, N_j) = 1/(i+j-1)
//   Intermediate{u_1..u_k}:  Cov(R(u), R(v)) = 1/(u+v), u, v > 0
// Both are Cauchy matrices, positive definite for distinct points.
struct CovSpec {
  enum class Kind { FixedGen, Intermediate };
  Kind kind = Kind::Intermediate;
  std::vector<double> points;

  static CovSpec fixed_gen(std::vector<std::uint32_t> indices);
  static CovSpec intermediate(std::vector<double> u_points);
  std::size_t dimension() const { return points.size(); }
};

// Dense row-major symmetric covariance matrix for a covariance spec.
std::vector<double> cov_matrix(const CovSpec& spec);

// Exact-in-distribution sampler: lower-triangular (Cholesky) factor applied
// to iid standard normals. Stateless after construction; shareable.
class LimitSampler {
 public:
  explicit LimitSampler(CovSpec spec);

  std::size_t dimension() const { return spec_.dimension(); }
  const CovSpec& spec() const { return spec_; }
  const std::vector<double>& covariance() const { return cov_; }
  const std::vector<double>& cholesky_factor() const { return chol_; }

  void sample(Rng& rng, std::span<double> out) const;
  std::vector<double> sample(Rng& rng) const;

 private:
  CovSpec spec_;
  std::vector<double> cov_;
  std::vector<double> chol_;
};

// Discretized-path oracle for R(u) = u * int_0^inf e^{-uy} B(y) dy: simulates
// a Brownian path on [0, y_max] with step dt and integrates by trapezoid.
// Kept as an oracle only; the factorized sampler is the primary path.
double pathwise_limit_sample(double u, Rng& rng, double y_max = 40.0,
                             double dt = 1e-3);

}  // namespace nsieve
