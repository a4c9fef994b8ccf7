#pragma once

#include <cstdint>
#include <string>

#include "nsieve/rng.hpp"

#include "json.hpp"

namespace nsieve {

// Law of the stick-breaking factor W in the iid case.
struct WLaw {
  enum class Kind { Uniform01, Beta };
  Kind kind = Kind::Uniform01;
  double a = 1.0;
  double b = 1.0;

  static WLaw uniform01() { return {}; }
  static WLaw beta(double a, double b);

  bool is_uniform() const {
    return kind == Kind::Uniform01 || (a == 1.0 && b == 1.0);
  }

  double sample(Rng& rng) const;
  double density(double w, double one_minus_w) const;
  double cdf(double w) const;  // P(W <= w)

  static WLaw from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Residual allocation environments:
//   A: W_r iid copies of a WLaw;
//   B: W_r ~ Beta(alpha r, 1);
//   C: W_r ~ Beta(theta + alpha r, 1 - alpha)  (GEM(alpha, theta)).
class EnvironmentCase {
 public:
  enum class Kind { A, B, C };

  static EnvironmentCase case_a(WLaw w);
  static EnvironmentCase case_b(double alpha);
  static EnvironmentCase case_c(double alpha, double theta);
  // GEM(0,1): case A with uniform W.
  static EnvironmentCase gem01() { return case_a(WLaw::uniform01()); }

  Kind kind() const { return kind_; }
  const WLaw& w_law() const { return w_; }
  double alpha() const { return alpha_; }
  double theta() const { return theta_; }
  bool is_gem01() const { return kind_ == Kind::A && w_.is_uniform(); }

  // Draw W_r for box index r >= 1. Boundary draws (exactly 0 or 1) are
  // resampled inside the Rng's beta sampler.
  double sample_w(std::uint64_t r, Rng& rng) const;

  static EnvironmentCase from_json(const nlohmann::json& j);
  // Accepts shorthand names ("gem01", "uniform") and the JSON object form.
  static EnvironmentCase parse(const std::string& text);
  nlohmann::json to_json() const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::A;
  WLaw w_;
  double alpha_ = 0.0;
  double theta_ = 0.0;
};

// Lazy stream of stick-breaking probabilities P_r = W_1...W_{r-1}(1-W_r).
// Tracks the leftover mass residual_r = W_1...W_r; the infinite sequence is
// never materialized. Below kResidualFloor the stream reports exhaustion
// (no consumer can act on the remaining mass).
class ProbabilityStream {
 public:
  static constexpr double kResidualFloor = 1e-300;

  ProbabilityStream(EnvironmentCase env, std::uint64_t seed)
      : env_(std::move(env)), rng_(seed) {}

  struct Step {
    double p;
    double residual_after;
  };

  // Emits p_r and advances; throws if the stream is exhausted.
  Step next();

  double residual() const { return residual_; }
  std::uint64_t index() const { return index_; }  // next r to emit, 1-based
  bool exhausted() const { return residual_ < kResidualFloor; }
  std::uint64_t boundary_resamples() const { return rng_.boundary_resamples(); }

 private:
  EnvironmentCase env_;
  Rng rng_;
  double residual_ = 1.0;
  std::uint64_t index_ = 1;
};

}  // namespace nsieve
