#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "nsieve/rng.hpp"
#include "nsieve/stick_breaking.hpp"

#include "json.hpp"

namespace nsieve {

// One child produced by thinning the balls of a box through its stick.
struct ChildAllocation {
  std::uint64_t index = 0;   // child slot r, 1-based
  std::uint64_t balls = 0;
  double log_factor = 0.0;   // log P_r of the box-local stick environment
};

// Per-generation occupancy record.
struct GenerationStats {
  std::uint32_t generation = 0;
  std::uint64_t occupied = 0;                        // K_n(j)
  std::map<std::uint64_t, std::uint64_t> histogram;  // balls r -> K_{n,j,r}
  std::uint64_t total_balls = 0;
  std::uint64_t large_boxes = 0;  // #{P(v) >= 1/t} when a threshold is tracked
  std::vector<double> log_weights;

  nlohmann::json to_json() const;
};

struct OccupancyOptions {
  bool keep_weights = false;
  // When set, also count boxes with weight P(v) >= 1/t per generation
  // (the counting function of the environment, coupled to the same run).
  std::optional<double> rho_threshold_t;
  std::uint64_t frontier_cap = 10'000'000;
  // Polynomially breaking sticks (cases B, C) park a lone ball at slot r with
  // a ~1/r tail, so slot counts near 1e6 are routine at scale; the guard sits
  // two orders higher and still catches a stuck stick.
  std::uint64_t child_cap = 100'000'000;
};

struct OccupancyRun {
  std::uint64_t balls = 0;
  std::uint32_t max_generation = 0;
  std::uint64_t seed = 0;
  std::vector<GenerationStats> generations;  // index j-1 holds generation j

  nlohmann::json to_json(const EnvironmentCase& env) const;
};

// Sequential binomial thinning of `balls` through a fresh stick for one box:
// child r receives Binomial(m_{r-1}, 1 - W_r) balls. Ball conservation is
// exact by construction.
std::vector<ChildAllocation> allocate_children(std::uint64_t balls,
                                               const EnvironmentCase& env,
                                               Rng& rng,
                                               std::uint64_t child_cap = 1'000'000);

// Breadth-first expansion of occupied boxes only; cost is driven by the
// number of occupied boxes, not by the magnitude of `balls`.
OccupancyRun run_occupancy(std::uint64_t balls, const EnvironmentCase& env,
                           std::uint32_t max_generation, Rng& rng,
                           const OccupancyOptions& opts = {});
OccupancyRun run_occupancy(std::uint64_t balls, const EnvironmentCase& env,
                           std::uint32_t max_generation, std::uint64_t seed,
                           const OccupancyOptions& opts = {});

// K_n^{(s)}(j) = sum_{r >= ceil(n^{1-s})} K_{n,j,r}.
std::uint64_t k_n_s(const GenerationStats& stats, std::uint64_t n, double s);

struct RhoOptions {
  double expected_cap = 1e7;  // on (log t)^j / j!
  std::uint64_t frontier_cap = 10'000'000;
};

// Counting functions rho_j(t) = #{|v| = j : P(v) >= 1/t} for j = 1..j_max on
// one environment realization; requires t > 1. Enumeration prunes a child
// slot as soon as the remaining stick mass cannot clear the threshold.
std::vector<std::uint64_t> rho_generations(const EnvironmentCase& env,
                                           std::uint32_t j_max, double t,
                                           Rng& rng, const RhoOptions& opts = {});
std::uint64_t rho_j(const EnvironmentCase& env, std::uint32_t j, double t,
                    Rng& rng, const RhoOptions& opts = {});

namespace detail {
// Core thinning loop shared with tests that drive fixed stick values.
// `stick(r, rng)` returns W_r; a return of exactly 0 makes child r absorb all
// remaining balls (used by truncated test environments).
std::vector<ChildAllocation> allocate_children_with(
    std::uint64_t balls, const std::function<double(std::uint64_t, Rng&)>& stick,
    Rng& rng, std::uint64_t child_cap);
}  // namespace detail

}  // namespace nsieve
