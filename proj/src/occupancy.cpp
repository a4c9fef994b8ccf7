#include "nsieve/occupancy.hpp"

#include <cmath>
#include <stdexcept>

#include "nsieve/numerics.hpp"

namespace nsieve {

namespace detail {

std::vector<ChildAllocation> allocate_children_with(
    std::uint64_t balls, const std::function<double(std::uint64_t, Rng&)>& stick,
    Rng& rng, std::uint64_t child_cap) {
  if (balls == 0) throw std::invalid_argument("allocate_children: need at least one ball");
  std::vector<ChildAllocation> out;
  std::uint64_t remaining = balls;
  double log_residual = 0.0;
  std::uint64_t r = 1;
  while (remaining > 0) {
    if (r > child_cap) {
      throw std::runtime_error(
          "allocate_children: child cap exceeded; the stick is not breaking "
          "(diagnostic guard)");
    }
    const double w = stick(r, rng);
    const std::uint64_t hit =
        w == 0.0 ? remaining : rng.binomial(remaining, 1.0 - w);
    if (hit > 0) {
      out.push_back({r, hit, log_residual + std::log1p(-w)});
      remaining -= hit;
    }
    log_residual += std::log(w);
    ++r;
  }
  return out;
}

}  // namespace detail

std::vector<ChildAllocation> allocate_children(std::uint64_t balls,
                                               const EnvironmentCase& env,
                                               Rng& rng, std::uint64_t child_cap) {
  return detail::allocate_children_with(
      balls, [&env](std::uint64_t r, Rng& g) { return env.sample_w(r, g); }, rng,
      child_cap);
}

namespace {

struct Box {
  std::uint64_t balls;
  double log_weight;
};

// Expands one box: thinning while balls remain, plus threshold-driven child
// enumeration while the undistributed stick mass could still clear
// log_threshold (children only get lighter as the residual shrinks).
template <typename Sink>
void expand_box(const Box& box, const EnvironmentCase& env, Rng& rng,
                const std::optional<double>& log_threshold,
                std::uint64_t child_cap, Sink&& sink) {
  std::uint64_t remaining = box.balls;
  double log_residual = 0.0;
  std::uint64_t r = 1;
  for (;;) {
    const bool balls_pending = remaining > 0;
    const bool weight_pending =
        log_threshold && box.log_weight + log_residual >= *log_threshold;
    if (!balls_pending && !weight_pending) break;
    if (r > child_cap) {
      throw std::runtime_error("occupancy: child cap exceeded while expanding a box");
    }
    const double w = env.sample_w(r, rng);
    const std::uint64_t hit = balls_pending ? rng.binomial(remaining, 1.0 - w) : 0;
    const double child_lw = box.log_weight + log_residual + std::log1p(-w);
    remaining -= hit;
    log_residual += std::log(w);
    const bool large = log_threshold && child_lw >= *log_threshold;
    if (hit > 0 || large) sink(Box{hit, child_lw}, large);
    ++r;
  }
}

}  // namespace

OccupancyRun run_occupancy(std::uint64_t balls, const EnvironmentCase& env,
                           std::uint32_t max_generation, Rng& rng,
                           const OccupancyOptions& opts) {
  if (balls == 0) throw std::invalid_argument("run_occupancy: need at least one ball");
  if (max_generation == 0) {
    throw std::invalid_argument("run_occupancy: need at least one generation");
  }
  std::optional<double> log_threshold;
  if (opts.rho_threshold_t) {
    if (!(*opts.rho_threshold_t > 1.0)) {
      throw std::invalid_argument("run_occupancy: rho threshold requires t > 1");
    }
    log_threshold = -std::log(*opts.rho_threshold_t);
  }

  OccupancyRun run;
  run.balls = balls;
  run.max_generation = max_generation;
  std::vector<Box> frontier{{balls, 0.0}};
  std::vector<Box> next;
  for (std::uint32_t g = 1; g <= max_generation; ++g) {
    next.clear();
    GenerationStats stats;
    stats.generation = g;
    for (const Box& box : frontier) {
      expand_box(box, env, rng, log_threshold, opts.child_cap,
                 [&](Box child, bool large) {
                   if (child.balls > 0) {
                     ++stats.occupied;
                     ++stats.histogram[child.balls];
                     stats.total_balls += child.balls;
                     if (opts.keep_weights) stats.log_weights.push_back(child.log_weight);
                   }
                   if (large) ++stats.large_boxes;
                   next.push_back(child);
                 });
      if (next.size() > opts.frontier_cap) {
        throw std::runtime_error(
            "run_occupancy: frontier exceeded the memory budget; lower J or the "
            "rho threshold");
      }
    }
    frontier.swap(next);
    run.generations.push_back(std::move(stats));
  }
  return run;
}

OccupancyRun run_occupancy(std::uint64_t balls, const EnvironmentCase& env,
                           std::uint32_t max_generation, std::uint64_t seed,
                           const OccupancyOptions& opts) {
  Rng rng(seed);
  OccupancyRun run = run_occupancy(balls, env, max_generation, rng, opts);
  run.seed = seed;
  return run;
}

std::uint64_t k_n_s(const GenerationStats& stats, std::uint64_t n, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("k_n_s: s must lie in [0,1]");
  const std::uint64_t threshold = ceil_power(n, 1.0 - s);
  std::uint64_t count = 0;
  for (auto it = stats.histogram.lower_bound(threshold); it != stats.histogram.end(); ++it) {
    count += it->second;
  }
  return count;
}

std::vector<std::uint64_t> rho_generations(const EnvironmentCase& env,
                                           std::uint32_t j_max, double t,
                                           Rng& rng, const RhoOptions& opts) {
  if (j_max == 0) throw std::invalid_argument("rho: generation must be >= 1");
  if (!(t > 1.0)) throw std::domain_error("rho: threshold t must be > 1");
  const double log_t = std::log(t);
  for (std::uint32_t j = 1; j <= j_max; ++j) {
    if (log_poisson_like_term(log_t, j) > std::log(opts.expected_cap)) {
      throw std::runtime_error(
          "rho: expected count (log t)^j/j! exceeds the cap; reduce t or j");
    }
  }
  const double threshold = -log_t;

  std::vector<std::uint64_t> counts(j_max, 0);
  std::vector<double> frontier{0.0};  // log-weights of boxes above threshold
  std::vector<double> next;
  for (std::uint32_t g = 1; g <= j_max; ++g) {
    next.clear();
    for (double node_lw : frontier) {
      double log_residual = 0.0;
      std::uint64_t r = 1;
      while (node_lw + log_residual >= threshold) {
        const double w = env.sample_w(r, rng);
        const double child_lw = node_lw + log_residual + std::log1p(-w);
        if (child_lw >= threshold) next.push_back(child_lw);
        log_residual += std::log(w);
        ++r;
      }
      if (next.size() > opts.frontier_cap) {
        throw std::runtime_error("rho: frontier exceeded the memory budget");
      }
    }
    counts[g - 1] = next.size();
    frontier.swap(next);
  }
  return counts;
}

std::uint64_t rho_j(const EnvironmentCase& env, std::uint32_t j, double t,
                    Rng& rng, const RhoOptions& opts) {
  return rho_generations(env, j, t, rng, opts).back();
}

nlohmann::json GenerationStats::to_json() const {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [r, count] : histogram) hist[std::to_string(r)] = count;
  nlohmann::json j{{"j", generation},
                   {"K", occupied},
                   {"hist", std::move(hist)},
                   {"total_balls", total_balls}};
  if (large_boxes > 0) j["large_boxes"] = large_boxes;
  if (!log_weights.empty()) j["log_weights"] = log_weights;
  return j;
}

nlohmann::json OccupancyRun::to_json(const EnvironmentCase& env) const {
  nlohmann::json gens = nlohmann::json::array();
  for (const auto& g : generations) gens.push_back(g.to_json());
  return nlohmann::json{{"n", balls},
                        {"seed", seed},
                        {"env", env.to_json()},
                        {"J", max_generation},
                        {"generations", std::move(gens)}};
}

}  // namespace nsieve
