#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsieve/branching_walk.hpp"
#include "nsieve/stick_breaking.hpp"

#include "json.hpp"

namespace nsieve {

enum class ExperimentKind {
  FixedGen,
  IntermediateGem01,
  IntermediateGeneral,
  MomentBound,
  IdentityChecks,
};

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

// Rule for the intermediate-level index j_n. The power rule j_n = (log n)^e
// needs e in (0,1) for the GEM(0,1) stick and e in (0,1/3) for a general
// law; an explicit value is taken as-is (the caller owns the regime claim).
struct JnRule {
  enum class Kind { PowerOfLog, Explicit };
  Kind kind = Kind::PowerOfLog;
  double exponent = 0.25;
  double value = 0.0;

  double evaluate(double log_n) const;
  void validate(bool general_law) const;
  static JnRule from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Every pass flag in a report traces back to one of these numbers.
struct ToleranceProfile {
  double mean_band_se = 3.0;          // SE multiplier for exact-identity means
  double fixed_gen_cov_band = 0.05;   // absolute band at t = 100
  double intermediate_cov_band = 0.10;
  double ks_p_min = 0.01;
  double k_rho_gap_max = 0.05;
  double identity_final_max = 0.10;
  double moment_ratio_band = 5.0;     // max/min of bound ratios
  double moment_slope_max = 0.05;     // regression slope of ratio vs log t

  static ToleranceProfile from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::FixedGen;
  EnvironmentCase env = EnvironmentCase::gem01();
  double t = 100.0;                  // fixed_gen horizon t = log n
  std::optional<double> n;           // intermediate: ball count; log n = t otherwise
  JnRule jn;
  std::vector<double> u_points{1.0};
  std::uint32_t ell = 2;             // fixed_gen generations 1..ell
  std::uint64_t replicas = 10'000;
  std::uint64_t seed = 1;
  bool stationary = false;           // moment_bound variant
  bool use_balls = false;            // intermediate: simulate balls instead of rho
  bool alt_normalization = false;    // floor(j_n u)^{1/2} scaling (R-bar variant)
  std::vector<double> t_grid;        // moment_bound / identity_checks
  std::vector<std::uint32_t> j_list; // moment_bound
  double j_exponent = 0.25;          // identity_checks: j(t) = floor(t^e)
  bool keep_samples = false;
  bool keep_traces = false;
  ToleranceProfile tol;
  unsigned threads = 0;              // 0 = hardware default

  void validate() const;
  double log_n() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  std::string note;

  nlohmann::json to_json() const;
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::FixedGen;
  nlohmann::json config;
  std::vector<CheckResult> checks;
  nlohmann::json details = nlohmann::json::object();
  std::uint64_t replicas = 0;
  unsigned threads = 1;
  // Raw normalized samples per point (kept only when config.keep_samples).
  std::vector<std::string> sample_names;
  std::vector<std::vector<double>> samples;
  // Decomposition traces (t, j, count, sum_v, sum_poly) when keep_traces.
  std::vector<std::array<double, 5>> traces;

  bool all_passed() const;
  nlohmann::json to_json() const;
  std::string text_summary() const;
};

// Occupancy-CLT normalizer for the GEM(0,1) environment:
//   floor(j_n)^{1/2} (j-1)! (K - (log n)^j/j!) / (log n)^{j-1/2},
// evaluated through logs. jn <= 0 means jn = j.
double normalize_gem01(double k, double n, std::uint32_t j, double jn = 0.0);

// General-law normalizer: centering (mu^{-1} log n)^j / j!, scaling
// floor(j_n)^{1/2} (j-1)! / (sigma2 mu^{-2j-1} (log n)^{2j-1})^{1/2}.
double normalize_general(double k, double n, std::uint32_t j, double mu,
                         double sigma2, double jn = 0.0);

ExperimentReport run_fixed_gen(const ExperimentConfig& cfg);
ExperimentReport run_intermediate(const ExperimentConfig& cfg);
ExperimentReport run_moment_bound(const ExperimentConfig& cfg);
ExperimentReport run_identity_checks(const ExperimentConfig& cfg);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// "1e9"-style exact ball-count parsing; rejects non-integers and overflow.
std::uint64_t parse_ball_count(const std::string& text);

}  // namespace nsieve
