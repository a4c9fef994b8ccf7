// nested-sieve: batch front end for the occupancy / branching-walk laboratory.
//
// Subcommands: simulate, rho, renewal, limit-sample, clt, verify-all.
// Exit codes: 0 success, 1 statistical acceptance failure, 2 configuration error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "nsieve/acceptance.hpp"
#include "nsieve/branching_walk.hpp"
#include "nsieve/experiments.hpp"
#include "nsieve/limit_process.hpp"
#include "nsieve/numerics.hpp"
#include "nsieve/occupancy.hpp"
#include "nsieve/renewal.hpp"
#include "nsieve/stats.hpp"
#include "nsieve/stick_breaking.hpp"

namespace {

using nlohmann::json;

unsigned env_threads_default() {
  if (const char* v = std::getenv("NESTED_SIEVE_THREADS")) {
    const long n = std::strtol(v, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return 0;  // resolved to hardware concurrency downstream
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file '" + path + "'");
  out << text;
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nsieve::WLaw parse_law(const std::string& text) {
  const nsieve::EnvironmentCase env = nsieve::EnvironmentCase::parse(text);
  if (env.kind() != nsieve::EnvironmentCase::Kind::A) {
    throw std::invalid_argument("this command needs an iid stick law (uniform or beta:a,b)");
  }
  return env.w_law();
}

struct CommonOpts {
  std::string output = "-";
  std::uint64_t seed = 1;
  unsigned threads = env_threads_default();
};

int cmd_simulate(const std::string& env_text, const std::string& n_text,
                 std::uint32_t generations, std::uint64_t replicas,
                 const CommonOpts& common, const std::string& csv_path,
                 bool keep_weights) {
  const nsieve::EnvironmentCase env = nsieve::EnvironmentCase::parse(env_text);
  const std::uint64_t balls = nsieve::parse_ball_count(n_text);
  nsieve::OccupancyOptions opts;
  opts.keep_weights = keep_weights;

  std::vector<nsieve::OccupancyRun> runs(replicas);
  nsieve::parallel_for(replicas, common.threads, [&](std::size_t r) {
    runs[r] = nsieve::run_occupancy(balls, env, generations,
                                    nsieve::replica_seed(common.seed, r), opts);
  });

  json records = json::array();
  for (const auto& run : runs) records.push_back(run.to_json(env));
  write_text(common.output, json{{"replicas", replicas},
                                 {"master_seed", common.seed},
                                 {"runs", std::move(records)}}
                                .dump(2) +
                                "\n");
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::invalid_argument("cannot open CSV file '" + csv_path + "'");
    csv << "replica";
    for (std::uint32_t j = 1; j <= generations; ++j) csv << ",K_" << j;
    csv << '\n';
    for (std::size_t r = 0; r < runs.size(); ++r) {
      csv << r;
      for (const auto& g : runs[r].generations) csv << ',' << g.occupied;
      csv << '\n';
    }
  }
  return 0;
}

int cmd_rho(const std::string& env_text, std::uint32_t generation, double t,
            std::optional<double> log_t, std::uint64_t replicas,
            const CommonOpts& common) {
  const nsieve::EnvironmentCase env = nsieve::EnvironmentCase::parse(env_text);
  const double threshold = log_t ? std::exp(*log_t) : t;
  std::vector<std::vector<double>> counts(generation, std::vector<double>(replicas));
  nsieve::parallel_for(replicas, common.threads, [&](std::size_t r) {
    nsieve::Rng rng(nsieve::replica_seed(common.seed, r));
    const auto c = nsieve::rho_generations(env, generation, threshold, rng);
    for (std::uint32_t j = 0; j < generation; ++j) {
      counts[j][r] = static_cast<double>(c[j]);
    }
  });
  json per_gen = json::array();
  for (std::uint32_t j = 1; j <= generation; ++j) {
    const auto& xs = counts[j - 1];
    json entry{{"j", j},
               {"mean", nsieve::mean(xs)},
               {"se", nsieve::mean_standard_error(xs)}};
    if (env.is_gem01()) {
      entry["uniform_target"] = nsieve::poisson_like_term(std::log(threshold), j);
    }
    per_gen.push_back(std::move(entry));
  }
  write_text(common.output, json{{"env", env.to_json()},
                                 {"t", threshold},
                                 {"log_t", std::log(threshold)},
                                 {"replicas", replicas},
                                 {"seed", common.seed},
                                 {"generations", std::move(per_gen)}}
                                .dump(2) +
                                "\n");
  return 0;
}

int cmd_renewal(const std::string& law_text, double step, double t_max,
                std::uint32_t j_max, bool stationary, const CommonOpts& common,
                const std::string& constants_path) {
  const nsieve::PerturbedWalkLaw law =
      nsieve::PerturbedWalkLaw::from_w(parse_law(law_text));
  const nsieve::RenewalTable table =
      nsieve::build_renewal_table(law, step, t_max, j_max, stationary);
  std::ostringstream csv;
  table.write_csv(csv);
  write_text(common.output, csv.str());
  if (!constants_path.empty()) {
    write_text(constants_path, table.constants_json().dump(2) + "\n");
  }
  return 0;
}

int cmd_limit_sample(const std::string& points_csv, const std::string& kind,
                     std::uint64_t count, const CommonOpts& common,
                     const std::string& cov_path) {
  std::vector<double> points;
  std::istringstream in(points_csv);
  std::string tok;
  while (std::getline(in, tok, ',')) points.push_back(std::stod(tok));
  nsieve::CovSpec spec;
  if (kind == "intermediate") {
    spec = nsieve::CovSpec::intermediate(points);
  } else if (kind == "fixed") {
    std::vector<std::uint32_t> idx;
    for (double p : points) idx.push_back(static_cast<std::uint32_t>(p));
    spec = nsieve::CovSpec::fixed_gen(idx);
  } else {
    throw std::invalid_argument("limit-sample kind must be intermediate|fixed");
  }
  const nsieve::LimitSampler sampler(spec);
  const std::size_t k = sampler.dimension();
  std::vector<std::vector<double>> samples(count, std::vector<double>(k));
  nsieve::parallel_for(count, common.threads, [&](std::size_t i) {
    nsieve::Rng rng(nsieve::replica_seed(common.seed, i));
    sampler.sample(rng, samples[i]);
  });
  std::ostringstream csv;
  for (std::size_t d = 0; d < k; ++d) csv << (d ? "," : "") << "p" << points[d];
  csv << '\n';
  for (const auto& row : samples) {
    for (std::size_t d = 0; d < k; ++d) csv << (d ? "," : "") << csv_number(row[d]);
    csv << '\n';
  }
  write_text(common.output, csv.str());
  if (!cov_path.empty()) {
    const auto& cov = sampler.covariance();
    json rows = json::array();
    for (std::size_t i = 0; i < k; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < k; ++j) row.push_back(cov[i * k + j]);
      rows.push_back(std::move(row));
    }
    write_text(cov_path, json{{"points", points}, {"cov", rows}}.dump(2) + "\n");
  }
  return 0;
}

int cmd_clt(const std::string& config_path, const CommonOpts& common,
            std::optional<std::uint64_t> replicas_override,
            std::optional<std::uint64_t> seed_override, const std::string& format,
            const std::string& samples_csv, const std::string& traces_csv) {
  std::ifstream in(config_path);
  if (!in) throw std::invalid_argument("cannot open config '" + config_path + "'");
  json cfg_json = json::parse(in);
  nsieve::ExperimentConfig cfg = nsieve::ExperimentConfig::from_json(cfg_json);
  if (replicas_override) cfg.replicas = *replicas_override;
  if (seed_override) cfg.seed = *seed_override;
  if (common.threads) cfg.threads = common.threads;
  if (!samples_csv.empty()) cfg.keep_samples = true;
  if (!traces_csv.empty()) cfg.keep_traces = true;
  const nsieve::ExperimentReport report = nsieve::run_experiment(cfg);

  if (format == "json") {
    write_text(common.output, report.to_json().dump(2) + "\n");
  } else if (format == "text") {
    write_text(common.output, report.text_summary());
  } else {
    throw std::invalid_argument("format must be json|text");
  }
  if (!samples_csv.empty()) {
    std::ofstream csv(samples_csv);
    for (std::size_t i = 0; i < report.sample_names.size(); ++i) {
      csv << (i ? "," : "") << report.sample_names[i];
    }
    csv << '\n';
    if (!report.samples.empty()) {
      for (std::size_t r = 0; r < report.samples.front().size(); ++r) {
        for (std::size_t i = 0; i < report.samples.size(); ++i) {
          csv << (i ? "," : "") << csv_number(report.samples[i][r]);
        }
        csv << '\n';
      }
    }
  }
  if (!traces_csv.empty()) {
    std::ofstream csv(traces_csv);
    csv << "t,j,count,sum_v,sum_poly\n";
    for (const auto& row : report.traces) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        csv << (i ? "," : "") << csv_number(row[i]);
      }
      csv << '\n';
    }
  }
  return report.all_passed() ? 0 : 1;
}

int cmd_verify_all(const std::string& profile, const CommonOpts& common) {
  nsieve::AcceptanceOptions opts;
  opts.profile = nsieve::acceptance_profile_from_string(profile);
  opts.seed = common.seed;
  opts.threads = common.threads;
  const auto results = nsieve::run_acceptance(opts, std::cout);
  return nsieve::all_passed(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nested occupancy scheme and branching-walk laboratory"};
  app.require_subcommand(1);

  CommonOpts common;

  auto* sim = app.add_subcommand("simulate", "occupancy runs: per-generation stats as JSON");
  std::string sim_env = "gem01", sim_n = "1000", sim_csv;
  std::uint32_t sim_gens = 3;
  std::uint64_t sim_replicas = 1;
  bool sim_weights = false;
  sim->add_option("--env", sim_env,
                  "environment (gem01|uniform|beta:a,b|caseB:alpha|caseC:a,t|JSON)");
  sim->add_option("--n", sim_n, "ball count (scientific notation accepted, e.g. 1e9)");
  sim->add_option("--J", sim_gens, "generations to simulate");
  sim->add_option("--replicas", sim_replicas, "independent runs");
  sim->add_option("--seed", common.seed, "master seed");
  sim->add_option("--threads", common.threads, "worker threads (0 = all cores)");
  sim->add_option("--out", common.output, "output path (- for stdout)");
  sim->add_option("--csv", sim_csv, "optional CSV matrix of K_n(j) across replicas");
  sim->add_flag("--weights", sim_weights, "record log-weights of occupied boxes");

  auto* rho = app.add_subcommand("rho", "Monte Carlo of the box-counting function rho_j(t)");
  std::string rho_env = "gem01";
  std::uint32_t rho_gen = 1;
  double rho_t = 100.0;
  std::optional<double> rho_log_t;
  std::uint64_t rho_replicas = 10'000;
  rho->add_option("--env", rho_env, "environment");
  rho->add_option("--j", rho_gen, "generation");
  rho->add_option("--t", rho_t, "weight threshold (counts P(v) >= 1/t)");
  rho->add_option("--log-t", rho_log_t, "set the threshold as e^{log-t}");
  rho->add_option("--replicas", rho_replicas, "replicas");
  rho->add_option("--seed", common.seed, "master seed");
  rho->add_option("--threads", common.threads, "worker threads");
  rho->add_option("--out", common.output, "output path");

  auto* ren = app.add_subcommand("renewal", "renewal tables U, V, Vbar, V_j as CSV");
  ren->set_help_flag("--help", "print help");  // frees -h for the grid step
  std::string ren_law = "uniform", ren_constants;
  double ren_h = 0.01, ren_tmax = 100.0;
  std::uint32_t ren_jmax = 4;
  bool ren_stationary = false;
  ren->add_option("--law", ren_law, "stick law (uniform|beta:a,b)");
  ren->add_option("--h", ren_h, "grid step");
  ren->add_option("--tmax", ren_tmax, "grid end");
  ren->add_option("--jmax", ren_jmax, "deepest convolution V_j");
  ren->add_flag("--stationary", ren_stationary, "also tabulate Vbar and Vbar_j");
  ren->add_option("--out", common.output, "CSV output path");
  ren->add_option("--constants", ren_constants, "write the law-constants JSON block here");

  auto* lim = app.add_subcommand("limit-sample", "exact draws of the Gaussian limit vector");
  std::string lim_points = "1,2", lim_kind = "intermediate", lim_cov;
  std::uint64_t lim_count = 100'000;
  lim->add_option("--points", lim_points, "comma-separated u points (or generation indices)");
  lim->add_option("--kind", lim_kind, "intermediate (cov 1/(u+v)) or fixed (cov 1/(i+j-1))");
  lim->add_option("--count", lim_count, "number of samples");
  lim->add_option("--seed", common.seed, "master seed");
  lim->add_option("--threads", common.threads, "worker threads");
  lim->add_option("--out", common.output, "CSV output path");
  lim->add_option("--cov", lim_cov, "write the covariance matrix JSON here");

  auto* clt = app.add_subcommand("clt", "run a configured experiment and emit its report");
  std::string clt_config, clt_format = "json", clt_samples, clt_traces;
  std::optional<std::uint64_t> clt_replicas, clt_seed;
  clt->add_option("--config", clt_config, "experiment config JSON")->required();
  clt->add_option("--replicas", clt_replicas, "override replica count");
  clt->add_option("--seed", clt_seed, "override seed");
  clt->add_option("--threads", common.threads, "worker threads");
  clt->add_option("--format", clt_format, "json|text");
  clt->add_option("--out", common.output, "report output path");
  clt->add_option("--dump-samples", clt_samples, "write normalized samples CSV here");
  clt->add_option("--dump-traces", clt_traces, "write decomposition traces CSV here");

  auto* ver = app.add_subcommand("verify-all", "run the statistical acceptance suite");
  std::string ver_profile = "desk";
  ver->add_option("--profile", ver_profile, "smoke|desk|deep");
  ver->add_option("--seed", common.seed, "master seed");
  ver->add_option("--threads", common.threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(sim_env, sim_n, sim_gens, sim_replicas, common, sim_csv,
                          sim_weights);
    }
    if (rho->parsed()) {
      return cmd_rho(rho_env, rho_gen, rho_t, rho_log_t, rho_replicas, common);
    }
    if (ren->parsed()) {
      return cmd_renewal(ren_law, ren_h, ren_tmax, ren_jmax, ren_stationary, common,
                         ren_constants);
    }
    if (lim->parsed()) {
      return cmd_limit_sample(lim_points, lim_kind, lim_count, common, lim_cov);
    }
    if (clt->parsed()) {
      return cmd_clt(clt_config, common, clt_replicas, clt_seed, clt_format,
                     clt_samples, clt_traces);
    }
    if (ver->parsed()) {
      return cmd_verify_all(ver_profile, common);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
