// Python bindings for the main operations. Structured inputs (environments,
// experiment configs) travel as JSON strings matching the CLI formats;
// numeric results come back as native lists/tuples, reports as JSON strings.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "json.hpp"

#include "nsieve/acceptance.hpp"
#include "nsieve/branching_walk.hpp"
#include "nsieve/experiments.hpp"
#include "nsieve/limit_process.hpp"
#include "nsieve/numerics.hpp"
#include "nsieve/occupancy.hpp"
#include "nsieve/renewal.hpp"
#include "nsieve/stick_breaking.hpp"

namespace py = pybind11;
using namespace nsieve;

namespace {

EnvironmentCase env_from(const std::string& text) { return EnvironmentCase::parse(text); }

WLaw law_from(const std::string& text) {
  const EnvironmentCase env = env_from(text);
  if (env.kind() != EnvironmentCase::Kind::A) {
    throw std::invalid_argument("an iid stick law is required (uniform or beta:a,b)");
  }
  return env.w_law();
}

}  // namespace

PYBIND11_MODULE(nested_sieve, m) {
  m.doc() =
      "Nested occupancy scheme in stick-breaking random environments: "
      "samplers, renewal tables, Gaussian limit objects and experiment "
      "harness. Environments are given as 'gem01', 'uniform', 'beta:a,b', "
      "'caseB:alpha', 'caseC:alpha,theta' or the JSON object form.";

  py::register_exception<std::invalid_argument>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "stick_probabilities",
      [](const std::string& env, std::uint64_t seed, std::size_t count) {
        ProbabilityStream stream(env_from(env), seed);
        std::vector<double> ps;
        ps.reserve(count);
        while (ps.size() < count && !stream.exhausted()) {
          ps.push_back(stream.next().p);
        }
        return py::make_tuple(ps, stream.residual());
      },
      py::arg("env"), py::arg("seed"), py::arg("count"),
      "First stick-breaking probabilities P_1..P_count and the leftover mass.");

  m.def(
      "run_occupancy",
      [](const std::string& n, const std::string& env, std::uint32_t generations,
         std::uint64_t seed, bool keep_weights, std::optional<double> rho_threshold) {
        OccupancyOptions opts;
        opts.keep_weights = keep_weights;
        opts.rho_threshold_t = rho_threshold;
        const EnvironmentCase e = env_from(env);
        const OccupancyRun run =
            nsieve::run_occupancy(parse_ball_count(n), e, generations, seed, opts);
        return run.to_json(e).dump();
      },
      py::arg("n"), py::arg("env"), py::arg("generations"), py::arg("seed"),
      py::arg("keep_weights") = false, py::arg("rho_threshold") = std::nullopt,
      "One occupancy run; returns the per-generation stats record as JSON.");

  m.def(
      "rho_generations",
      [](const std::string& env, std::uint32_t j_max, double t, std::uint64_t seed) {
        Rng rng(seed);
        return nsieve::rho_generations(env_from(env), j_max, t, rng);
      },
      py::arg("env"), py::arg("j_max"), py::arg("t"), py::arg("seed"),
      "Counting function rho_j(t) for j = 1..j_max on one environment draw.");

  m.def(
      "sample_prw_points",
      [](const std::string& law, double t_max, std::uint64_t seed, bool stationary) {
        Rng rng(seed);
        return nsieve::sample_prw_points(PerturbedWalkLaw::from_w(law_from(law)), t_max,
                                         rng, stationary)
            .points;
      },
      py::arg("law"), py::arg("t_max"), py::arg("seed"), py::arg("stationary") = false);

  m.def(
      "count_generations",
      [](const std::string& law, std::uint32_t j_max, double t, std::uint64_t seed,
         bool stationary) {
        Rng rng(seed);
        return nsieve::count_generations(PerturbedWalkLaw::from_w(law_from(law)), j_max,
                                         t, rng, stationary);
      },
      py::arg("law"), py::arg("j_max"), py::arg("t"), py::arg("seed"),
      py::arg("stationary") = false,
      "Branching-walk counts N_1(t)..N_{j_max}(t) on one coupled tree.");

  m.def(
      "law_constants",
      [](const std::string& law) {
        const auto table =
            PerturbedWalkLaw::from_w(law_from(law));
        const auto& k = table.constants();
        py::dict d;
        d["m"] = k.m;
        d["s2"] = k.s2;
        d["mu"] = k.mu;
        d["sigma2"] = k.sigma2;
        d["mean_eta"] = k.mean_eta;
        d["mean_xi2"] = k.mean_xi2;
        d["c0"] = k.c0;
        d["cbar"] = k.cbar;
        d["c"] = k.c;
        return d;
      },
      py::arg("law"));

  m.def(
      "renewal_table",
      [](const std::string& law, double step, double t_max, std::uint32_t j_max,
         bool stationary) {
        const auto table =
            build_renewal_table(PerturbedWalkLaw::from_w(law_from(law)), step, t_max,
                                j_max, stationary);
        py::dict d;
        std::vector<double> ts(table.grid.count);
        for (std::size_t k = 0; k < table.grid.count; ++k) ts[k] = table.grid.node(k);
        d["t"] = ts;
        d["U"] = table.U;
        d["V"] = table.V;
        if (stationary) d["Vbar"] = table.Vbar;
        py::list vj;
        for (std::uint32_t j = 1; j <= table.j_max(); ++j) {
          std::vector<double> row(table.grid.count);
          for (std::size_t k = 0; k < table.grid.count; ++k) row[k] = table.vj_node(j, k);
          vj.append(row);
        }
        d["Vj"] = vj;
        d["constants"] = table.constants_json().dump();
        return d;
      },
      py::arg("law"), py::arg("step"), py::arg("t_max"), py::arg("j_max"),
      py::arg("stationary") = false);

  m.def("erlang_tail", &nsieve::erlang_tail, py::arg("k"), py::arg("x"));

  m.def(
      "k_n_s",
      [](const std::map<std::uint64_t, std::uint64_t>& histogram, std::uint64_t n,
         double s) {
        GenerationStats stats;
        stats.histogram = histogram;
        for (const auto& [r, c] : histogram) stats.occupied += c;
        return nsieve::k_n_s(stats, n, s);
      },
      py::arg("histogram"), py::arg("n"), py::arg("s"),
      "Truncated occupancy count: boxes holding at least ceil(n^{1-s}) balls.");

  m.def(
      "expansion_bounds",
      [](std::uint32_t j, double t, double c, double m_) {
        const auto b = nsieve::expansion_bounds(j, t, c, m_);
        return py::make_tuple(b.full_sum, b.simplified, b.simplified_applicable);
      },
      py::arg("j"), py::arg("t"), py::arg("c"), py::arg("m"));

  m.def(
      "cov_matrix",
      [](const std::string& kind, const std::vector<double>& points) {
        CovSpec spec;
        if (kind == "intermediate") {
          spec = CovSpec::intermediate(points);
        } else if (kind == "fixed") {
          std::vector<std::uint32_t> idx;
          for (double p : points) idx.push_back(static_cast<std::uint32_t>(p));
          spec = CovSpec::fixed_gen(idx);
        } else {
          throw std::invalid_argument("kind must be 'intermediate' or 'fixed'");
        }
        const auto flat = nsieve::cov_matrix(spec);
        const std::size_t k = spec.dimension();
        std::vector<std::vector<double>> rows(k, std::vector<double>(k));
        for (std::size_t i = 0; i < k; ++i) {
          for (std::size_t j = 0; j < k; ++j) rows[i][j] = flat[i * k + j];
        }
        return rows;
      },
      py::arg("kind"), py::arg("points"));

  m.def(
      "sample_limit",
      [](const std::string& kind, const std::vector<double>& points,
         std::size_t count, std::uint64_t seed) {
        CovSpec spec = kind == "fixed"
                           ? CovSpec::fixed_gen([&] {
                               std::vector<std::uint32_t> idx;
                               for (double p : points) {
                                 idx.push_back(static_cast<std::uint32_t>(p));
                               }
                               return idx;
                             }())
                           : CovSpec::intermediate(points);
        const LimitSampler sampler(spec);
        std::vector<std::vector<double>> out(count,
                                             std::vector<double>(sampler.dimension()));
        for (std::size_t i = 0; i < count; ++i) {
          Rng rng(replica_seed(seed, i));
          sampler.sample(rng, out[i]);
        }
        return out;
      },
      py::arg("kind"), py::arg("points"), py::arg("count"), py::arg("seed"));

  m.def(
      "pathwise_limit_sample",
      [](double u, std::uint64_t seed, double y_max, double dt) {
        Rng rng(seed);
        return nsieve::pathwise_limit_sample(u, rng, y_max, dt);
      },
      py::arg("u"), py::arg("seed"), py::arg("y_max") = 40.0, py::arg("dt") = 1e-3);

  m.def("normalize_gem01", &normalize_gem01, py::arg("k"), py::arg("n"), py::arg("j"),
        py::arg("jn") = 0.0);
  m.def("normalize_general", &normalize_general, py::arg("k"), py::arg("n"),
        py::arg("j"), py::arg("mu"), py::arg("sigma2"), py::arg("jn") = 0.0);

  m.def(
      "parse_ball_count",
      [](const std::string& text) { return nsieve::parse_ball_count(text); },
      py::arg("text"));

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const auto cfg =
            ExperimentConfig::from_json(nlohmann::json::parse(config_json));
        return run_experiment(cfg).to_json().dump();
      },
      py::arg("config_json"),
      "Runs a configured experiment; returns the report as JSON.");

  m.def(
      "run_acceptance",
      [](const std::string& profile, std::uint64_t seed, unsigned threads) {
        AcceptanceOptions opts;
        opts.profile = acceptance_profile_from_string(profile);
        opts.seed = seed;
        opts.threads = threads;
        std::ostringstream out;
        const auto results = nsieve::run_acceptance(opts, out);
        return py::make_tuple(all_passed(results), out.str());
      },
      py::arg("profile") = "smoke", py::arg("seed") = 20250809,
      py::arg("threads") = 0);
}
