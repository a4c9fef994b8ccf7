#include "nsieve/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <array>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "nsieve/branching_walk.hpp"
#include "nsieve/experiments.hpp"
#include "nsieve/limit_process.hpp"
#include "nsieve/numerics.hpp"
#include "nsieve/occupancy.hpp"
#include "nsieve/renewal.hpp"
#include "nsieve/stats.hpp"
#include "nsieve/stick_breaking.hpp"

namespace nsieve {

AcceptanceProfile acceptance_profile_from_string(const std::string& s) {
  if (s == "smoke") return AcceptanceProfile::Smoke;
  if (s == "desk") return AcceptanceProfile::Desk;
  if (s == "deep") return AcceptanceProfile::Deep;
  throw std::invalid_argument("unknown profile '" + s + "' (smoke|desk|deep)");
}

namespace {

struct Sizes {
  std::uint64_t rho_replicas;
  std::uint64_t fixed_gen_replicas;
  std::uint64_t limit_samples;
  std::uint64_t pathwise_paths;
  std::uint64_t moment_replicas;
  std::uint64_t identity_replicas;
  std::uint64_t property_cases;
  std::uint64_t oracle_runs;
  double fixed_cov_band;
  double pathwise_band;  // absolute band on |Var - 0.5|
};

Sizes sizes_for(AcceptanceProfile p) {
  switch (p) {
    case AcceptanceProfile::Smoke:
      return {5'000, 1'000, 100'000, 4'000, 500, 2'000, 200, 20'000, 0.15,
              std::max(0.01, 3.0 * 0.5 * std::sqrt(2.0 / 4'000))};
    case AcceptanceProfile::Desk:
      return {100'000, 10'000, 1'000'000, 60'000, 4'000, 10'000, 1'000, 100'000,
              0.05, 0.01};
    case AcceptanceProfile::Deep:
      return {1'000'000, 40'000, 4'000'000, 240'000, 20'000, 40'000, 4'000,
              400'000, 0.05, 0.01};
  }
  throw std::logic_error("unreachable");
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// --- 1. Exact mean identity: E rho_j(e^t) = t^j/j! at (j,t) in {(1..3,10)}.
CriterionResult criterion_rho_means(const AcceptanceOptions& o, const Sizes& s) {
  CriterionResult res{1, "rho mean identity (uniform), targets 10 / 50 / 166.67"};
  const EnvironmentCase env = EnvironmentCase::gem01();
  const double t = 10.0;
  const double threshold = std::exp(t);
  std::vector<std::vector<double>> counts(3, std::vector<double>(s.rho_replicas));
  parallel_for(s.rho_replicas, o.threads, [&](std::size_t r) {
    Rng rng(replica_seed(o.seed ^ 0x01, r));
    const auto c = rho_generations(env, 3, threshold, rng);
    for (int j = 0; j < 3; ++j) counts[j][r] = static_cast<double>(c[j]);
  });
  bool ok = true;
  std::ostringstream msg;
  for (int j = 1; j <= 3; ++j) {
    const double target = poisson_like_term(t, j);
    const double m = mean(counts[j - 1]);
    const double se = mean_standard_error(counts[j - 1]);
    const bool pass = std::abs(m - target) <= 3.0 * se;
    ok = ok && pass;
    msg << "j=" << j << ": " << fmt(m) << " vs " << fmt(target) << " (3SE "
           << fmt(3.0 * se) << (pass ? ", ok) " : ", FAIL) ");
  }
  res.passed = ok;
  res.detail = msg.str();
  return res;
}

// --- 2. Renewal exactness for the uniform law: V = t within 2h, V_j = t^j/j!
// within the accumulated convolution tolerance.
CriterionResult criterion_renewal_exact(const AcceptanceOptions&, const Sizes&) {
  CriterionResult res{2, "renewal exactness (uniform): V=t within 2h, V_j within tolerance"};
  const double h = 0.01;
  const RenewalTable table =
      build_renewal_table(PerturbedWalkLaw::uniform(), h, 50.0, 6, false);
  double worst_v = 0.0;
  for (std::size_t k = 0; k < table.grid.count; ++k) {
    worst_v = std::max(worst_v, std::abs(table.V[k] - table.grid.node(k)));
  }
  bool ok = worst_v < 2.0 * h;
  std::ostringstream msg;
  msg << "max|V-t|=" << fmt(worst_v) << " (< " << fmt(2.0 * h) << ") ";
  for (std::uint32_t j = 2; j <= 6; ++j) {
    double worst = 0.0, worst_allowed = 0.0;
    bool j_ok = true;
    for (std::size_t k = 0; k < table.grid.count; ++k) {
      const double t = table.grid.node(k);
      const double dev = std::abs(table.vj_node(j, k) - poisson_like_term(t, j));
      const double allowed = j * 2.0 * h * poisson_like_term(t, j - 1);
      if (dev > allowed && dev > 1e-12) {
        j_ok = false;
        if (dev - allowed > worst - worst_allowed) {
          worst = dev;
          worst_allowed = allowed;
        }
      }
    }
    ok = ok && j_ok;
    if (!j_ok) msg << "V_" << j << " dev " << fmt(worst) << " > " << fmt(worst_allowed) << " ";
  }
  if (ok) msg << "V_2..V_6 within accumulated tolerance";
  res.passed = ok;
  res.detail = msg.str();
  return res;
}

// --- 3. Two-terms expansion bounds on V_j for uniform and Beta(2,1).
CriterionResult criterion_expansion_bounds(const AcceptanceOptions&, const Sizes&) {
  CriterionResult res{3, "V_j expansion bounds (uniform, Beta(2,1)), j <= 6"};
  bool ok = true;
  std::ostringstream msg;
  for (const WLaw& w : {WLaw::uniform01(), WLaw::beta(2.0, 1.0)}) {
    const PerturbedWalkLaw law = PerturbedWalkLaw::from_w(w);
    const double m = law.constants().m;
    const double c = law.constants().c;
    const RenewalTable table = build_renewal_table(law, 0.01, 50.0, 6, false);
    double worst_margin = std::numeric_limits<double>::infinity();
    bool law_ok = true;
    for (std::uint32_t j = 1; j <= 6; ++j) {
      for (std::size_t k = 0; k < table.grid.count; ++k) {
        const double t = table.grid.node(k);
        const double center = poisson_like_term(t, j, m);
        const auto bounds = expansion_bounds(j, t, c, m);
        const double dev = std::abs(table.vj_node(j, k) - center);
        const double slack = 1e-9 * std::max(1.0, bounds.full_sum);
        if (dev > bounds.full_sum + slack) law_ok = false;
        worst_margin = std::min(worst_margin, bounds.full_sum - dev);
        if (bounds.simplified_applicable &&
            bounds.full_sum > bounds.simplified * (1.0 + 1e-12)) {
          law_ok = false;
        }
      }
    }
    ok = ok && law_ok;
    msg << w.to_json().dump() << ": " << (law_ok ? "ok" : "FAIL")
           << " (min margin " << fmt(worst_margin) << ") ";
  }
  res.passed = ok;
  res.detail = msg.str();
  return res;
}

// --- 4. Fixed-generation CLT at t = log n = 100 through rho = N_j(log n).
CriterionResult criterion_fixed_gen(const AcceptanceOptions& o, const Sizes& s) {
  CriterionResult res{4, "fixed-generation CLT covariance and marginals (t=100, l=2)"};
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::FixedGen;
  cfg.t = 100.0;
  cfg.ell = 2;
  cfg.replicas = s.fixed_gen_replicas;
  cfg.seed = o.seed ^ 0x04;
  cfg.threads = o.threads;
  cfg.tol.fixed_gen_cov_band = s.fixed_cov_band;
  cfg.keep_samples = true;
  const ExperimentReport rep = run_fixed_gen(cfg);
  bool ok = true;
  std::ostringstream msg;
  for (const auto& c : rep.checks) {
    if (c.name.rfind("cov_", 0) == 0 || c.name.rfind("ks_", 0) == 0) {
      ok = ok && c.passed;
      msg << c.name << "=" << fmt(c.value) << (c.passed ? " " : " FAIL ");
    }
  }
  if (!ok) {
    // The count N_i(t) is integer-valued, so Z_i lives on a lattice of width
    // delta_i = (i-1)!/t^{i-1/2}; the one-sample KS distance to the
    // continuous normal is floored at ~phi(0) delta_i / 2 independently of
    // the replica count. Report that floor plus a cell-dithered diagnostic,
    // which tests the law against the lattice discretization of the normal.
    for (std::uint32_t i = 1; i <= cfg.ell; ++i) {
      const double delta =
          std::exp(log_factorial(std::uint64_t{i} - 1) - (i - 0.5) * std::log(cfg.t));
      const double sd = std::sqrt(1.0 / (2.0 * i - 1.0));
      const double floor_d = 0.3989422804014327 * delta / (2.0 * sd);
      std::vector<double> dithered = rep.samples[i - 1];
      Rng dith(o.seed ^ 0x1234);
      for (double& z : dithered) z += delta * (dith.uniform01() - 0.5);
      const KsResult ks = ks_one_sample(
          dithered, [sd](double x) { return normal_cdf(x, 0.0, sd); });
      msg << "| Z" << i << ": lattice width " << fmt(delta) << ", KS floor ~"
          << fmt(floor_d) << ", dithered-KS diagnostic p=" << fmt(ks.p_value) << " ";
    }
  }
  res.passed = ok;
  res.detail = msg.str();
  return res;
}

// --- 5. Limit-process sampler moments plus the pathwise oracle.
CriterionResult criterion_limit_sampler(const AcceptanceOptions& o, const Sizes& s) {
  CriterionResult res{5, "limit process: Var R(1)=1/2, Cov(R(1),R(2))=1/3, pathwise oracle"};
  const LimitSampler sampler(CovSpec::intermediate({1.0, 2.0}));
  std::vector<double> r1(s.limit_samples), r2(s.limit_samples);
  parallel_for(s.limit_samples, o.threads, [&](std::size_t i) {
    Rng rng(replica_seed(o.seed ^ 0x05, i));
    double out[2];
    sampler.sample(rng, out);
    r1[i] = out[0];
    r2[i] = out[1];
  });
  const double var1 = sample_variance(r1);
  const double cov12 = sample_covariance(r1, r2);
  const double n = static_cast<double>(s.limit_samples);
  // SE of the sample variance of a Gaussian: sigma^2 sqrt(2/(n-1)).
  const double se_var = 0.5 * std::sqrt(2.0 / (n - 1.0));
  const double se_cov = std::sqrt((0.5 * 0.25 + 1.0 / 9.0) / n);
  const bool var_ok = std::abs(var1 - 0.5) <= 3.0 * se_var;
  const bool cov_ok = std::abs(cov12 - 1.0 / 3.0) <= 3.0 * se_cov;

  std::vector<double> path(s.pathwise_paths);
  parallel_for(s.pathwise_paths, o.threads, [&](std::size_t i) {
    Rng rng(replica_seed(o.seed ^ 0x55, i));
    path[i] = pathwise_limit_sample(1.0, rng, 40.0, 1e-3);
  });
  const double var_path = sample_variance(path);
  const bool path_ok = std::abs(var_path - 0.5) <= s.pathwise_band;

  res.passed = var_ok && cov_ok && path_ok;
  std::ostringstream msg;
  msg << "Var=" << fmt(var1) << (var_ok ? " " : " FAIL ") << "Cov=" << fmt(cov12)
         << (cov_ok ? " " : " FAIL ") << "pathwise Var=" << fmt(var_path)
         << (path_ok ? "" : " FAIL") << " (band " << fmt(s.pathwise_band) << ")";
  res.detail = msg.str();
  return res;
}

// --- 6. Moment-bound boundedness (factor-5 band across the grid).
CriterionResult criterion_moment_bound(const AcceptanceOptions& o, const Sizes& s) {
  CriterionResult res{6, "second-moment bound ratios bounded (t in {10,20,40}, j in {2,3})"};
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::MomentBound;
  cfg.t_grid = {10.0, 20.0, 40.0};
  cfg.j_list = {2, 3};
  cfg.replicas = s.moment_replicas;
  cfg.seed = o.seed ^ 0x06;
  cfg.threads = o.threads;
  const ExperimentReport rep = run_moment_bound(cfg);
  for (const auto& c : rep.checks) {
    if (c.name == "ratio_band") {
      res.passed = c.passed;
      res.detail = "max/min ratio = " + fmt(c.value) + " (< " + fmt(c.tolerance) + ")";
    }
  }
  return res;
}

// --- 7. Vanishing differences with j(t) = floor(t^{1/4}).
CriterionResult criterion_identity_checks(const AcceptanceOptions& o, const Sizes& s) {
  CriterionResult res{7, "vanishing scaled differences (t in {20,40,80})"};
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::IdentityChecks;
  cfg.t_grid = {20.0, 40.0, 80.0};
  cfg.j_exponent = 0.25;
  cfg.replicas = s.identity_replicas;
  cfg.seed = o.seed ^ 0x07;
  cfg.threads = o.threads;
  const ExperimentReport rep = run_identity_checks(cfg);
  bool ok = true;
  std::ostringstream msg;
  for (const auto& c : rep.checks) {
    ok = ok && c.passed;
    msg << c.name << "=" << fmt(c.value) << (c.passed ? " " : " FAIL ");
  }
  res.passed = ok;
  res.detail = msg.str();
  return res;
}

// --- 8. Conservation / monotonicity / dominance property sweep.
CriterionResult criterion_properties(const AcceptanceOptions& o, const Sizes& s) {
  CriterionResult res{8, "conservation, monotonicity, partial sums, dominance"};
  std::uint64_t violations = 0;
  const std::vector<EnvironmentCase> envs{
      EnvironmentCase::gem01(), EnvironmentCase::case_a(WLaw::beta(2.0, 1.0)),
      EnvironmentCase::case_b(1.0), EnvironmentCase::case_c(0.5, 0.5)};

  // (a) ball conservation and monotone K across random occupancy runs.
  // Cases B and C break sticks polynomially, so a box with m balls spreads
  // them over ~m^alpha child slots; their ball ranges stay moderate to keep
  // the sweep fast (case A costs O(log m) slots per box and runs to 1e6).
  for (std::uint64_t i = 0; i < s.property_cases; ++i) {
    Rng rng(replica_seed(o.seed ^ 0x08, i));
    const EnvironmentCase& env = envs[i % envs.size()];
    const double n_ceiling = env.kind() == EnvironmentCase::Kind::A ? 1e6 : 1e4;
    const std::uint64_t n =
        static_cast<std::uint64_t>(std::exp(rng.uniform01() * std::log(n_ceiling))) + 1;
    const std::uint32_t gens = 1 + static_cast<std::uint32_t>(rng.uniform01() * 5.0);
    const OccupancyRun run = run_occupancy(n, env, gens, rng);
    std::uint64_t prev_k = 0;
    for (const auto& st : run.generations) {
      std::uint64_t balls = 0, boxes = 0;
      for (const auto& [r, cnt] : st.histogram) {
        balls += r * cnt;
        boxes += cnt;
      }
      if (balls != n || boxes != st.occupied || st.occupied > n) ++violations;
      if (st.occupied < prev_k) ++violations;
      prev_k = st.occupied;
    }
  }

  // (b) stick partial sums + residual = 1 within 1e-12, strictly decreasing
  for (std::uint64_t i = 0; i < s.property_cases; ++i) {
    const EnvironmentCase& env = envs[i % envs.size()];
    ProbabilityStream stream(env, replica_seed(o.seed ^ 0x18, i));
    double sum = 0.0;
    double prev_residual = 1.0;
    for (int step = 0; step < 300 && !stream.exhausted(); ++step) {
      const auto [p, residual] = stream.next();
      sum += p;
      if (!(residual < prev_residual)) ++violations;
      if (std::abs(sum + residual - 1.0) > 1e-12) ++violations;
      prev_residual = residual;
    }
  }

  // (c) stationary coupling dominance Nbar_j <= N_j
  const std::vector<PerturbedWalkLaw> laws{
      PerturbedWalkLaw::uniform(), PerturbedWalkLaw::from_w(WLaw::beta(2.0, 1.0)),
      PerturbedWalkLaw::from_w(WLaw::beta(2.0, 3.0))};
  for (std::uint64_t i = 0; i < s.property_cases; ++i) {
    Rng rng(replica_seed(o.seed ^ 0x28, i));
    const PerturbedWalkLaw& law = laws[i % laws.size()];
    const double t = 2.0 + 10.0 * rng.uniform01();
    const std::uint32_t j = 1 + static_cast<std::uint32_t>(rng.uniform01() * 3.0);
    const auto [plain, bar] = coupled_counts(law, j, t, rng);
    if (bar > plain) ++violations;
  }

  res.passed = violations == 0;
  res.detail = std::to_string(violations) + " violations across 3x" +
               std::to_string(s.property_cases) + " randomized cases";
  return res;
}

// --- 9. Brute-force oracle on a fixed 3-box environment, n <= 4.
namespace oracle {

constexpr double kW1 = 0.4;
constexpr double kW2 = 0.6;
// Box probabilities of the truncated stick: the third box absorbs the rest.
const double kP[3] = {1.0 - kW1, kW1 * (1.0 - kW2), kW1 * kW2};

double multinomial_prob(const std::array<int, 3>& m) {
  const int n = m[0] + m[1] + m[2];
  double lp = log_factorial(std::uint64_t(n));
  for (int i = 0; i < 3; ++i) {
    lp -= log_factorial(std::uint64_t(m[i]));
    if (m[i] > 0) lp += m[i] * std::log(kP[i]);
  }
  return std::exp(lp);
}

void for_each_composition(int n, const std::function<void(const std::array<int, 3>&)>& f) {
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b + a <= n; ++b) f({a, b, n - a - b});
  }
}

// pmf of the number of occupied child boxes when m balls hit one box
std::map<int, double> child_occupancy_pmf(int m) {
  std::map<int, double> pmf;
  for_each_composition(m, [&](const std::array<int, 3>& c) {
    int k = 0;
    for (int v : c) k += v > 0 ? 1 : 0;
    pmf[k] += multinomial_prob(c);
  });
  return pmf;
}

// exact distributions of K_n(1) and K_n(2)
std::pair<std::map<int, double>, std::map<int, double>> exact_k1_k2(int n) {
  std::map<int, double> k1, k2;
  std::map<int, std::map<int, double>> child_cache;
  for (int m = 1; m <= n; ++m) child_cache[m] = child_occupancy_pmf(m);
  for_each_composition(n, [&](const std::array<int, 3>& c) {
    const double p = multinomial_prob(c);
    int occ = 0;
    for (int v : c) occ += v > 0 ? 1 : 0;
    k1[occ] += p;
    std::map<int, double> conv{{0, 1.0}};
    for (int v : c) {
      if (v == 0) continue;
      std::map<int, double> next;
      for (const auto& [sum, q] : conv) {
        for (const auto& [k, qq] : child_cache[v]) next[sum + k] += q * qq;
      }
      conv = std::move(next);
    }
    for (const auto& [sum, q] : conv) k2[sum] += p * q;
  });
  return {std::move(k1), std::move(k2)};
}

double fixed_stick(std::uint64_t r, Rng&) {
  if (r == 1) return kW1;
  if (r == 2) return kW2;
  return 0.0;  // third box absorbs the remaining balls
}

}  // namespace oracle

CriterionResult criterion_bruteforce_oracle(const AcceptanceOptions& o, const Sizes& s) {
  CriterionResult res{9, "exact enumeration vs MC on a truncated 3-box environment"};
  bool ok = true;
  std::ostringstream msg;
  for (int n = 2; n <= 4; ++n) {
    const auto [k1_exact, k2_exact] = oracle::exact_k1_k2(n);
    std::map<int, std::uint64_t> k1_freq, k2_freq;
    Rng rng(o.seed ^ (0x09 + n));
    for (std::uint64_t r = 0; r < s.oracle_runs; ++r) {
      const auto gen1 = detail::allocate_children_with(n, oracle::fixed_stick, rng, 16);
      int k1 = static_cast<int>(gen1.size());
      int k2 = 0;
      for (const auto& child : gen1) {
        k2 += static_cast<int>(
            detail::allocate_children_with(child.balls, oracle::fixed_stick, rng, 16)
                .size());
      }
      ++k1_freq[k1];
      ++k2_freq[k2];
    }
    const double runs = static_cast<double>(s.oracle_runs);
    double worst_sigma = 0.0;
    auto compare = [&](const std::map<int, double>& exact,
                       const std::map<int, std::uint64_t>& freq) {
      for (const auto& [value, p] : exact) {
        const double f =
            freq.count(value) ? static_cast<double>(freq.at(value)) / runs : 0.0;
        const double se = std::sqrt(p * (1.0 - p) / runs);
        const double sig = std::abs(f - p) / std::max(se, 1e-12);
        worst_sigma = std::max(worst_sigma, sig);
        if (sig > 3.0) ok = false;
      }
    };
    compare(k1_exact, k1_freq);
    compare(k2_exact, k2_freq);
    msg << "n=" << n << " worst |freq-p|/SE=" << fmt(worst_sigma) << " ";
  }
  res.passed = ok;
  res.detail = msg.str();
  return res;
}

// --- 10. Erlang / quadrature identity at (n, j) = (e^5, 3).
CriterionResult criterion_erlang_identity(const AcceptanceOptions&, const Sizes&) {
  CriterionResult res{10, "n int_n^inf y^{-2} (log y)^{j-1}/(j-1)! dy = sum_{i<j} (log n)^i/i!"};
  const double t = 5.0;
  const std::uint32_t j = 3;
  // substitution y = n/x maps the tail integral onto (0,1)
  const auto quad = integrate01(
      [t](double x, double) { return 0.5 * (t - std::log(x)) * (t - std::log(x)); },
      1e-13);
  double target = 0.0;
  for (std::uint32_t i = 0; i < j; ++i) target += poisson_like_term(t, i);
  const double via_tail = std::exp(t) * erlang_tail(j, t);
  const bool quad_ok = std::abs(quad.value - target) <= 1e-8;
  const bool tail_ok = std::abs(via_tail - target) <= 1e-8 * target;
  res.passed = quad_ok && tail_ok;
  res.detail = "quadrature " + fmt(quad.value) + ", erlang route " + fmt(via_tail) +
               ", target " + fmt(target);
  return res;
}

}  // namespace

bool all_passed(const std::vector<CriterionResult>& results) {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return true;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            std::ostream& out) {
  const Sizes s = sizes_for(opts.profile);
  using Fn = CriterionResult (*)(const AcceptanceOptions&, const Sizes&);
  const Fn criteria[] = {
      criterion_rho_means,      criterion_renewal_exact, criterion_expansion_bounds,
      criterion_fixed_gen,      criterion_limit_sampler, criterion_moment_bound,
      criterion_identity_checks, criterion_properties,   criterion_bruteforce_oracle,
      criterion_erlang_identity};
  std::vector<CriterionResult> results;
  int id = 0;
  for (Fn fn : criteria) {
    ++id;
    if (!opts.only.empty() &&
        std::find(opts.only.begin(), opts.only.end(), id) == opts.only.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = fn(opts, s);
    } catch (const std::exception& e) {
      r.id = static_cast<int>(results.size()) + 1;
      r.name = "criterion threw";
      r.passed = false;
      r.detail = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.name << " ["
        << fmt(r.seconds) << "s] " << r.detail << '\n';
    out.flush();
    results.push_back(std::move(r));
  }
  out << (all_passed(results) ? "acceptance: all criteria passed\n"
                              : "acceptance: FAILURES present\n");
  return results;
}

}  // namespace nsieve
