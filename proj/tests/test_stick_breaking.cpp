#include "doctest.h"

#include <cmath>
#include <vector>

#include "nsieve/numerics.hpp"
#include "nsieve/stats.hpp"
#include "nsieve/stick_breaking.hpp"

using namespace nsieve;

TEST_SUITE("stick_breaking") {

TEST_CASE("parameter validation") {
  CHECK_THROWS(WLaw::beta(0.0, 1.0));
  CHECK_THROWS(WLaw::beta(1.0, -2.0));
  CHECK_THROWS(EnvironmentCase::case_b(0.0));
  CHECK_THROWS(EnvironmentCase::case_c(1.5, 0.0));   // alpha outside (0,1)
  CHECK_THROWS(EnvironmentCase::case_c(0.5, -0.5));  // theta <= -alpha
  CHECK_NOTHROW(EnvironmentCase::case_c(0.5, -0.4));
}

TEST_CASE("json round trip and shorthand parsing") {
  const auto env = EnvironmentCase::from_json(
      nlohmann::json::parse(R"({"case":"C","alpha":0.5,"theta":0.5})"));
  CHECK(env.kind() == EnvironmentCase::Kind::C);
  CHECK(EnvironmentCase::from_json(env.to_json()).theta() == 0.5);
  CHECK(EnvironmentCase::parse("gem01").is_gem01());
  CHECK(EnvironmentCase::parse("beta:2,1").w_law().a == 2.0);
  CHECK(EnvironmentCase::parse(R"({"case":"A","w":"uniform"})").is_gem01());
  CHECK_THROWS(EnvironmentCase::parse("nonsense"));
}

TEST_CASE("case B with alpha=1, r=1 is uniform") {
  const auto env = EnvironmentCase::case_b(1.0);
  Rng rng(10);
  std::vector<double> xs(20'000);
  for (double& x : xs) x = env.sample_w(1, rng);
  const auto ks = ks_one_sample(xs, [](double x) { return x; });
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("case A uniform mean") {
  const auto env = EnvironmentCase::gem01();
  Rng rng(11);
  const int n = 1'000'000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += env.sample_w(5, rng);
  CHECK(std::abs(s / n - 0.5) < 3.0 * (1.0 / std::sqrt(12.0)) / 1e3);
}

TEST_CASE("case C first factor is Beta(theta+alpha, 1-alpha)") {
  // alpha = theta = 1/2 gives Beta(1, 1/2); mean checked against quadrature
  // of the density before being frozen as 2/3.
  const auto quad = integrate01([](double x, double cx) {
    return x * 0.5 / std::sqrt(cx);  // x * density of Beta(1, 1/2)
  });
  CHECK(quad.value == doctest::Approx(2.0 / 3.0).epsilon(1e-10));

  const auto env = EnvironmentCase::case_c(0.5, 0.5);
  Rng rng(12);
  const int n = 200'000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = env.sample_w(1, rng);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double sd = std::sqrt(s2 / n - mean * mean);
  CHECK(std::abs(mean - 2.0 / 3.0) < 3.0 * sd / std::sqrt(double(n)));
}

TEST_CASE("stream emits residual-allocation probabilities") {
  ProbabilityStream stream(EnvironmentCase::gem01(), 99);
  double prev_residual = 1.0;
  double sum = 0.0;
  for (int r = 1; r <= 200; ++r) {
    CHECK(stream.index() == std::uint64_t(r));
    const auto [p, residual] = stream.next();
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    // p_r = residual_{r-1} - residual_r by construction
    CHECK(p == doctest::Approx(prev_residual - residual).epsilon(1e-12));
    CHECK(residual < prev_residual);
    sum += p;
    CHECK(std::abs(sum + residual - 1.0) <= 1e-12);
    prev_residual = residual;
  }
}

TEST_CASE("stream determinism") {
  ProbabilityStream a(EnvironmentCase::case_c(0.3, 0.7), 7);
  ProbabilityStream b(EnvironmentCase::case_c(0.3, 0.7), 7);
  for (int i = 0; i < 50; ++i) {
    const auto sa = a.next();
    const auto sb = b.next();
    CHECK(sa.p == sb.p);
    CHECK(sa.residual_after == sb.residual_after);
  }
}

TEST_CASE("uniform case: -log(residual) drifts like the step count") {
  // -log residual_r is a sum of r iid Exp(1) variables
  const int streams = 30'000;
  const int r = 7;
  std::vector<double> xs(streams);
  for (int i = 0; i < streams; ++i) {
    ProbabilityStream s(EnvironmentCase::gem01(), replica_seed(13, i));
    double residual = 1.0;
    for (int k = 0; k < r; ++k) residual = s.next().residual_after;
    xs[i] = -std::log(residual);
  }
  const double m = mean(xs);
  CHECK(std::abs(m - r) < 3.0 * mean_standard_error(xs));
  CHECK(sample_variance(xs) == doctest::Approx(double(r)).epsilon(0.05));
}

TEST_CASE("exhaustion below the residual floor") {
  // small beta parameter makes -log W large, residual collapses fast
  ProbabilityStream s(EnvironmentCase::case_a(WLaw::beta(0.02, 1.0)), 3);
  int steps = 0;
  while (!s.exhausted() && steps < 100'000) {
    s.next();
    ++steps;
  }
  CHECK(s.exhausted());
  CHECK(steps < 100'000);
  CHECK_THROWS(s.next());
}

}  // TEST_SUITE
