#include "doctest.h"

#include <cmath>
#include <vector>

#include "nsieve/rng.hpp"
#include "nsieve/stats.hpp"

using namespace nsieve;

TEST_SUITE("stats") {

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021).epsilon(1e-5));
  CHECK(normal_cdf(1.0, 1.0, 2.0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("kolmogorov distribution") {
  CHECK(kolmogorov_q(1e-8) == doctest::Approx(1.0));
  // reference values from a 30-digit evaluation of the alternating series
  CHECK(kolmogorov_q(1.36) == doctest::Approx(0.049485876755377910).epsilon(1e-10));
  CHECK(kolmogorov_q(0.83) == doctest::Approx(0.496190995350505743).epsilon(1e-10));
  // points straddling the internal series switch
  CHECK(kolmogorov_q(1.1799) == doctest::Approx(0.123512049711886724).epsilon(1e-10));
  CHECK(kolmogorov_q(1.1801) == doctest::Approx(0.123395591619392930).epsilon(1e-10));
}

TEST_CASE("one-sample KS accepts its own law and rejects a shifted one") {
  Rng rng(77);
  std::vector<double> xs(20'000);
  for (double& x : xs) x = rng.normal();
  const auto good = ks_one_sample(xs, [](double x) { return normal_cdf(x); });
  CHECK(good.p_value > 0.01);
  const auto bad = ks_one_sample(xs, [](double x) { return normal_cdf(x, 0.25, 1.0); });
  CHECK(bad.p_value < 1e-6);
}

TEST_CASE("two-sample KS with ties") {
  Rng rng(78);
  std::vector<double> a(30'000), b(30'000), c(30'000);
  for (double& x : a) x = std::floor(rng.normal() * 8.0);  // lattice data
  for (double& x : b) x = std::floor(rng.normal() * 8.0);
  for (double& x : c) x = std::floor((rng.normal() + 0.4) * 8.0);
  CHECK(ks_two_sample(a, b).p_value > 0.01);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
}

TEST_CASE("moments and regression helpers") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(xs) == doctest::Approx(2.5));
  CHECK(sample_variance(xs) == doctest::Approx(5.0 / 3.0));
  const std::vector<double> ys{2.0, 4.0, 6.0, 8.0};
  CHECK(sample_covariance(xs, ys) == doctest::Approx(10.0 / 3.0));
  CHECK(regression_slope(xs, ys) == doctest::Approx(2.0));
}

TEST_CASE("parallel_for covers every index exactly once") {
  std::vector<int> hits(10'000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
}

}  // TEST_SUITE
