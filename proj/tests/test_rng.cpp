#include "doctest.h"

#include <cmath>
#include <vector>

#include "nsieve/numerics.hpp"
#include "nsieve/rng.hpp"

using namespace nsieve;

TEST_SUITE("rng") {

TEST_CASE("seeding is deterministic and replica streams differ") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform01();
    CHECK(x == b.uniform01());
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
  CHECK(Rng(42).uniform01() != c.uniform01());
  CHECK(replica_seed(7, 0) != replica_seed(7, 1));
  CHECK(replica_seed(7, 0) != replica_seed(8, 0));
}

TEST_CASE("uniform moments") {
  Rng rng(1);
  const int n = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform01();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double se_mean = (1.0 / std::sqrt(12.0)) / std::sqrt(double(n));
  CHECK(std::abs(mean - 0.5) < 3.0 * se_mean);
  CHECK(std::abs(var - 1.0 / 12.0) < 1e-3);
}

TEST_CASE("normal moments") {
  Rng rng(2);
  const int n = 400'000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
    sum4 += x * x * x * x;
  }
  CHECK(std::abs(sum / n) < 3.0 / std::sqrt(double(n)));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sum4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("gamma and beta moments") {
  Rng rng(3);
  const int n = 200'000;
  double g = 0.0;
  for (int i = 0; i < n; ++i) g += rng.gamma(2.5);
  CHECK(g / n == doctest::Approx(2.5).epsilon(0.02));

  double b = 0.0, b2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.beta(2.0, 3.0);
    b += x;
    b2 += x * x;
  }
  const double mean = b / n;                      // 2/5
  const double var = b2 / n - mean * mean;        // 6/150 = 0.04
  CHECK(mean == doctest::Approx(0.4).epsilon(0.01));
  CHECK(var == doctest::Approx(0.04).epsilon(0.05));

  // Beta(a,1) closed form stays inside the open interval
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.beta(3.0, 1.0);
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("binomial edge cases") {
  Rng rng(4);
  CHECK(rng.binomial(0, 0.3) == 0);
  CHECK(rng.binomial(10, 0.0) == 0);
  CHECK(rng.binomial(10, 1.0) == 10);
  for (int i = 0; i < 100; ++i) {
    CHECK(rng.binomial(1, 0.5) <= 1);
  }
  CHECK_THROWS(rng.binomial(5, 1.5));
}

TEST_CASE("binomial matches exact pmf across regimes") {
  // chi-square-style check: every pmf bucket within 4 sigma of expectation
  struct Case {
    std::uint64_t n;
    double p;
  };
  for (const Case c : {Case{12, 0.3}, Case{200, 0.35}, Case{1000, 0.004}}) {
    Rng rng(1000 + static_cast<std::uint64_t>(c.n));
    const int reps = 200'000;
    std::vector<std::uint64_t> freq(c.n + 1, 0);
    for (int i = 0; i < reps; ++i) ++freq[rng.binomial(c.n, c.p)];
    const double lq = std::log1p(-c.p), lp = std::log(c.p);
    for (std::uint64_t k = 0; k <= c.n; ++k) {
      const double lpmf = log_factorial(c.n) - log_factorial(k) -
                          log_factorial(c.n - k) + double(k) * lp +
                          double(c.n - k) * lq;
      const double prob = std::exp(lpmf);
      const double expect = prob * reps;
      if (expect < 5.0) continue;  // skip far tails
      const double sd = std::sqrt(reps * prob * (1.0 - prob));
      CHECK(std::abs(double(freq[k]) - expect) < 4.5 * sd);
    }
  }
}

TEST_CASE("binomial mean/variance at large counts") {
  Rng rng(5);
  const std::uint64_t n = 40'000'000'000ULL;  // thinning-sized count
  const double p = 0.37;
  const int reps = 20'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < reps; ++i) {
    const double k = static_cast<double>(rng.binomial(n, p));
    sum += k;
    sum2 += k * k;
  }
  const double nd = static_cast<double>(n);
  const double mean = sum / reps;
  const double sd_mean = std::sqrt(nd * p * (1 - p) / reps);
  CHECK(std::abs(mean - nd * p) < 4.0 * sd_mean);
  const double var = sum2 / reps - mean * mean;
  CHECK(var == doctest::Approx(nd * p * (1 - p)).epsilon(0.05));
}

}  // TEST_SUITE
