#include "doctest.h"

#include <cmath>

#include "nsieve/numerics.hpp"

using namespace nsieve;

TEST_SUITE("numerics") {

TEST_CASE("log_factorial table and Stirling regime agree") {
  CHECK(log_factorial(std::uint64_t{0}) == 0.0);
  CHECK(log_factorial(std::uint64_t{5}) == doctest::Approx(std::log(120.0)).epsilon(1e-14));
  // continuity across the table boundary
  const double a = log_factorial(2047.0);
  const double b = log_factorial(2048.0);
  CHECK(b - a == doctest::Approx(std::log(2048.0)).epsilon(1e-12));
  // against lgamma for a large argument
  CHECK(log_factorial(1e13) == doctest::Approx(std::lgamma(1e13 + 1.0)).epsilon(1e-12));
}

TEST_CASE("log_gamma spot values") {
  CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-10));
  CHECK(log_gamma(10.0) == doctest::Approx(std::log(362880.0)).epsilon(1e-12));
}

TEST_CASE("binomial coefficients") {
  CHECK(binomial_coefficient(3, 0) == 1.0);
  CHECK(binomial_coefficient(3, 2) == 3.0);
  CHECK(binomial_coefficient(10, 5) == 252.0);
  CHECK(binomial_coefficient(3, 4) == 0.0);
}

TEST_CASE("erlang tail") {
  CHECK(erlang_tail(1, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  // k=2, x=1: 2/e, cross-checked by quadrature of the Erlang density tail
  const double target = 2.0 * std::exp(-1.0);
  CHECK(erlang_tail(2, 1.0) == doctest::Approx(target).epsilon(1e-12));
  const auto quad = integrate01(
      [](double x, double) {
        // int_1^inf y e^{-y} dy with y = 1/x, |dy/dx| = y^2
        const double y = 1.0 / x;
        return y * std::exp(-y) * y * y;
      },
      1e-13);
  CHECK(quad.value == doctest::Approx(target).epsilon(1e-9));
  CHECK(erlang_tail(3, 0.0) == 1.0);
  // large x stays finite and in (0,1]
  const double far = erlang_tail(4, 500.0);
  CHECK(far > 0.0);
  CHECK(far < 1e-180);
}

TEST_CASE("poisson-like centering term") {
  CHECK(poisson_like_term(10.0, 2) == doctest::Approx(50.0).epsilon(1e-13));
  CHECK(poisson_like_term(3.0, 2) == doctest::Approx(4.5).epsilon(1e-13));
  CHECK(poisson_like_term(10.0, 3) == doctest::Approx(1000.0 / 6.0).epsilon(1e-13));
  CHECK(poisson_like_term(10.0, 2, 0.5) == doctest::Approx(200.0).epsilon(1e-13));
  CHECK(poisson_like_term(0.0, 0) == 1.0);
}

TEST_CASE("regularized incomplete beta") {
  CHECK(reg_inc_beta(2.0, 1.0, 0.3) == doctest::Approx(0.09).epsilon(1e-12));
  CHECK(reg_inc_beta(1.0, 3.0, 0.2) == doctest::Approx(1.0 - std::pow(0.8, 3)).epsilon(1e-12));
  // symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
  const double v = reg_inc_beta(2.5, 3.5, 0.4);
  CHECK(v == doctest::Approx(1.0 - reg_inc_beta(3.5, 2.5, 0.6)).epsilon(1e-12));
  CHECK(reg_inc_beta(2.0, 2.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("tanh-sinh quadrature handles endpoint singularities") {
  // int_0^1 -log(x) dx = 1
  const auto a = integrate01([](double x, double) { return -std::log(x); });
  CHECK(a.value == doctest::Approx(1.0).epsilon(1e-12));
  // int_0^1 log(x)^2 dx = 2
  const auto b = integrate01([](double x, double) { return std::log(x) * std::log(x); });
  CHECK(b.value == doctest::Approx(2.0).epsilon(1e-12));
  // int_0^1 (1-x)^{-1/2} dx = 2, singular at the right endpoint
  const auto c = integrate01([](double, double cx) { return 1.0 / std::sqrt(cx); });
  CHECK(c.value == doctest::Approx(2.0).epsilon(1e-11));
  // Beta(1, 1/2) mean: int x f = a/(a+b) with f = 0.5 (1-x)^{-1/2}
  const auto d = integrate01([](double x, double cx) { return x * 0.5 / std::sqrt(cx); });
  CHECK(d.value == doctest::Approx(2.0 / 3.0).epsilon(1e-11));
}

TEST_CASE("ceil_power guards exact powers") {
  CHECK(ceil_power(100, 0.5) == 10);
  CHECK(ceil_power(100, 0.0) == 1);
  CHECK(ceil_power(100, 1.0) == 100);
  CHECK(ceil_power(10, 0.5) == 4);  // sqrt(10) = 3.162...
  CHECK(ceil_power(1000000000000ULL, 0.5) == 1000000);
}

}  // TEST_SUITE
