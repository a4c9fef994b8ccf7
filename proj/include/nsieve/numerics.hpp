#pragma once

#include <cstdint>
#include <functional>

namespace nsieve {

// log(Gamma(x)) for x > 0 (Lanczos approximation, ~1e-13 relative).
double log_gamma(double x);

// log(x!) for a nonnegative integer-valued argument. Exact-table based for
// x < 2048, Stirling series beyond; accepts double so callers working with
// counts near 2^63 do not need a cast dance.
double log_factorial(double x);
double log_factorial(std::uint64_t x);

// Binomial coefficient C(n, k) as a double; n, k small (<= 60 in this project).
double binomial_coefficient(std::uint32_t n, std::uint32_t k);

// Erlang(k,1) upper tail P(S > x) = e^{-x} sum_{i<k} x^i/i!, evaluated in log
// space so large x does not overflow the partial sums.
double erlang_tail(std::uint32_t k, double x);

// (t/m)^j / j! evaluated stably through logs; the centering term used by the
// normalizers. Returns +inf only if genuinely above double range.
double poisson_like_term(double t, std::uint32_t j, double m = 1.0);
double log_poisson_like_term(double t, std::uint32_t j, double m = 1.0);

// Regularized incomplete beta I_x(a,b) by continued fraction (Lentz).
double reg_inc_beta(double a, double b, double x);

// Tanh-sinh (double exponential) quadrature over (0,1). The integrand is
// called as f(x, 1-x) with both arguments computed stably near the endpoints,
// which keeps log-singular and (1-x)^{-alpha}-singular integrands accurate.
struct QuadratureResult {
  double value;
  double error_estimate;
  int levels;
};
QuadratureResult integrate01(const std::function<double(double, double)>& f,
                             double rel_tol = 1e-12, int max_levels = 12);

// Convenience overload for integrands that only need x.
QuadratureResult integrate01(const std::function<double(double)>& f,
                             double rel_tol = 1e-12, int max_levels = 12);

// Ceiling of n^e with a guard against floating error on exact powers
// (ceil_power(100, 0.5) == 10, not 11).
std::uint64_t ceil_power(std::uint64_t n, double e);

}  // namespace nsieve
