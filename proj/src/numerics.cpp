#include "nsieve/numerics.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace nsieve {

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("log_gamma: x must be > 0");
  static constexpr std::array<double, 6> cof = {
      76.18009172947146,     -86.50532032941677,   24.01409824083091,
      -1.231739572450155,    0.1208650973866179e-2, -0.5395239384953e-5};
  const double xx = x;
  double tmp = xx + 5.5;
  tmp -= (xx + 0.5) * std::log(tmp);
  double ser = 1.000000000190015;
  double y = xx;
  for (double c : cof) ser += c / ++y;
  return -tmp + std::log(2.5066282746310005 * ser / xx);
}

namespace {

constexpr std::size_t kFactTable = 2048;

const std::vector<double>& log_fact_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kFactTable);
    long double acc = 0.0L;
    t[0] = 0.0;
    for (std::size_t k = 1; k < kFactTable; ++k) {
      acc += std::log(static_cast<long double>(k));
      t[k] = static_cast<double>(acc);
    }
    return t;
  }();
  return table;
}

double log_factorial_stirling(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return x * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi * x) +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

}  // namespace

double log_factorial(double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("log_factorial: x must be >= 0");
  if (x < static_cast<double>(kFactTable)) {
    const double r = std::nearbyint(x);
    if (r == x) return log_fact_table()[static_cast<std::size_t>(r)];
    return log_gamma(x + 1.0);
  }
  return log_factorial_stirling(x);
}

double log_factorial(std::uint64_t x) {
  if (x < kFactTable) return log_fact_table()[x];
  return log_factorial_stirling(static_cast<double>(x));
}

double binomial_coefficient(std::uint32_t n, std::uint32_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::uint32_t i = 1; i <= k; ++i) {
    r *= static_cast<double>(n - k + i);
    r /= static_cast<double>(i);
  }
  return r;
}

double erlang_tail(std::uint32_t k, double x) {
  if (k == 0) throw std::invalid_argument("erlang_tail: k must be >= 1");
  if (!(x >= 0.0)) throw std::invalid_argument("erlang_tail: x must be >= 0");
  if (x == 0.0) return 1.0;
  // log-space sum of terms -x + i log x - log i!, largest term last or at
  // i ~ x; accumulate relative to the running maximum.
  const double lx = std::log(x);
  double max_log = -x;
  std::vector<double> logs(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    logs[i] = -x + i * lx - log_factorial(static_cast<std::uint64_t>(i));
    if (logs[i] > max_log) max_log = logs[i];
  }
  double acc = 0.0;
  for (std::uint32_t i = 0; i < k; ++i) acc += std::exp(logs[i] - max_log);
  const double v = std::exp(max_log) * acc;
  return v > 1.0 ? 1.0 : v;
}

double log_poisson_like_term(double t, std::uint32_t j, double m) {
  if (!(t >= 0.0)) throw std::invalid_argument("log_poisson_like_term: t must be >= 0");
  if (t == 0.0) return j == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return j * (std::log(t) - std::log(m)) - log_factorial(static_cast<std::uint64_t>(j));
}

double poisson_like_term(double t, std::uint32_t j, double m) {
  return std::exp(log_poisson_like_term(t, j, m));
}

namespace {

double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("reg_inc_beta: continued fraction did not converge");
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("reg_inc_beta: a,b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbt = log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                     a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(lbt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

namespace {

// One tanh-sinh node: abscissa pieces (x, 1-x) and weight at parameter t.
struct TsNode {
  double x;
  double cx;
  double w;
};

TsNode ts_node(double t) {
  const double u = 0.5 * std::numbers::pi * std::sinh(t);
  const double au = std::abs(u);
  const double e = std::exp(-2.0 * au);
  const double denom = 1.0 + e;
  // 0.5*(1 - tanh|u|) = e / (1 + e), stable for large u
  const double small = e / denom;
  const double large = 1.0 / denom;
  const double sech2 = 4.0 * e / (denom * denom);
  const double w = 0.25 * std::numbers::pi * std::cosh(t) * sech2;
  if (u >= 0.0) return {large, small, w};
  return {small, large, w};
}

}  // namespace

QuadratureResult integrate01(const std::function<double(double, double)>& f,
                             double rel_tol, int max_levels) {
  const double t_max = 4.0;
  double h = 1.0;
  double sum = 0.0;
  {
    const TsNode n0 = ts_node(0.0);
    sum = n0.w * f(n0.x, n0.cx);
    for (int k = 1; k * h <= t_max; ++k) {
      const TsNode np = ts_node(k * h);
      const TsNode nm = ts_node(-k * h);
      if (np.w > 0.0) sum += np.w * f(np.x, np.cx);
      if (nm.w > 0.0) sum += nm.w * f(nm.x, nm.cx);
    }
  }
  double prev = sum * h;
  int level = 0;
  double err = std::numeric_limits<double>::infinity();
  while (level < max_levels) {
    ++level;
    h *= 0.5;
    double add = 0.0;
    for (double t = h; t <= t_max; t += 2.0 * h) {
      const TsNode np = ts_node(t);
      const TsNode nm = ts_node(-t);
      if (np.w > 0.0) add += np.w * f(np.x, np.cx);
      if (nm.w > 0.0) add += nm.w * f(nm.x, nm.cx);
    }
    sum += add;
    const double cur = sum * h;
    err = std::abs(cur - prev);
    prev = cur;
    if (err <= rel_tol * std::max(1.0, std::abs(cur)) && level >= 3) break;
  }
  return {prev, err, level};
}

QuadratureResult integrate01(const std::function<double(double)>& f,
                             double rel_tol, int max_levels) {
  return integrate01([&f](double x, double) { return f(x); }, rel_tol, max_levels);
}

std::uint64_t ceil_power(std::uint64_t n, double e) {
  const double v = std::exp(e * std::log(static_cast<double>(n)));
  const double r = std::nearbyint(v);
  if (std::abs(v - r) < 1e-9 * std::max(1.0, std::abs(v))) {
    return static_cast<std::uint64_t>(r);
  }
  return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace nsieve
