#include "nsieve/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nsieve/numerics.hpp"

namespace nsieve {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t replica_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master + (index + 1) * 0x9E3779B97F4A7C15ull);
}

double Rng::exponential(double rate) {
  return -std::log(uniform01()) / rate;
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform01()));
  const double phi = 2.0 * std::numbers::pi * uniform01();
  cached_normal_ = r * std::sin(phi);
  has_cached_normal_ = true;
  return r * std::cos(phi);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
  if (shape < 1.0) {
    // Boost a Gamma(shape+1) draw down: G(a) = G(a+1) * U^{1/a}
    const double g = gamma(shape + 1.0);
    return g * std::exp(std::log(uniform01()) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta: parameters must be > 0");
  for (;;) {
    double w;
    if (a == 1.0 && b == 1.0) {
      w = uniform01();
    } else if (b == 1.0) {
      w = std::exp(std::log(uniform01()) / a);  // inverse CDF of Beta(a,1)
    } else if (a == 1.0) {
      w = 1.0 - std::exp(std::log(uniform01()) / b);
    } else {
      const double x = gamma(a);
      const double y = gamma(b);
      w = (x + y > 0.0) ? x / (x + y) : 0.0;
    }
    if (w > 0.0 && w < 1.0) return w;
    ++boundary_resamples_;  // probability-zero event realized by rounding
  }
}

namespace {

// Binomial(n, p) by CDF inversion, valid when n * p is moderate (the loop
// runs ~n*p/q steps on average). Requires p <= 0.5 so q^n does not underflow.
std::uint64_t binomial_inversion(Rng& rng, std::uint64_t n, double p) {
  const double q = 1.0 - p;
  const double s = p / q;
  const double nd = static_cast<double>(n);
  double f = std::exp(nd * std::log1p(-p));  // q^n
  double u = rng.uniform01();
  std::uint64_t k = 0;
  while (u > f) {
    u -= f;
    ++k;
    if (k > n) return n;  // guards accumulated rounding in the tail
    f *= s * (nd - static_cast<double>(k) + 1.0) / static_cast<double>(k);
  }
  return k;
}

// Hormann's BTRS rejection sampler (W. Hormann, "The generation of binomial
// random variates", 1993), exact for n*min(p,1-p) >= 10. Requires p <= 0.5.
std::uint64_t binomial_btrs(Rng& rng, std::uint64_t n, double p) {
  const double nd = static_cast<double>(n);
  const double q = 1.0 - p;
  const double npq = nd * p * q;
  const double spq = std::sqrt(npq);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double urvr = 0.86 * v_r;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const double m = std::floor((nd + 1.0) * p);  // mode
  const double h = log_factorial(m) + log_factorial(nd - m);

  for (;;) {
    double v = rng.uniform01();
    double u;
    if (v <= urvr) {
      u = v / v_r - 0.43;
      return static_cast<std::uint64_t>(
          std::floor((2.0 * a / (0.5 - std::abs(u)) + b) * u + c));
    }
    if (v >= v_r) {
      u = rng.uniform01() - 0.5;
    } else {
      u = v / v_r - 0.93;
      u = (u > 0 ? 0.5 : -0.5) - u;
      v = rng.uniform01() * v_r;
    }
    const double us = 0.5 - std::abs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + c);
    if (kd < 0.0 || kd > nd) continue;
    v = v * alpha / (a / (us * us) + b);
    if (std::log(v) <= h - log_factorial(kd) - log_factorial(nd - kd) +
                           (kd - m) * lpq) {
      return static_cast<std::uint64_t>(kd);
    }
  }
}

}  // namespace

std::uint64_t Rng::binomial(std::uint64_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial: p must be in [0,1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - binomial(n, 1.0 - p);
  const double np = static_cast<double>(n) * p;
  if (np < 30.0) return binomial_inversion(*this, n, p);
  return binomial_btrs(*this, n, p);
}

}  // namespace nsieve
