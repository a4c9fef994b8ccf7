#include "nsieve/limit_process.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nsieve {

CovSpec CovSpec::fixed_gen(std::vector<std::uint32_t> indices) {
  CovSpec s;
  s.kind = Kind::FixedGen;
  for (std::uint32_t i : indices) {
    if (i == 0) throw std::invalid_argument("CovSpec: generation indices start at 1");
    s.points.push_back(static_cast<double>(i));
  }
  return s;
}

CovSpec CovSpec::intermediate(std::vector<double> u_points) {
  for (double u : u_points) {
    if (!(u > 0.0)) {
      throw std::invalid_argument(
          "CovSpec: u must be > 0 (the limit process has no continuous "
          "extension at u = 0)");
    }
  }
  CovSpec s;
  s.kind = Kind::Intermediate;
  s.points = std::move(u_points);
  return s;
}

std::vector<double> cov_matrix(const CovSpec& spec) {
  const std::size_t k = spec.dimension();
  if (k == 0) throw std::invalid_argument("cov_matrix: empty spec");
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (spec.points[i] == spec.points[j]) {
        throw std::invalid_argument("cov_matrix: duplicate points make the matrix singular");
      }
    }
  }
  std::vector<double> cov(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double denom = spec.kind == CovSpec::Kind::FixedGen
                               ? spec.points[i] + spec.points[j] - 1.0
                               : spec.points[i] + spec.points[j];
      cov[i * k + j] = 1.0 / denom;
    }
  }
  return cov;
}

namespace {

std::vector<double> cholesky_lower(const std::vector<double>& a, std::size_t k) {
  std::vector<double> l(k * k, 0.0);
  double max_pivot = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * k + j];
      for (std::size_t p = 0; p < j; ++p) s -= l[i * k + p] * l[j * k + p];
      if (i == j) {
        max_pivot = std::max(max_pivot, s);
        if (!(s > 0.0) || (max_pivot > 0.0 && s < 1e-14 * max_pivot)) {
          throw std::runtime_error(
              "cholesky: matrix not (numerically) positive definite; pivot " +
              std::to_string(s) + ", condition >= " +
              std::to_string(max_pivot / std::max(s, 1e-300)));
        }
        l[i * k + j] = std::sqrt(s);
      } else {
        l[i * k + j] = s / l[j * k + j];
      }
    }
  }
  return l;
}

}  // namespace

LimitSampler::LimitSampler(CovSpec spec)
    : spec_(std::move(spec)), cov_(cov_matrix(spec_)) {
  chol_ = cholesky_lower(cov_, spec_.dimension());
}

void LimitSampler::sample(Rng& rng, std::span<double> out) const {
  const std::size_t k = dimension();
  if (out.size() != k) throw std::invalid_argument("LimitSampler::sample: bad span size");
  std::vector<double> z(k);
  for (double& v : z) v = rng.normal();
  for (std::size_t i = 0; i < k; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += chol_[i * k + j] * z[j];
    out[i] = s;
  }
}

std::vector<double> LimitSampler::sample(Rng& rng) const {
  std::vector<double> out(dimension());
  sample(rng, out);
  return out;
}

double pathwise_limit_sample(double u, Rng& rng, double y_max, double dt) {
  if (!(u > 0.0)) throw std::invalid_argument("pathwise_limit_sample: u must be > 0");
  const double sdt = std::sqrt(dt);
  const double decay = std::exp(-u * dt);
  double b = 0.0;
  double w = 1.0;
  double acc = 0.0;
  const std::size_t steps = static_cast<std::size_t>(y_max / dt);
  for (std::size_t i = 0; i < steps; ++i) {
    const double bn = b + sdt * rng.normal();
    const double wn = w * decay;
    acc += 0.5 * dt * (w * b + wn * bn);
    b = bn;
    w = wn;
  }
  return u * acc;
}

}  // namespace nsieve
