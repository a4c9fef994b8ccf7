#include "nsieve/branching_walk.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "nsieve/numerics.hpp"
#include "nsieve/renewal.hpp"

namespace nsieve {

namespace {

// Stable logs of w and 1-w from the (x, 1-x) pair of the quadrature nodes.
double log_of(double x, double cx) {
  return x > 0.5 ? std::log1p(-cx) : std::log(x);
}

LawConstants compute_constants(const WLaw& w) {
  auto moment = [&w](auto&& f) {
    const auto r = integrate01(
        [&](double x, double cx) { return f(x, cx) * w.density(x, cx); }, 1e-13);
    if (!std::isfinite(r.value) || r.error_estimate > 1e-6 * std::max(1.0, std::abs(r.value))) {
      throw std::runtime_error("law constants: moment integral did not converge");
    }
    return r.value;
  };
  LawConstants k;
  k.m = moment([](double x, double cx) { return -log_of(x, cx); });
  k.mean_xi2 = moment([](double x, double cx) {
    const double l = log_of(x, cx);
    return l * l;
  });
  k.mean_eta = moment([](double x, double cx) { return -log_of(cx, x); });
  k.mu = k.m;
  k.s2 = k.mean_xi2 - k.m * k.m;
  k.sigma2 = k.s2;
  k.c0 = k.s2 / k.mean_xi2;
  k.cbar = k.mean_eta / k.m;
  k.c = std::max(k.c0, k.cbar);
  if (!(k.m > 0.0) || !std::isfinite(k.mean_eta)) {
    throw std::runtime_error("law constants: divergent moments");
  }
  return k;
}

}  // namespace

PerturbedWalkLaw PerturbedWalkLaw::from_w(WLaw w) {
  PerturbedWalkLaw law;
  law.w_ = w;
  law.constants_ = compute_constants(w);
  return law;
}

PerturbedWalkLaw PerturbedWalkLaw::with_lattice_flag(bool flag) const {
  PerturbedWalkLaw copy = *this;
  copy.lattice_ = flag;
  return copy;
}

std::pair<double, double> PerturbedWalkLaw::sample_increment(Rng& rng) const {
  const double w = w_.sample(rng);
  return {-std::log(w), -std::log1p(-w)};
}

double PerturbedWalkLaw::xi_cdf(double x) const {
  if (x <= 0.0) return 0.0;
  // P(|log W| <= x) = P(W >= e^{-x}) = 1 - F_W(e^{-x})
  return 1.0 - w_.cdf(std::exp(-x));
}

double PerturbedWalkLaw::eta_cdf(double y) const {
  if (y <= 0.0) return 0.0;
  // P(|log(1-W)| <= y) = P(W <= 1 - e^{-y})
  if (w_.kind == WLaw::Kind::Uniform01) return -std::expm1(-y);
  return w_.cdf(-std::expm1(-y));
}

// Numeric inverse-CDF table for the stationary delay when the tail
// P(xi > x) is not exponential. H(x) = m^{-1} int_0^x P(xi > s) ds is built
// by cumulative trapezoid on a grid fine enough for ~1e-8 CDF accuracy.
struct PerturbedWalkLaw::DelayTable {
  double step = 0.0;
  std::vector<double> cdf;  // H at nodes k*step, cdf[0] = 0

  double sample(Rng& rng) const {
    const double u = rng.uniform01() * cdf.back();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.begin()) return 0.0;
    const std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    const double lo = cdf[k - 1];
    const double hi = cdf[k];
    const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.0;
    return step * (static_cast<double>(k - 1) + frac);
  }
};

const PerturbedWalkLaw::DelayTable& PerturbedWalkLaw::delay_table() const {
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  if (!delay_) {
    double x_max = 1.0;
    auto tail = [this](double x) { return 1.0 - xi_cdf(x); };
    while (tail(x_max) > 1e-12 && x_max < 700.0) x_max *= 2.0;
    auto table = std::make_shared<DelayTable>();
    const std::size_t n = 1 << 17;
    table->step = x_max / static_cast<double>(n);
    table->cdf.resize(n + 1);
    table->cdf[0] = 0.0;
    double prev = tail(0.0);
    for (std::size_t k = 1; k <= n; ++k) {
      const double cur = tail(table->step * static_cast<double>(k));
      table->cdf[k] = table->cdf[k - 1] + 0.5 * table->step * (prev + cur);
      prev = cur;
    }
    const double mass = table->cdf.back() / constants_.m;
    if (std::abs(mass - 1.0) > 1e-6) {
      throw std::runtime_error("stationary delay: tail mass does not integrate to m");
    }
    delay_ = std::move(table);
  }
  return *delay_;
}

double PerturbedWalkLaw::sample_stationary_delay(Rng& rng) const {
  if (lattice_) {
    throw std::runtime_error(
        "stationary delay: lattice step laws are unsupported (the stationary "
        "version requires a nonlattice xi)");
  }
  // W ~ Beta(a,1) (uniform included) gives xi ~ Exp(a), whose stationary
  // delay is again Exp(a).
  if (w_.kind == WLaw::Kind::Uniform01) return rng.exponential(1.0);
  if (w_.b == 1.0) return rng.exponential(w_.a);
  return delay_table().sample(rng);
}

PointSet sample_prw_points(const PerturbedWalkLaw& law, double t_max, Rng& rng,
                           bool stationary) {
  PointSet out;
  out.stationary = stationary;
  out.delay = stationary ? law.sample_stationary_delay(rng) : 0.0;
  double s = out.delay;  // S*_{i-1}
  while (s <= t_max) {
    const auto [xi, eta] = law.sample_increment(rng);
    const double point = s + eta;
    if (point <= t_max) out.points.push_back(point);
    s += xi;
  }
  std::sort(out.points.begin(), out.points.end());
  return out;
}

namespace {

void check_expected_cap(const PerturbedWalkLaw& law, std::uint32_t j_max,
                        double t, const BranchingOptions& opts) {
  const double m = law.constants().m;
  double worst = 0.0;
  for (std::uint32_t j = 1; j <= j_max; ++j) {
    worst = std::max(worst, log_poisson_like_term(std::max(t, 0.0), j, m));
  }
  if (worst > std::log(opts.expected_cap)) {
    throw std::runtime_error(
        "branching walk: expected count (t/m)^j/j! exceeds the configured cap; "
        "reduce t or j");
  }
}

// Children of a node at `base`, appended to `next` while positions stay <= t.
void expand_node(const PerturbedWalkLaw& law, double base, double t, Rng& rng,
                 bool stationary, std::vector<double>& next) {
  double s = base + (stationary ? law.sample_stationary_delay(rng) : 0.0);
  while (s <= t) {
    const auto [xi, eta] = law.sample_increment(rng);
    const double point = s + eta;
    if (point <= t) next.push_back(point);
    s += xi;
  }
}

}  // namespace

std::vector<std::uint64_t> count_generations(const PerturbedWalkLaw& law,
                                             std::uint32_t j_max, double t,
                                             Rng& rng, bool stationary,
                                             const BranchingOptions& opts) {
  if (j_max == 0) throw std::invalid_argument("count_generations: j_max must be >= 1");
  check_expected_cap(law, j_max, t, opts);
  std::vector<std::uint64_t> counts(j_max, 0);
  std::vector<double> frontier;
  expand_node(law, 0.0, t, rng, stationary, frontier);
  counts[0] = frontier.size();
  std::vector<double> next;
  for (std::uint32_t g = 2; g <= j_max; ++g) {
    next.clear();
    for (double pos : frontier) {
      expand_node(law, pos, t, rng, stationary, next);
      if (next.size() > opts.frontier_cap) {
        throw std::runtime_error("branching walk: frontier exceeded the node cap");
      }
    }
    frontier.swap(next);
    counts[g - 1] = frontier.size();
  }
  return counts;
}

std::uint64_t count_n_j(const PerturbedWalkLaw& law, std::uint32_t j, double t,
                        Rng& rng, bool stationary, const BranchingOptions& opts) {
  return count_generations(law, j, t, rng, stationary, opts).back();
}

DecompositionTerms decomposition_terms(const PerturbedWalkLaw& law,
                                       std::uint32_t j, double t, Rng& rng,
                                       bool stationary,
                                       const RenewalTable* table,
                                       const BranchingOptions& opts) {
  if (j == 0) throw std::invalid_argument("decomposition_terms: j must be >= 1");
  check_expected_cap(law, j, t, opts);
  const double m = law.constants().m;
  const PointSet first = sample_prw_points(law, t, rng, stationary);

  const bool closed_form = law.is_uniform() && !stationary;
  if (!closed_form && j >= 2 && table == nullptr) {
    throw std::invalid_argument(
        "decomposition_terms: a renewal table is required for V_{j-1} of this law");
  }
  auto v_prev = [&](double x) -> double {
    if (j == 1) return 1.0;  // V*_0 == 1
    if (closed_form) {
      return std::exp((j - 1) * std::log(x) - log_factorial(std::uint64_t{j} - 1));
    }
    return stationary ? table->vbarj_at(j - 1, x) : table->vj_at(j - 1, x);
  };

  DecompositionTerms out;
  const double log_fact = log_factorial(std::uint64_t{j} - 1);
  for (double p : first.points) {
    const double rest = t - p;
    out.sum_v += v_prev(rest);
    out.sum_poly += (j == 1)
                        ? 1.0
                        : std::exp((j - 1) * (std::log(rest) - std::log(m)) - log_fact);
  }
  if (j == 1) {
    out.count = static_cast<double>(first.points.size());
    return out;
  }

  // Descendants of each first-generation point, j-1 levels down.
  std::vector<double> frontier = first.points;
  std::vector<double> next;
  for (std::uint32_t g = 2; g <= j; ++g) {
    next.clear();
    for (double pos : frontier) {
      expand_node(law, pos, t, rng, stationary, next);
      if (next.size() > opts.frontier_cap) {
        throw std::runtime_error("branching walk: frontier exceeded the node cap");
      }
    }
    frontier.swap(next);
  }
  out.count = static_cast<double>(frontier.size());
  return out;
}

std::pair<std::uint64_t, std::uint64_t> coupled_counts(
    const PerturbedWalkLaw& law, std::uint32_t j, double t, Rng& rng,
    const BranchingOptions& opts) {
  if (j == 0) throw std::invalid_argument("coupled_counts: j must be >= 1");
  check_expected_cap(law, j, t, opts);
  struct Node {
    double pos;
    double bar_pos;  // pos plus the accumulated per-brood delays
  };
  std::vector<Node> frontier{{0.0, 0.0}};
  std::vector<Node> next;
  std::uint64_t plain = 0, bar = 0;
  for (std::uint32_t g = 1; g <= j; ++g) {
    next.clear();
    plain = bar = 0;
    for (const Node& node : frontier) {
      const double delay = law.sample_stationary_delay(rng);
      double s = 0.0;
      while (node.pos + s <= t) {
        const auto [xi, eta] = law.sample_increment(rng);
        const double p = node.pos + s + eta;
        const double pb = node.bar_pos + delay + s + eta;
        if (p <= t) {
          next.push_back({p, pb});
          ++plain;
          if (pb <= t) ++bar;
        }
        s += xi;
      }
      if (next.size() > opts.frontier_cap) {
        throw std::runtime_error("branching walk: frontier exceeded the node cap");
      }
    }
    frontier.swap(next);
  }
  return {plain, bar};
}

}  // namespace nsieve
