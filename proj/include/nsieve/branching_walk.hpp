#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "nsieve/rng.hpp"
#include "nsieve/stick_breaking.hpp"

namespace nsieve {

struct RenewalTable;

// Moment constants of the walk law, all obtained by quadrature against the
// W density (closed forms exist for the uniform case but the quadrature is
// the single code path, exercised against them in tests).
//   m  = E xi,  s2 = Var xi,  mu = E|log W|,  sigma2 = Var(log W),
//   c0 = Var xi / E xi^2 (claimed Lorden constant for nonlattice laws),
//   cbar = E eta / m,  c = max(c0, cbar).
// For W-derived laws xi = |log W| so m == mu and s2 == sigma2.
struct LawConstants {
  double m = 0.0;
  double s2 = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double mean_eta = 0.0;
  double mean_xi2 = 0.0;
  double c0 = 0.0;
  double cbar = 0.0;
  double c = 0.0;
};

// Joint law of one step of the perturbed random walk,
// (xi, eta) = (|log W|, |log(1-W)|) for a stick-breaking factor W.
// Immutable and shareable between threads once constructed.
class PerturbedWalkLaw {
 public:
  static PerturbedWalkLaw from_w(WLaw w);
  static PerturbedWalkLaw uniform() { return from_w(WLaw::uniform01()); }

  const WLaw& w_law() const { return w_; }
  bool is_uniform() const { return w_.is_uniform(); }
  bool lattice() const { return lattice_; }
  const LawConstants& constants() const { return constants_; }

  // One increment (xi_i, eta_i); the components are dependent through W.
  std::pair<double, double> sample_increment(Rng& rng) const;

  double xi_cdf(double x) const;   // P(|log W| <= x)
  double eta_cdf(double y) const;  // P(|log(1-W)| <= y)

  // Draw from the stationary delay density m^{-1} P(xi > x). Exponential
  // closed form when W ~ Beta(a,1); numeric inverse-CDF table otherwise
  // (grid chosen so the CDF error stays below 1e-8).
  double sample_stationary_delay(Rng& rng) const;

  // Diagnostic hook: flag the law as lattice to exercise the rejection path.
  PerturbedWalkLaw with_lattice_flag(bool flag) const;

 private:
  PerturbedWalkLaw() = default;
  struct DelayTable;
  const DelayTable& delay_table() const;

  WLaw w_;
  LawConstants constants_;
  bool lattice_ = false;
  mutable std::shared_ptr<const DelayTable> delay_;
};

// Points T_i = S_{i-1} + eta_i (plus the delay S-bar_0 when stationary) that
// landed in [0, t_max], sorted.
struct PointSet {
  std::vector<double> points;
  bool stationary = false;
  double delay = 0.0;
};

PointSet sample_prw_points(const PerturbedWalkLaw& law, double t_max, Rng& rng,
                           bool stationary = false);

struct BranchingOptions {
  double expected_cap = 1e7;        // cap on (t/m)^j / j!
  std::uint64_t frontier_cap = 20'000'000;
};

// Counts N*_j(t) for j = 1..j_max on one branching-walk realization (the
// whole vector is coupled: deeper counts are descendants of the same tree).
std::vector<std::uint64_t> count_generations(const PerturbedWalkLaw& law,
                                             std::uint32_t j_max, double t,
                                             Rng& rng, bool stationary = false,
                                             const BranchingOptions& opts = {});

std::uint64_t count_n_j(const PerturbedWalkLaw& law, std::uint32_t j, double t,
                        Rng& rng, bool stationary = false,
                        const BranchingOptions& opts = {});

// The three coupled quantities of the martingale-type decomposition: the
// count N*_j(t), the sum of V*_{j-1}(t - T*_r) over first-generation points,
// and the polynomial sum (t - T*_r)^{j-1} / ((j-1)! m^{j-1}). All three are
// driven by the same first-generation points.
struct DecompositionTerms {
  double count = 0.0;
  double sum_v = 0.0;
  double sum_poly = 0.0;
};

// `table` supplies V*_{j-1} when no closed form exists (it may be null for
// the uniform nonstationary law, where V_k(x) = x^k/k!).
DecompositionTerms decomposition_terms(const PerturbedWalkLaw& law,
                                       std::uint32_t j, double t, Rng& rng,
                                       bool stationary,
                                       const RenewalTable* table,
                                       const BranchingOptions& opts = {});

// (N_j(t), Nbar_j(t)) under the monotone coupling: both trees share the
// (xi, eta) stream and the stationary tree adds an independent delay per
// brood, so Nbar_j(t) <= N_j(t) pathwise.
std::pair<std::uint64_t, std::uint64_t> coupled_counts(
    const PerturbedWalkLaw& law, std::uint32_t j, double t, Rng& rng,
    const BranchingOptions& opts = {});

}  // namespace nsieve
