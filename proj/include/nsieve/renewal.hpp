#pragma once

#include <cstdint>
#include <vector>

#include "nsieve/branching_walk.hpp"

#include "json.hpp"

namespace nsieve {

struct Grid {
  double step = 0.01;
  std::size_t count = 0;  // nodes 0..count-1 at t = k*step

  double t_max() const { return step * static_cast<double>(count - 1); }
  double node(std::size_t k) const { return step * static_cast<double>(k); }
  static Grid make(double step, double t_max);
};

// Discretized renewal quantities of a perturbed walk law on a uniform grid:
//   U(t)    renewal function of the xi-walk (includes the i = 0 term),
//   V(t)    = E N(t),  Vbar(t) = E Nbar(t)  (stationary),
//   V_j     j-fold convolutions, stored with a per-row log scale so deep
//           convolutions do not overflow.
// Stieltjes integrals are discretized by the midpoint rule on dF increments,
// which keeps every output nondecreasing.
struct RenewalTable {
  struct Row {
    std::vector<double> values;
    double log_scale = 0.0;
  };
  struct Meta {
    double xi_cdf_at_tmax = 0.0;
    double eta_cdf_at_tmax = 0.0;
    bool tail_warning = false;       // xi CDF mass below 0.999 at t_max
    bool lorden_c0_ok = true;        // U(t) - t/m <= c0 at all nodes
    double lorden_max_excess = 0.0;  // max over nodes of U - t/m - c0
  };

  Grid grid;
  std::vector<double> U;
  std::vector<double> V;
  std::vector<double> Vbar;   // empty when built without the stationary part
  std::vector<Row> Vj;        // Vj[0] is V_1 = V, Vj[j-1] is V_j
  std::vector<Row> Vbarj;
  LawConstants constants;
  Meta meta;
  bool stationary = false;
  std::string law_name;

  std::uint32_t j_max() const { return static_cast<std::uint32_t>(Vj.size()); }

  double u_at(double t) const;
  double v_at(double t) const;
  double vbar_at(double t) const;
  double vj_at(std::uint32_t j, double t) const;     // j >= 1
  double vbarj_at(std::uint32_t j, double t) const;  // j >= 1
  double vj_node(std::uint32_t j, std::size_t k) const;
  double vbarj_node(std::uint32_t j, std::size_t k) const;
  // log V_j(t); stays finite where the linear value would overflow
  double log_vj_at(std::uint32_t j, double t) const;

  nlohmann::json constants_json() const;
  // CSV rows: t, U, V[, Vbar], V_2..V_jmax
  void write_csv(std::ostream& out) const;
};

RenewalTable build_renewal_table(const PerturbedWalkLaw& law, double step,
                                 double t_max, std::uint32_t j_max,
                                 bool with_stationary);

// Two-terms expansion bounds on |V_j(t) - t^j/(j! m^j)|: the full binomial sum
// sum_{i<j} C(j,i) c^{j-i} t^i / (i! m^i) and the simplified form
// 2 c j t^{j-1} / ((j-1)! m^{j-1}), the latter valid for j <= sqrt(t/(2cm)).
struct ExpansionBounds {
  double full_sum = 0.0;
  double simplified = 0.0;
  bool simplified_applicable = false;
};
ExpansionBounds expansion_bounds(std::uint32_t j, double t, double c, double m);

// All moment constants for a stick-breaking factor law (quadrature based).
LawConstants law_constants(const WLaw& w);

}  // namespace nsieve
