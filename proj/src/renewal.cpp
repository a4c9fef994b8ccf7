#include "nsieve/renewal.hpp"

#include <cmath>
#include <limits>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "nsieve/numerics.hpp"

namespace nsieve {

Grid Grid::make(double step, double t_max) {
  if (!(step > 0.0) || !(t_max > 0.0)) {
    throw std::invalid_argument("Grid: step and t_max must be positive");
  }
  Grid g;
  g.step = step;
  g.count = static_cast<std::size_t>(std::llround(t_max / step)) + 1;
  if (g.count < 2) throw std::invalid_argument("Grid: too few nodes");
  return g;
}

namespace {

double interp(const std::vector<double>& ys, const Grid& g, double t,
              double log_scale = 0.0) {
  if (t <= 0.0) return ys.front() * std::exp(log_scale);
  if (t >= g.t_max()) return ys.back() * std::exp(log_scale);
  const double pos = t / g.step;
  const std::size_t k = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(k);
  const double v = ys[k] + frac * (ys[k + 1] - ys[k]);
  return log_scale == 0.0 ? v : v * std::exp(log_scale);
}

// Midpoint-rule Stieltjes convolution of a tabulated function against the
// increments of a tabulated nondecreasing integrator:
//   out[k] = sum_{i=1..k} (f[k-i] + f[k-i+1])/2 * (m[i] - m[i-1]).
std::vector<double> stieltjes_convolve(const std::vector<double>& f,
                                       const std::vector<double>& integrator) {
  const std::size_t n = f.size();
  std::vector<double> dm(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) dm[i] = integrator[i] - integrator[i - 1];
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
      acc += 0.5 * (f[k - i] + f[k - i + 1]) * dm[i];
    }
    out[k] = acc;
  }
  return out;
}

constexpr double kRescaleLimit = 1e250;

void maybe_rescale(RenewalTable::Row& row) {
  double mx = 0.0;
  for (double v : row.values) mx = std::max(mx, v);
  if (mx > kRescaleLimit) {
    const double scale = 1.0 / mx;
    for (double& v : row.values) v *= scale;
    row.log_scale += std::log(mx);
  }
}

}  // namespace

RenewalTable build_renewal_table(const PerturbedWalkLaw& law, double step,
                                 double t_max, std::uint32_t j_max,
                                 bool with_stationary) {
  if (j_max == 0) throw std::invalid_argument("build_renewal_table: j_max must be >= 1");
  RenewalTable table;
  table.grid = Grid::make(step, t_max);
  table.constants = law.constants();
  table.stationary = with_stationary;
  table.law_name = law.w_law().to_json().dump();
  const std::size_t n = table.grid.count;

  std::vector<double> F(n), G(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = table.grid.node(k);
    F[k] = law.xi_cdf(t);
    G[k] = law.eta_cdf(t);
  }
  table.meta.xi_cdf_at_tmax = F.back();
  table.meta.eta_cdf_at_tmax = G.back();
  table.meta.tail_warning = F.back() < 0.999;

  // U = 1 + F*U by forward substitution; the i = 1 increment couples U[k]
  // to itself through the midpoint value, hence the division.
  table.U.assign(n, 1.0);
  {
    std::vector<double> dF(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) dF[i] = F[i] - F[i - 1];
    const double pivot = 1.0 - 0.5 * dF[1];
    for (std::size_t k = 1; k < n; ++k) {
      double acc = 1.0 + 0.5 * dF[1] * table.U[k - 1];
      for (std::size_t i = 2; i <= k; ++i) {
        acc += 0.5 * (table.U[k - i] + table.U[k - i + 1]) * dF[i];
      }
      table.U[k] = acc / pivot;
    }
  }

  {
    const double m = table.constants.m;
    const double c0 = table.constants.c0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      worst = std::max(worst, table.U[k] - table.grid.node(k) / m - c0);
    }
    table.meta.lorden_max_excess = worst;
    table.meta.lorden_c0_ok = worst <= 1e-9;
  }

  table.V = stieltjes_convolve(table.U, G);

  if (with_stationary) {
    if (law.lattice()) {
      throw std::runtime_error(
          "build_renewal_table: the stationary version requires a nonlattice law");
    }
    table.Vbar.assign(n, 0.0);
    const double inv_m = 1.0 / table.constants.m;
    for (std::size_t k = 1; k < n; ++k) {
      table.Vbar[k] = table.Vbar[k - 1] + 0.5 * step * (G[k - 1] + G[k]) * inv_m;
    }
  }

  table.Vj.push_back({table.V, 0.0});
  for (std::uint32_t j = 2; j <= j_max; ++j) {
    RenewalTable::Row row;
    row.log_scale = table.Vj.back().log_scale;
    row.values = stieltjes_convolve(table.Vj.back().values, table.V);
    maybe_rescale(row);
    table.Vj.push_back(std::move(row));
  }
  if (with_stationary) {
    table.Vbarj.push_back({table.Vbar, 0.0});
    for (std::uint32_t j = 2; j <= j_max; ++j) {
      RenewalTable::Row row;
      row.log_scale = table.Vbarj.back().log_scale;
      row.values = stieltjes_convolve(table.Vbarj.back().values, table.Vbar);
      maybe_rescale(row);
      table.Vbarj.push_back(std::move(row));
    }
  }
  return table;
}

double RenewalTable::u_at(double t) const { return interp(U, grid, t); }
double RenewalTable::v_at(double t) const { return interp(V, grid, t); }

double RenewalTable::vbar_at(double t) const {
  if (Vbar.empty()) throw std::logic_error("RenewalTable: no stationary part");
  return interp(Vbar, grid, t);
}

double RenewalTable::vj_at(std::uint32_t j, double t) const {
  if (j == 0 || j > Vj.size()) throw std::out_of_range("RenewalTable::vj_at");
  const Row& row = Vj[j - 1];
  return interp(row.values, grid, t, row.log_scale);
}

double RenewalTable::vbarj_at(std::uint32_t j, double t) const {
  if (j == 0 || j > Vbarj.size()) throw std::out_of_range("RenewalTable::vbarj_at");
  const Row& row = Vbarj[j - 1];
  return interp(row.values, grid, t, row.log_scale);
}

double RenewalTable::vj_node(std::uint32_t j, std::size_t k) const {
  const Row& row = Vj.at(j - 1);
  return row.values.at(k) * std::exp(row.log_scale);
}

double RenewalTable::vbarj_node(std::uint32_t j, std::size_t k) const {
  const Row& row = Vbarj.at(j - 1);
  return row.values.at(k) * std::exp(row.log_scale);
}

double RenewalTable::log_vj_at(std::uint32_t j, double t) const {
  if (j == 0 || j > Vj.size()) throw std::out_of_range("RenewalTable::log_vj_at");
  const Row& row = Vj[j - 1];
  const double v = interp(row.values, grid, t);
  return std::log(v) + row.log_scale;
}

nlohmann::json RenewalTable::constants_json() const {
  return nlohmann::json{
      {"law", law_name},
      {"m", constants.m},
      {"s2", constants.s2},
      {"mu", constants.mu},
      {"sigma2", constants.sigma2},
      {"mean_eta", constants.mean_eta},
      {"mean_xi2", constants.mean_xi2},
      {"c0", constants.c0},
      {"cbar", constants.cbar},
      {"c", constants.c},
      {"grid", {{"step", grid.step}, {"t_max", grid.t_max()}}},
      {"meta",
       {{"xi_cdf_at_tmax", meta.xi_cdf_at_tmax},
        {"eta_cdf_at_tmax", meta.eta_cdf_at_tmax},
        {"tail_warning", meta.tail_warning},
        {"lorden_c0_ok", meta.lorden_c0_ok},
        {"lorden_max_excess", meta.lorden_max_excess}}}};
}

void RenewalTable::write_csv(std::ostream& out) const {
  out << "t,U,V";
  if (!Vbar.empty()) out << ",Vbar";
  for (std::uint32_t j = 2; j <= j_max(); ++j) out << ",V_" << j;
  out << '\n';
  char buf[32];
  auto put = [&out, &buf](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out << ',' << buf;
  };
  for (std::size_t k = 0; k < grid.count; ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", grid.node(k));
    out << buf;
    put(U[k]);
    put(V[k]);
    if (!Vbar.empty()) put(Vbar[k]);
    for (std::uint32_t j = 2; j <= j_max(); ++j) put(vj_node(j, k));
    out << '\n';
  }
}

ExpansionBounds expansion_bounds(std::uint32_t j, double t, double c, double m) {
  if (j == 0) throw std::invalid_argument("expansion_bounds: j must be >= 1");
  if (!(c > 0.0) || !(m > 0.0)) throw std::invalid_argument("expansion_bounds: c, m must be > 0");
  ExpansionBounds out;
  double term = std::pow(c, static_cast<double>(j));  // i = 0
  double fact = 1.0;
  for (std::uint32_t i = 0; i < j; ++i) {
    if (i > 0) {
      fact *= static_cast<double>(i);
      term = binomial_coefficient(j, i) * std::pow(c, static_cast<double>(j - i)) *
             std::pow(t / m, static_cast<double>(i)) / fact;
    }
    out.full_sum += term;
  }
  out.simplified = 2.0 * c * static_cast<double>(j) * poisson_like_term(t, j - 1, m);
  out.simplified_applicable =
      static_cast<double>(j) * static_cast<double>(j) <= t / (2.0 * c * m);
  return out;
}

LawConstants law_constants(const WLaw& w) {
  return PerturbedWalkLaw::from_w(w).constants();
}

}  // namespace nsieve
