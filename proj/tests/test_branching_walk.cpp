#include "doctest.h"

#include <cmath>
#include <vector>

#include "nsieve/branching_walk.hpp"
#include "nsieve/numerics.hpp"
#include "nsieve/renewal.hpp"
#include "nsieve/stats.hpp"

using namespace nsieve;

TEST_SUITE("branching_walk") {

TEST_CASE("law constants from quadrature match closed forms") {
  const auto u = PerturbedWalkLaw::uniform().constants();
  CHECK(u.m == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(u.mu == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(u.s2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(u.sigma2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(u.mean_eta == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(u.c0 == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(u.cbar == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(u.c == doctest::Approx(1.0).epsilon(1e-9));

  // Beta(2,1): xi ~ Exp(2), eta has mean 3/2
  const auto b = PerturbedWalkLaw::from_w(WLaw::beta(2.0, 1.0)).constants();
  CHECK(b.m == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(b.mu == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(b.sigma2 == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(b.mean_eta == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(b.cbar == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(b.c == doctest::Approx(3.0).epsilon(1e-9));

  // Beta(2,3): m = psi(5)-psi(2) = 13/12, E eta = psi(5)-psi(3) = 7/12
  const auto b23 = PerturbedWalkLaw::from_w(WLaw::beta(2.0, 3.0)).constants();
  CHECK(b23.m == doctest::Approx(13.0 / 12.0).epsilon(1e-9));
  CHECK(b23.mean_eta == doctest::Approx(7.0 / 12.0).epsilon(1e-9));
}

TEST_CASE("xi and eta CDFs") {
  const auto u = PerturbedWalkLaw::uniform();
  CHECK(u.xi_cdf(2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
  CHECK(u.eta_cdf(2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
  const auto b = PerturbedWalkLaw::from_w(WLaw::beta(2.0, 1.0));
  CHECK(b.xi_cdf(1.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
  CHECK(b.eta_cdf(1.0) ==
        doctest::Approx(std::pow(1.0 - std::exp(-1.0), 2.0)).epsilon(1e-12));
}

TEST_CASE("point sets are sorted, bounded, possibly empty") {
  const auto law = PerturbedWalkLaw::uniform();
  Rng rng(41);
  int empties = 0;
  for (int i = 0; i < 2'000; ++i) {
    const auto ps = sample_prw_points(law, 0.1, rng);
    if (ps.points.empty()) ++empties;
    double prev = 0.0;
    for (double p : ps.points) {
      CHECK(p >= prev);
      CHECK(p <= 0.1);
      prev = p;
    }
  }
  CHECK(empties > 0);  // t_max below the first eta happens regularly
}

TEST_CASE("mean counts: E N(50) = 50 and E Nbar(50) = 49 + e^-50") {
  const auto law = PerturbedWalkLaw::uniform();
  const int reps = 60'000;
  std::vector<double> n(reps), nb(reps);
  parallel_for(reps, 0, [&](std::size_t i) {
    Rng rng(replica_seed(42, i));
    n[i] = double(sample_prw_points(law, 50.0, rng, false).points.size());
    nb[i] = double(sample_prw_points(law, 50.0, rng, true).points.size());
  });
  CHECK(std::abs(mean(n) - 50.0) < 3.0 * mean_standard_error(n));
  // stationary mean: int_0^50 G(y) dy = 49 + e^-50
  const double target = 49.0 + std::exp(-50.0);
  CHECK(std::abs(mean(nb) - target) < 3.0 * mean_standard_error(nb));
}

TEST_CASE("stationary delay: exponential case and numeric-table case") {
  const auto u = PerturbedWalkLaw::uniform();
  Rng rng(43);
  std::vector<double> xs(100'000);
  for (double& x : xs) x = u.sample_stationary_delay(rng);
  const auto ks = ks_one_sample(xs, [](double x) { return 1.0 - std::exp(-x); });
  CHECK(ks.p_value > 0.01);

  // numeric inverse-CDF path: delay mean must be E xi^2 / (2m)
  const auto b = PerturbedWalkLaw::from_w(WLaw::beta(2.0, 3.0));
  std::vector<double> ys(100'000);
  for (double& y : ys) y = b.sample_stationary_delay(rng);
  const double target = b.constants().mean_xi2 / (2.0 * b.constants().m);
  CHECK(std::abs(mean(ys) - target) < 3.0 * mean_standard_error(ys));

  CHECK_THROWS(u.with_lattice_flag(true).sample_stationary_delay(rng));
}

TEST_CASE("generation counts: base case, caps, mean identities") {
  const auto law = PerturbedWalkLaw::uniform();
  {
    // j = 1 reduces to the plain point count on the same stream
    Rng a(44), b(44);
    for (int i = 0; i < 50; ++i) {
      CHECK(count_n_j(law, 1, 7.0, a) ==
            sample_prw_points(law, 7.0, b).points.size());
    }
  }
  {
    Rng rng(45);
    CHECK_THROWS(count_n_j(law, 12, 100.0, rng));  // (t/m)^j/j! over the cap
  }
  {
    const int reps = 10'000;
    std::vector<double> n3(reps);
    parallel_for(reps, 0, [&](std::size_t i) {
      Rng rng(replica_seed(46, i));
      n3[i] = double(count_n_j(law, 3, 10.0, rng));
    });
    CHECK(std::abs(mean(n3) - 1000.0 / 6.0) < 3.0 * mean_standard_error(n3));
  }
}

TEST_CASE("E N_2 for a general law matches the renewal convolution") {
  const auto law = PerturbedWalkLaw::from_w(WLaw::beta(2.0, 1.0));
  const auto table = build_renewal_table(law, 0.01, 6.0, 2, false);
  const int reps = 40'000;
  std::vector<double> n2(reps);
  parallel_for(reps, 0, [&](std::size_t i) {
    Rng rng(replica_seed(47, i));
    n2[i] = double(count_n_j(law, 2, 6.0, rng));
  });
  const double grid_tol = 4.0 * 0.01 * table.v_at(6.0);
  CHECK(std::abs(mean(n2) - table.vj_at(2, 6.0)) <
        3.0 * mean_standard_error(n2) + grid_tol);
}

TEST_CASE("decomposition terms") {
  const auto law = PerturbedWalkLaw::uniform();
  {
    // j = 1: V_0 == 1 makes all three terms the point count
    Rng rng(48);
    for (int i = 0; i < 100; ++i) {
      const auto d = decomposition_terms(law, 1, 12.0, rng, false, nullptr);
      CHECK(d.count == d.sum_v);
      CHECK(d.count == d.sum_poly);
    }
  }
  {
    // uniform law: term2 and term3 coincide (V_k(x) = x^k/k!, m = 1)
    Rng rng(49);
    const auto d = decomposition_terms(law, 3, 15.0, rng, false, nullptr);
    CHECK(d.sum_v == doctest::Approx(d.sum_poly).epsilon(1e-12));
  }
  {
    // centering: E[count - sum_v] = 0
    const int reps = 20'000;
    std::vector<double> diff(reps);
    parallel_for(reps, 0, [&](std::size_t i) {
      Rng rng(replica_seed(50, i));
      const auto d = decomposition_terms(law, 2, 20.0, rng, false, nullptr);
      diff[i] = d.count - d.sum_v;
    });
    CHECK(std::abs(mean(diff)) < 3.0 * mean_standard_error(diff));
  }
  {
    // second moment at j=3, t=30 stays within a small multiple of the
    // t^{2j-2}/((j-1)!)^2 shape
    const int reps = 4'000;
    std::vector<double> sq(reps);
    parallel_for(reps, 0, [&](std::size_t i) {
      Rng rng(replica_seed(51, i));
      const auto d = decomposition_terms(law, 3, 30.0, rng, false, nullptr);
      sq[i] = (d.count - d.sum_v) * (d.count - d.sum_v);
    });
    const double shape = std::pow(30.0, 4) / 4.0;  // t^{2j-2}/((j-1)!)^2
    const double ratio = mean(sq) / shape;
    CHECK(ratio > 0.01);
    CHECK(ratio < 5.0);
  }
  {
    // table requirement for non-closed-form laws
    Rng rng(52);
    const auto beta = PerturbedWalkLaw::from_w(WLaw::beta(2.0, 1.0));
    CHECK_THROWS(decomposition_terms(beta, 2, 5.0, rng, false, nullptr));
    CHECK_THROWS(decomposition_terms(law, 2, 5.0, rng, true, nullptr));
  }
}

TEST_CASE("stationary coupling dominance") {
  const auto laws = {PerturbedWalkLaw::uniform(),
                     PerturbedWalkLaw::from_w(WLaw::beta(2.0, 1.0))};
  Rng seeder(53);
  for (const auto& law : laws) {
    for (int i = 0; i < 400; ++i) {
      const double t = 2.0 + 10.0 * seeder.uniform01();
      const std::uint32_t j = 1 + static_cast<std::uint32_t>(seeder.uniform01() * 3.0);
      Rng rng(seeder.next_u64());
      const auto [plain, bar] = coupled_counts(law, j, t, rng);
      CHECK(bar <= plain);
    }
  }
}

TEST_CASE("coupled stationary counts match the plain stationary sampler in law") {
  const auto law = PerturbedWalkLaw::uniform();
  const int reps = 10'000;
  std::vector<double> a(reps), b(reps);
  parallel_for(reps, 0, [&](std::size_t i) {
    Rng ra(replica_seed(54, i));
    a[i] = double(coupled_counts(law, 2, 8.0, ra).second);
    Rng rb(replica_seed(55, i));
    b[i] = double(count_n_j(law, 2, 8.0, rb, true));
  });
  CHECK(ks_two_sample(a, b).p_value > 0.01);
}

}  // TEST_SUITE
