#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "mmot/cost.hpp"
#include "mmot/kernel.hpp"
#include "support/oracles.hpp"

using namespace mmot;

TEST_CASE("coulomb pair values") {
  CHECK(coulomb_pair(0.0, 1.0) == 1.0);
  CHECK(std::isinf(coulomb_pair(0.3, 0.3)));
  const std::array<double, 3> a{0, 0, 0}, b{0, 0, 2};
  CHECK(coulomb_pair(a, b) == 0.5);
  CHECK(std::isinf(coulomb_pair(a, a)));
}

TEST_CASE("coulomb_total sums unordered pairs") {
  const std::vector<double> pts{0.0, 1.0 / 3.0, 2.0 / 3.0};
  // brute-force pair enumeration as the cross-check
  double brute = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) brute += 1.0 / std::abs(pts[i] - pts[j]);
  }
  CHECK(coulomb_total(pts) == doctest::Approx(7.5).epsilon(1e-14));
  CHECK(coulomb_total(pts) == doctest::Approx(brute).epsilon(1e-14));

  const std::vector<double> two{0.25, 0.75};
  CHECK(coulomb_total(two) == coulomb_pair(0.25, 0.75));
}

TEST_CASE("coulomb_total is exactly permutation invariant") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> pts(4);
    for (double& x : pts) x = dist(rng);
    const double base = coulomb_total(pts);
    std::vector<double> perm = {pts[2], pts[0], pts[3], pts[1]};
    CHECK(coulomb_total(perm) == base);
  }
}

TEST_CASE("reduced cost: antipodal closed form for two marginals") {
  const std::vector<double> r11{1.0, 1.0};
  CHECK(reduced_cost(r11, 3, 2) == doctest::Approx(0.5).epsilon(1e-15));
  const std::vector<double> r12{1.0, 2.0};
  CHECK(reduced_cost(r12, 2, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const std::vector<double> zeros{0.0, 0.0};
  CHECK(std::isinf(reduced_cost(zeros, 3, 2)));
  CHECK_THROWS_AS(reduced_cost(r11, 1, 2), InvalidParameterError);
}

TEST_CASE("reduced three-body cost matches the dense grid-search oracle") {
  // equal radii: equilateral triangle on the great circle
  const double oracle = testsupport::three_body_grid_search(1.0, 1.0, 1.0);
  const std::vector<double> r{1.0, 1.0, 1.0};
  const double val = reduced_cost(r, 3, 3);
  CHECK(val == doctest::Approx(oracle).epsilon(1e-7));
  CHECK(val == doctest::Approx(std::sqrt(3.0)).epsilon(1e-7));

  const std::vector<double> r2{0.6, 1.0, 1.7};
  CHECK(reduced_cost(r2, 3, 3) ==
        doctest::Approx(testsupport::three_body_grid_search(0.6, 1.0, 1.7)).epsilon(1e-7));
}

TEST_CASE("reduced cost is symmetric in its radii") {
  const std::vector<double> a{0.4, 0.9, 1.3};
  const std::vector<double> b{1.3, 0.4, 0.9};
  CHECK(reduced_cost(a, 3, 3) == doctest::Approx(reduced_cost(b, 3, 3)).epsilon(1e-8));
}

TEST_CASE("reduced cost lower-bounds the full cost on its sphere section") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> rad(0.1, 2.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> zc(-1.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> r{rad(rng), rad(rng), rad(rng)};
    std::vector<std::array<double, 3>> pts;
    for (double ri : r) {
      const double z = zc(rng), phi = ang(rng);
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      pts.push_back({ri * s * std::cos(phi), ri * s * std::sin(phi), ri * z});
    }
    CHECK(reduced_cost(r, 3, 3) <= coulomb_total(pts) + 1e-8);
  }
}

TEST_CASE("gibbs kernel entries and symmetry") {
  Grid1D grid = Grid1D::centered_uniform(1.0, 64);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel k = GibbsKernel::build(spec, grid, 1.0);
  const Eigen::MatrixXd& f = k.pair_factor();

  // cost 1 at distance 1 -> entry e^{-1}
  int i = 0, j = grid.size() - 1;
  while (std::abs(grid.point(j) - grid.point(i) - 1.0) > 1e-12) --j;
  CHECK(f(i, j) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  for (int d = 0; d < grid.size(); ++d) CHECK(f(d, d) == 0.0);
  for (int a = 0; a < grid.size(); a += 7) {
    for (int b = 0; b < grid.size(); b += 5) CHECK(f(a, b) == f(b, a));
  }
  for (int a = 0; a < grid.size(); ++a) {
    for (int b = 0; b < grid.size(); ++b) {
      CHECK(f(a, b) >= 0.0);
      CHECK(f(a, b) <= 1.0);
    }
  }
}

TEST_CASE("kernel entries decrease when epsilon decreases") {
  Grid1D grid = Grid1D::centered_uniform(1.0, 32);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel hot = GibbsKernel::build(spec, grid, 0.5);
  GibbsKernel cold = GibbsKernel::build(spec, grid, 0.1);
  for (int i = 0; i < 32; ++i) {
    for (int j = 0; j < 32; ++j) {
      if (i == j) continue;
      CHECK(cold.pair_factor()(i, j) <= hot.pair_factor()(i, j));
    }
  }
}

TEST_CASE("kernel construction is independent of the thread count") {
  Grid1D grid = Grid1D::centered_uniform(1.0, 128);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel k1 = GibbsKernel::build(spec, grid, 0.05, 1);
  GibbsKernel k4 = GibbsKernel::build(spec, grid, 0.05, 4);
  CHECK((k1.pair_factor() - k4.pair_factor()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("radial pair kernel and validation") {
  Grid1D grid = Grid1D::uniform_cells(0.0, 1.0, 16);
  CoulombCostSpec spec{2, 3, CostMode::RadialReduced};
  GibbsKernel k = GibbsKernel::build(spec, grid, 0.1);
  const double r = grid.point(2), s = grid.point(9);
  CHECK(k.pair_factor()(2, 9) == doctest::Approx(std::exp(-1.0 / (r + s) / 0.1)).epsilon(1e-12));

  CHECK_THROWS_AS(GibbsKernel::build(spec, grid, 0.0), InvalidParameterError);
  CoulombCostSpec bad{2, 1, CostMode::RadialReduced};
  CHECK_THROWS_AS(GibbsKernel::build(bad, grid, 0.1), InvalidParameterError);
}

TEST_CASE("three-body radial cost table agrees with direct minimization") {
  Grid1D grid = Grid1D::uniform_cells(0.0, 2.0, 12);
  ThreeBodyRadialCost table(grid, 2);
  for (int i : {0, 3, 11}) {
    for (int j : {1, 7}) {
      for (int k : {2, 11}) {
        const double direct =
            minimize_three_body_angles(grid.point(i), grid.point(j), grid.point(k)).cost;
        CHECK(table.at(i, j, k) == doctest::Approx(direct).epsilon(1e-10));
        CHECK(table.at(k, i, j) == table.at(i, j, k));
      }
    }
  }
}
