#include <cmath>
#include <random>

#include "doctest.h"
#include "mmot/recovery.hpp"
#include "mmot/solver.hpp"

using namespace mmot;

namespace {

DiscreteDensity random_density(std::mt19937_64& rng, int m, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> wdist(0.2, 1.0);
  Grid1D grid = Grid1D::uniform_cells(lo, hi, m);
  std::vector<double> w(static_cast<std::size_t>(m));
  double s = 0.0;
  for (double& x : w) {
    x = wdist(rng);
    s += x;
  }
  for (double& x : w) x /= s;
  return DiscreteDensity(std::move(grid), std::move(w), 1.0);
}

TransportPlan plan_from(std::vector<int> shape, std::vector<double> vals) {
  TransportPlan p(std::move(shape), 1.0);
  p.values() = std::move(vals);
  return p;
}

double max_abs_diff(const TransportPlan& a, const TransportPlan& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  }
  return d;
}

}  // namespace

TEST_CASE("kl_project: uniform case and the hand example") {
  DiscreteDensity rho(Grid1D::uniform_cells(0.0, 1.0, 2), {0.5, 0.5}, 1.0);

  TransportPlan ones = plan_from({2, 2}, {1, 1, 1, 1});
  TransportPlan p = kl_project(ones, rho, 0);
  for (double v : p.values()) CHECK(v == doctest::Approx(0.25));

  TransportPlan diag = plan_from({2, 2}, {1, 0, 0, 3});
  TransportPlan q = kl_project(diag, rho, 0);
  CHECK(q.values()[0] == doctest::Approx(0.5));
  CHECK(q.values()[1] == 0.0);
  CHECK(q.values()[2] == 0.0);
  CHECK(q.values()[3] == doctest::Approx(0.5));
}

TEST_CASE("kl_project is idempotent and leaves feasible plans unchanged") {
  DiscreteDensity rho(Grid1D::uniform_cells(0.0, 1.0, 2), {0.5, 0.5}, 1.0);
  TransportPlan feasible = plan_from({2, 2}, {0.3, 0.2, 0.2, 0.3});
  TransportPlan once = kl_project(feasible, rho, 0);
  CHECK(max_abs_diff(once, feasible) < 1e-15);

  TransportPlan skew = plan_from({2, 2}, {0.9, 0.4, 0.1, 0.8});
  TransportPlan p1 = kl_project(skew, rho, 1);
  TransportPlan p2 = kl_project(p1, rho, 1);
  CHECK(max_abs_diff(p1, p2) < 1e-15);
}

TEST_CASE("kl_project reports infeasible fibers") {
  DiscreteDensity rho(Grid1D::uniform_cells(0.0, 1.0, 2), {0.5, 0.5}, 1.0);
  TransportPlan dead_row = plan_from({2, 2}, {0.0, 0.0, 1.0, 1.0});
  CHECK_THROWS_AS(kl_project(dead_row, rho, 0), InfeasibilityError);
}

TEST_CASE("kl projection decreases KL divergence to feasible plans") {
  // KL(feasible || projected) <= KL(feasible || input) on random instances
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.1, 1.0);
  DiscreteDensity rho(Grid1D::uniform_cells(0.0, 1.0, 3), {0.2, 0.5, 0.3}, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> vals(9);
    for (double& v : vals) v = dist(rng);
    TransportPlan input = plan_from({3, 3}, vals);
    TransportPlan projected = kl_project(input, rho, 0);
    // a feasible plan with the row marginal rho: product rho x q
    std::vector<double> q{0.3, 0.3, 0.4};
    auto kl_to = [&](const TransportPlan& ref) {
      double kl = 0.0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double f = rho.weights[static_cast<std::size_t>(i)] * q[static_cast<std::size_t>(j)];
          kl += f * std::log(f / ref.values()[static_cast<std::size_t>(3 * i + j)]);
        }
      }
      return kl;
    };
    CHECK(kl_to(projected) <= kl_to(input) + 1e-12);
  }
}

TEST_CASE("bregman on the symmetric 2x2 instance converges immediately") {
  DiscreteDensity rho(Grid1D::uniform_cells(-1.0, 1.0, 2), {0.5, 0.5}, 1.0);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.5);
  SolverConfig cfg;
  cfg.epsilon = 0.5;
  cfg.tolerance = 1e-14;
  BregmanResult res = bregman_solve(kernel, rho, cfg);
  CHECK(res.converged);
  CHECK(res.sweeps == 1);
  CHECK(res.residual.max_linf() < 1e-14);
  // off-diagonal mass 1/2 each, diagonal excluded by the infinite cost
  CHECK(res.plan.values()[1] == doctest::Approx(0.5));
  CHECK(res.plan.values()[2] == doctest::Approx(0.5));
  CHECK(res.plan.values()[0] == 0.0);
}

TEST_CASE("residuals of hand-built plans") {
  DiscreteDensity rho(Grid1D::uniform_cells(0.0, 1.0, 2), {0.5, 0.5}, 1.0);
  TransportPlan exact = plan_from({2, 2}, {0.3, 0.2, 0.2, 0.3});
  MarginalResidual r = residuals(exact, rho);
  CHECK(r.max_linf() == 0.0);
  CHECK(r.max_l1() == 0.0);

  TransportPlan gibbs = plan_from({2, 2}, {0.0, 1.0, 1.0, 0.0});
  MarginalResidual g = residuals(gibbs, rho);
  CHECK(g.max_linf() == doctest::Approx(0.5));
}

TEST_CASE("ipfp enforces the updated marginal exactly after each axis update") {
  std::mt19937_64 rng(11);
  DiscreteDensity rho = random_density(rng, 6);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.2);
  ScalingState state = initial_state(kernel, rho, false);
  ipfp_sweep(kernel, rho, state);
  // axis 1 was updated last inside the sweep
  std::vector<double> marg = marginal_of(kernel, state, 1);
  for (int j = 0; j < rho.size(); ++j) {
    CHECK(marg[static_cast<std::size_t>(j)] ==
          doctest::Approx(rho.weights[static_cast<std::size_t>(j)]).epsilon(1e-13));
  }
}

TEST_CASE("one IPFP sweep equals one Bregman cycle from the same state") {
  std::mt19937_64 rng(5);
  for (int n : {2, 3}) {
    DiscreteDensity rho = random_density(rng, 7);
    CoulombCostSpec spec{n, 1, CostMode::FullSpace};
    GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.3);

    ScalingState state = initial_state(kernel, rho, false);
    TransportPlan start = materialize_plan(kernel, state);

    ipfp_sweep(kernel, rho, state);
    TransportPlan via_ipfp = materialize_plan(kernel, state);

    TransportPlan via_bregman = start;
    for (int axis = 0; axis < n; ++axis) via_bregman = kl_project(via_bregman, rho, axis);

    CHECK(max_abs_diff(via_ipfp, via_bregman) < 1e-12);
  }
}

TEST_CASE("bregman and ipfp are mutual oracles at convergence") {
  DiscreteDensity rho = make_uniform(2.0, 5);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.05);
  SolverConfig cfg;
  cfg.epsilon = 0.05;
  cfg.tolerance = 1e-13;
  cfg.max_sweeps = 20000;

  BregmanResult via_bregman = bregman_solve(kernel, rho, cfg);
  SolveResult via_ipfp = ipfp_solve(kernel, rho, cfg);
  TransportPlan plan_ipfp = materialize_plan(kernel, via_ipfp.state);

  CHECK(via_bregman.converged);
  CHECK(via_ipfp.converged);
  CHECK(max_abs_diff(via_bregman.plan, plan_ipfp) < 1e-10);
}

TEST_CASE("three-marginal dense equivalence on a small instance") {
  DiscreteDensity rho = make_uniform_interval(0.0, 1.0, 10);
  CoulombCostSpec spec{3, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.3);
  SolverConfig cfg;
  cfg.epsilon = 0.3;
  cfg.tolerance = 1e-13;
  cfg.max_sweeps = 20000;

  BregmanResult via_bregman = bregman_solve(kernel, rho, cfg);
  SolveResult via_ipfp = ipfp_solve(kernel, rho, cfg);
  TransportPlan plan_ipfp = materialize_plan(kernel, via_ipfp.state);
  CHECK(via_bregman.converged);
  CHECK(via_ipfp.converged);
  CHECK(max_abs_diff(via_bregman.plan, plan_ipfp) < 1e-8);
}

TEST_CASE("converged symmetric problems give symmetric plans") {
  DiscreteDensity rho = make_uniform(2.0, 24);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.1);
  SolverConfig cfg;
  cfg.epsilon = 0.1;
  cfg.tolerance = 1e-13;
  SolveResult res = ipfp_solve(kernel, rho, cfg);
  REQUIRE(res.converged);
  TransportPlan plan = materialize_plan(kernel, res.state);
  auto mat = plan.matrix();
  double asym = 0.0;
  for (int i = 0; i < 24; ++i) {
    for (int j = 0; j < 24; ++j) asym = std::max(asym, std::abs(mat(i, j) - mat(j, i)));
  }
  CHECK(asym < 1e-10);
  CHECK(plan.total_mass() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("marginal residual decreases monotonically over sweeps") {
  DiscreteDensity rho = make_triangular(1.0, 20);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.08);
  SolverConfig cfg;
  cfg.epsilon = 0.08;
  cfg.tolerance = 1e-12;
  cfg.record_history = true;
  SolveResult res = ipfp_solve(kernel, rho, cfg);
  REQUIRE(res.converged);
  for (std::size_t s = 2; s < res.history.size(); ++s) {
    CHECK(res.history[s].residual_linf <= res.history[s - 1].residual_linf * (1.0 + 1e-9));
  }
}

TEST_CASE("transport cost is nonincreasing along a decreasing epsilon ladder") {
  DiscreteDensity rho = make_uniform(2.0, 16);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  SolverConfig cfg;
  cfg.tolerance = 1e-13;
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.4, 0.2, 0.1, 0.05}) {
    GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, eps);
    cfg.epsilon = eps;
    SolveResult res = ipfp_solve(kernel, rho, cfg);
    REQUIRE(res.converged);
    const double cost = transport_cost(kernel, res.state);
    CHECK(cost <= prev + 1e-10);
    prev = cost;
  }
}

TEST_CASE("log-domain and linear-domain plans agree") {
  DiscreteDensity rho = make_triangular(1.0, 14);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.1);
  SolverConfig lin;
  lin.epsilon = 0.1;
  lin.tolerance = 1e-13;
  SolverConfig lg = lin;
  lg.mode = SolverConfig::Mode::Log;

  SolveResult a = ipfp_solve(kernel, rho, lin);
  SolveResult b = ipfp_solve(kernel, rho, lg);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  TransportPlan pa = materialize_plan(kernel, a.state);
  TransportPlan pb = materialize_plan(kernel, b.state);
  double rel = 0.0;
  for (std::size_t i = 0; i < pa.values().size(); ++i) {
    const double denom = std::max(pa.values()[i], 1e-300);
    if (pa.values()[i] > 1e-250) {
      rel = std::max(rel, std::abs(pa.values()[i] - pb.values()[i]) / denom);
    }
  }
  CHECK(rel < 1e-8);
}

TEST_CASE("log-domain three-marginal sweep matches the linear one") {
  DiscreteDensity rho = make_uniform_interval(0.0, 1.0, 8);
  CoulombCostSpec spec{3, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.4);
  SolverConfig lin;
  lin.epsilon = 0.4;
  lin.tolerance = 1e-12;
  SolverConfig lg = lin;
  lg.mode = SolverConfig::Mode::Log;
  TransportPlan pa = materialize_plan(kernel, ipfp_solve(kernel, rho, lin).state);
  TransportPlan pb = materialize_plan(kernel, ipfp_solve(kernel, rho, lg).state);
  CHECK(max_abs_diff(pa, pb) < 1e-10);
}

TEST_CASE("linear mode restarts in the log domain when scalings overflow") {
  DiscreteDensity rho = make_uniform_interval(0.0, 1.0, 16);
  CoulombCostSpec spec{3, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.002);
  SolverConfig cfg;
  cfg.epsilon = 0.002;
  cfg.tolerance = 1e-12;
  cfg.max_sweeps = 4000;
  SolveResult res = ipfp_solve(kernel, rho, cfg);
  CHECK(!res.warnings.empty());
  CHECK(res.state.log_mode);
  CHECK(res.converged);
}

TEST_CASE("zero-weight grid points stay out of the plan") {
  Grid1D grid = Grid1D::uniform_cells(0.0, 1.0, 5);
  DiscreteDensity rho(grid, {0.25, 0.0, 0.25, 0.25, 0.25}, 1.0);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, grid, 0.2);
  SolverConfig cfg;
  cfg.epsilon = 0.2;
  cfg.tolerance = 1e-13;
  SolveResult res = ipfp_solve(kernel, rho, cfg);
  REQUIRE(res.converged);
  TransportPlan plan = materialize_plan(kernel, res.state);
  auto mat = plan.matrix();
  for (int j = 0; j < 5; ++j) {
    CHECK(mat(1, j) == 0.0);
    CHECK(mat(j, 1) == 0.0);
  }
}

TEST_CASE("structurally dead rows against positive mass are rejected early") {
  // two nearly coincident points make every pair cost huge: the whole kernel
  // row flushes to zero
  Grid1D grid = Grid1D::from_points({0.0, 1e-12, 1.0, 2.0});
  DiscreteDensity rho(grid, {0.25, 0.25, 0.25, 0.25}, 1.0);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, grid, 1e-3);
  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  CHECK_THROWS_AS(ipfp_solve(kernel, rho, cfg), InfeasibilityError);
}

TEST_CASE("entropic cost closed forms") {
  DiscreteDensity rho(Grid1D::uniform_cells(0.0, 1.0, 2), {0.5, 0.5}, 1.0);
  CoulombCostSpec spec{2, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 1.0);

  TransportPlan uniform = plan_from({2, 2}, {0.25, 0.25, 0.25, 0.25});
  EntropicCost e = entropic_cost(uniform, kernel);
  CHECK(e.entropy == doctest::Approx(-std::log(4.0)).epsilon(1e-14));
  CHECK(e.mass_on_infinite_cost);  // diagonal mass against the infinite cost
  CHECK(std::isinf(e.transport_cost));

  TransportPlan off = plan_from({2, 2}, {0.0, 0.5, 0.5, 0.0});
  EntropicCost e2 = entropic_cost(off, kernel);
  CHECK(!e2.mass_on_infinite_cost);
  const double gap = rho.grid.point(1) - rho.grid.point(0);
  CHECK(e2.transport_cost == doctest::Approx(1.0 / gap).epsilon(1e-13));
}

TEST_CASE("plan mass and pair marginal consistency for three marginals") {
  DiscreteDensity rho = make_uniform_interval(0.0, 1.0, 9);
  CoulombCostSpec spec{3, 1, CostMode::FullSpace};
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, 0.25);
  SolverConfig cfg;
  cfg.epsilon = 0.25;
  cfg.tolerance = 1e-13;
  SolveResult res = ipfp_solve(kernel, rho, cfg);
  REQUIRE(res.converged);

  TransportPlan plan = materialize_plan(kernel, res.state);
  Eigen::MatrixXd p01 = pair_marginal(kernel, res.state, 0, 1);
  // against the dense projection
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) {
      double s = 0.0;
      for (int k = 0; k < 9; ++k) {
        s += plan.values()[static_cast<std::size_t>((i * 9 + j) * 9 + k)];
      }
      CHECK(p01(i, j) == doctest::Approx(s).epsilon(1e-11));
    }
  }
  // transport cost from scalings vs the dense plan
  CHECK(transport_cost(kernel, res.state) ==
        doctest::Approx(entropic_cost(plan, kernel).transport_cost).epsilon(1e-10));
}
