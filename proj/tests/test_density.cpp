#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mmot/density.hpp"

using namespace mmot;

TEST_CASE("uniform density: equal weights on equal cells") {
  DiscreteDensity rho = make_uniform(2.0, 4);
  CHECK(rho.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(rho.weights[static_cast<std::size_t>(i)] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(rho.grid.lo() == doctest::Approx(-1.0));
  CHECK(rho.grid.hi() == doctest::Approx(1.0));
  CHECK(rho.sum() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("uniform density: cdf at the center is half the mass") {
  DiscreteDensity rho = make_uniform(2.0, 1000);
  Quantile q(rho);
  CHECK(q.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("constructors reject bad parameters") {
  CHECK_THROWS_AS(make_uniform(-1.0, 10), InvalidParameterError);
  CHECK_THROWS_AS(make_uniform(1.0, 1), InvalidParameterError);
  CHECK_THROWS_AS(make_triangular(0.0, 10), InvalidParameterError);
  CHECK_THROWS_AS(make_gaussian(1.0, 2.5, 2.5, 10), InvalidParameterError);
}

TEST_CASE("triangular density: peak at the origin, symmetric halves") {
  DiscreteDensity rho = make_triangular(1.0, 201);
  int peak = 0;
  for (int i = 1; i < rho.size(); ++i) {
    if (rho.weights[static_cast<std::size_t>(i)] > rho.weights[static_cast<std::size_t>(peak)]) peak = i;
  }
  CHECK(std::abs(rho.grid.point(peak)) < 1e-12);

  double left = 0.0, right = 0.0;
  for (int i = 0; i < rho.size(); ++i) {
    if (rho.grid.point(i) < 0.0) left += rho.weights[static_cast<std::size_t>(i)];
    if (rho.grid.point(i) > 0.0) right += rho.weights[static_cast<std::size_t>(i)];
  }
  CHECK(std::abs(left - right) < 1e-12);

  Quantile q(rho);
  CHECK(q.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("symmetric constructors mirror weights exactly") {
  for (int m : {10, 11, 1000}) {
    DiscreteDensity g = make_gaussian(1.0, -2.5, 2.5, m);
    DiscreteDensity t = make_triangular(1.0, m);
    for (int i = 0; i < m; ++i) {
      const std::size_t a = static_cast<std::size_t>(i);
      const std::size_t b = static_cast<std::size_t>(m - 1 - i);
      CHECK(g.weights[a] == g.weights[b]);
      CHECK(t.weights[a] == t.weights[b]);
      CHECK(g.grid.point(i) == -g.grid.point(m - 1 - i));
    }
  }
}

TEST_CASE("gaussian density matches exp(-x^2) shape") {
  DiscreteDensity rho = make_gaussian(1.0, -2.5, 2.5, 1000);
  CHECK(rho.sum() == doctest::Approx(1.0).epsilon(1e-13));
  // value ratio against the analytic profile
  const double v0 = rho.value(500);
  const double x = rho.grid.point(700);
  CHECK(rho.value(700) / v0 ==
        doctest::Approx(std::exp(-x * x) / std::exp(-rho.grid.point(500) * rho.grid.point(500)))
            .epsilon(1e-10));
  Quantile q(rho);
  CHECK(q.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("radialize: uniform ball profiles") {
  DiscreteDensity rho = make_ball_rho(400);
  DiscreteDensity lam3 = radialize(rho, 3);
  DiscreteDensity lam2 = radialize(rho, 2);
  // lambda ~ r^{d-1}: value ratios follow the power law
  const double r1 = lam3.grid.point(100), r2 = lam3.grid.point(300);
  CHECK(lam3.value(300) / lam3.value(100) == doctest::Approx((r2 * r2) / (r1 * r1)).epsilon(1e-12));
  CHECK(lam2.value(300) / lam2.value(100) == doctest::Approx(r2 / r1).epsilon(1e-12));
  CHECK(lam3.sum() == doctest::Approx(1.0).epsilon(1e-13));

  CHECK_THROWS_AS(radialize(rho, 1), InvalidParameterError);
  DiscreteDensity line = make_uniform(2.0, 16);  // has negative grid points
  CHECK_THROWS_AS(radialize(line, 3), InvalidParameterError);
}

TEST_CASE("quantile inverse on uniform and cubic cdfs") {
  DiscreteDensity u = make_uniform_interval(0.0, 1.0, 300);
  Quantile q(u);
  CHECK(q.inverse(0.5) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(q.inverse(1.0 / 3.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(q.inverse(-0.1), DomainError);
  CHECK_THROWS_AS(q.inverse(1.1), DomainError);

  // lambda ~ r^2 on [0,1]: inverse cdf is w^{1/3}
  DiscreteDensity lam = radialize(make_ball_rho(2000), 3);
  Quantile ql(lam);
  CHECK(ql.inverse(0.125) == doctest::Approx(0.5).epsilon(2e-4));
  CHECK(ql.inverse(0.7) == doctest::Approx(std::cbrt(0.7)).epsilon(2e-4));
}

TEST_CASE("cdf and inverse are consistent inside the support") {
  DiscreteDensity t = make_triangular(1.0, 500);
  Quantile q(t);
  for (double w : {0.05, 0.2, 0.5, 0.77, 0.95}) {
    const double x = q.inverse(w);
    CHECK(q.cdf(x) == doctest::Approx(w).epsilon(1e-12));
  }
  for (double x : {-0.8, -0.3, 0.1, 0.6}) {
    const double cell = t.grid.span() / 500;
    CHECK(std::abs(q.inverse(q.cdf(x)) - x) <= cell);
  }
}

TEST_CASE("load_density parses, validates and round-trips") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mmot_density_test";
  fs::create_directories(dir);

  SUBCASE("three-point triangular file") {
    const fs::path f = dir / "tri.csv";
    std::ofstream(f) << "0,0\n1,2\n2,0\n";
    LoadedDensity loaded = load_density(f.string());
    CHECK(loaded.density.size() == 3);
    CHECK(loaded.density.weights[1] == doctest::Approx(1.0));
    CHECK(loaded.density.weights[0] == 0.0);
    CHECK(loaded.density.weights[2] == 0.0);
  }

  SUBCASE("negative weight is rejected with its row") {
    const fs::path f = dir / "neg.csv";
    std::ofstream(f) << "position,weight\n0,1\n1,-2\n2,1\n";
    try {
      load_density(f.string());
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.row() == 3);
    }
  }

  SUBCASE("non-monotone positions are rejected") {
    const fs::path f = dir / "mono.csv";
    std::ofstream(f) << "0,1\n2,1\n1,1\n";
    CHECK_THROWS_AS(load_density(f.string()), IoError);
  }

  SUBCASE("save -> load reproduces weights") {
    DiscreteDensity rho = make_gaussian(1.0, -2.5, 2.5, 64);
    const fs::path f = dir / "roundtrip.csv";
    save_density(f.string(), rho);
    LoadedDensity loaded = load_density(f.string());
    REQUIRE(loaded.density.size() == rho.size());
    for (int i = 0; i < rho.size(); ++i) {
      CHECK(loaded.density.weights[static_cast<std::size_t>(i)] ==
            doctest::Approx(rho.weights[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("rediscretize preserves shape and mass") {
  DiscreteDensity t = make_triangular(1.0, 101);
  DiscreteDensity fine = rediscretize(t, 400);
  CHECK(fine.size() == 400);
  CHECK(fine.sum() == doctest::Approx(1.0).epsilon(1e-13));
  Quantile qa(t), qb(fine);
  for (double x : {-0.5, 0.0, 0.4}) {
    CHECK(qb.cdf(x) == doctest::Approx(qa.cdf(x)).epsilon(1e-3));
  }
}
