#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mmot/density.hpp"

// Test-only reference computations, independent of the library solver paths.

namespace testsupport {

// Exact two-marginal LP optimum for uniform marginals by enumerating all
// permutation vertices of the Birkhoff polytope (infinite-cost diagonals
// exclude permutations with fixed points automatically).
inline double lp_optimum_uniform(const std::vector<double>& points,
                                 const std::vector<std::vector<double>>& cost) {
  const int m = static_cast<int>(points.size());
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < m && std::isfinite(total); ++i) {
      total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    best = std::min(best, total / m);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Dense angular grid search at 1e-3 resolution plus a local refinement pass,
// as an oracle for the reduced three-body cost.
inline double three_body_grid_search(double r1, double r2, double r3) {
  auto cost = [&](double t2, double t3) {
    auto d = [](double r, double s, double dt) {
      return std::sqrt(std::max(0.0, r * r + s * s - 2.0 * r * s * std::cos(dt)));
    };
    auto inv = [](double x) { return x > 0.0 ? 1.0 / x : std::numeric_limits<double>::infinity(); };
    return inv(d(r1, r2, t2)) + inv(d(r1, r3, t3)) + inv(d(r2, r3, t2 - t3));
  };
  double best = std::numeric_limits<double>::infinity(), bt2 = 0.0, bt3 = 0.0;
  const double step = 1e-3;
  for (double t2 = 0.0; t2 <= M_PI; t2 += step) {
    for (double t3 = 0.0; t3 < 2.0 * M_PI; t3 += step) {
      const double v = cost(t2, t3);
      if (v < best) {
        best = v;
        bt2 = t2;
        bt3 = t3;
      }
    }
  }
  for (double fine = step / 10.0; fine > 1e-9; fine /= 10.0) {
    double lb2 = bt2, lb3 = bt3;
    for (double t2 = lb2 - 12 * fine; t2 <= lb2 + 12 * fine; t2 += fine) {
      for (double t3 = lb3 - 12 * fine; t3 <= lb3 + 12 * fine; t3 += fine) {
        const double v = cost(t2, t3);
        if (v < best) {
          best = v;
          bt2 = t2;
          bt3 = t3;
        }
      }
    }
  }
  return best;
}

// Quadrature of a pushforward test: integral of phi(f(x)) against the density.
template <typename Map, typename Fn>
double pushforward_integral(const mmot::DiscreteDensity& rho, const Map& f, const Fn& phi) {
  double acc = 0.0;
  for (int i = 0; i < rho.size(); ++i) {
    acc += phi(f(rho.grid.point(i))) * rho.weights[static_cast<std::size_t>(i)];
  }
  return acc;
}

template <typename Fn>
double density_integral(const mmot::DiscreteDensity& rho, const Fn& phi) {
  double acc = 0.0;
  for (int i = 0; i < rho.size(); ++i) {
    acc += phi(rho.grid.point(i)) * rho.weights[static_cast<std::size_t>(i)];
  }
  return acc;
}

}  // namespace testsupport
