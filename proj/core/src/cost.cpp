#include "mmot/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mmot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inv_or_inf(double dist) { return dist > 0.0 ? 1.0 / dist : kInf; }

// Squared distance of two points on circles of radii r, s with polar angles
// differing by dt.
double pair_dist2(double r, double s, double dt) {
  return r * r + s * s - 2.0 * r * s * std::cos(dt);
}

double planar_cost(double r1, double r2, double r3, double t2, double t3) {
  const double d12 = std::sqrt(std::max(0.0, pair_dist2(r1, r2, t2)));
  const double d13 = std::sqrt(std::max(0.0, pair_dist2(r1, r3, t3)));
  const double d23 = std::sqrt(std::max(0.0, pair_dist2(r2, r3, t2 - t3)));
  return inv_or_inf(d12) + inv_or_inf(d13) + inv_or_inf(d23);
}

template <typename F>
double golden_section(F&& f, double lo, double hi, double tol, double& xmin) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  xmin = 0.5 * (a + b);
  return f(xmin);
}

}  // namespace

void CoulombCostSpec::validate() const {
  if (num_marginals < 2) throw InvalidParameterError("cost needs at least 2 marginals");
  if (dimension < 1 || dimension > 3) throw InvalidParameterError("dimension must be 1, 2 or 3");
  if (mode == CostMode::RadialReduced && dimension < 2) {
    throw InvalidParameterError("radial-reduced cost requires dimension >= 2");
  }
}

double coulomb_pair(double x, double y) { return inv_or_inf(std::abs(x - y)); }

double coulomb_pair(const std::array<double, 3>& x, const std::array<double, 3>& y) {
  const double dx = x[0] - y[0], dy = x[1] - y[1], dz = x[2] - y[2];
  return inv_or_inf(std::sqrt(dx * dx + dy * dy + dz * dz));
}

double coulomb_total(std::span<const double> points) {
  std::vector<double> xs(points.begin(), points.end());
  std::sort(xs.begin(), xs.end());
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      total += coulomb_pair(xs[i], xs[j]);
    }
  }
  return total;
}

double coulomb_total(std::span<const std::array<double, 3>> points) {
  std::vector<std::array<double, 3>> xs(points.begin(), points.end());
  std::sort(xs.begin(), xs.end());
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      total += coulomb_pair(xs[i], xs[j]);
    }
  }
  return total;
}

ThreeBodyAngles minimize_three_body_angles(double r1, double r2, double r3) {
  const int zeros = (r1 == 0.0) + (r2 == 0.0) + (r3 == 0.0);
  if (zeros >= 2) return {kInf, 0.0, 0.0};

  auto f = [&](double t2, double t3) { return planar_cost(r1, r2, r3, t2, t3); };

  // 64x64 scan of [0,pi] x [0,2pi), then coordinate descent around the best cell.
  constexpr int kGrid = 64;
  const double step2 = M_PI / (kGrid - 1);
  const double step3 = 2.0 * M_PI / kGrid;
  double best = kInf, bt2 = 0.0, bt3 = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    const double t2 = i * step2;
    for (int j = 0; j < kGrid; ++j) {
      const double t3 = j * step3;
      const double v = f(t2, t3);
      if (v < best) {
        best = v;
        bt2 = t2;
        bt3 = t3;
      }
    }
  }
  if (!std::isfinite(best)) return {kInf, 0.0, 0.0};

  double w2 = 2.0 * step2, w3 = 2.0 * step3;
  for (int round = 0; round < 100; ++round) {
    const double prev = best;
    double x;
    best = golden_section([&](double t) { return f(t, bt3); },
                          std::max(0.0, bt2 - w2), std::min(M_PI, bt2 + w2), 1e-11, x);
    bt2 = x;
    best = golden_section([&](double t) { return f(bt2, t); }, bt3 - w3, bt3 + w3, 1e-11, x);
    bt3 = x;
    w2 = std::max(1e-9, 0.5 * w2);
    w3 = std::max(1e-9, 0.5 * w3);
    if (std::abs(prev - best) <= 1e-13 * (1.0 + std::abs(best)) && round > 3) break;
  }
  // report theta3 in [0, 2pi)
  bt3 = std::fmod(bt3, 2.0 * M_PI);
  if (bt3 < 0.0) bt3 += 2.0 * M_PI;
  return {best, bt2, bt3};
}

double reduced_cost(std::span<const double> radii, int dimension, int num_marginals) {
  if (dimension < 2) throw InvalidParameterError("reduced cost requires dimension >= 2");
  if (static_cast<int>(radii.size()) != num_marginals) {
    throw InvalidParameterError("radii count does not match marginal count");
  }
  for (double r : radii) {
    if (r < 0.0 || !std::isfinite(r)) throw InvalidParameterError("radii must be nonnegative");
  }
  if (num_marginals == 2) {
    return reduced_pair_cost(radii[0], radii[1]);
  }
  if (num_marginals == 3) {
    return minimize_three_body_angles(radii[0], radii[1], radii[2]).cost;
  }
  throw InvalidParameterError("reduced cost implemented for 2 or 3 marginals");
}

}  // namespace mmot
