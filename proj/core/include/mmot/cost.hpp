#pragma once

#include <array>
#include <limits>
#include <span>

#include "mmot/errors.hpp"

namespace mmot {

enum class CostMode { FullSpace, RadialReduced };

struct CoulombCostSpec {
  int num_marginals = 2;  // N
  int dimension = 1;      // d
  CostMode mode = CostMode::FullSpace;

  void validate() const;
};

/// 1/|x-y| on the line; +infinity at coincidence.
double coulomb_pair(double x, double y);
double coulomb_pair(const std::array<double, 3>& x, const std::array<double, 3>& y);

/// Sum of 1/|x_i-x_j| over unordered pairs. Inputs are canonicalized by
/// sorting, so permutations of the arguments give a bitwise identical value.
double coulomb_total(std::span<const double> points);
double coulomb_total(std::span<const std::array<double, 3>> points);

struct ThreeBodyAngles {
  double cost;
  double theta2;  // polar angle of the second electron, first fixed at 0
  double theta3;
};

/// Coulomb energy of three coplanar electrons at radii r with the first at
/// angle 0, minimized over (theta2, theta3) in [0,pi] x [0,2pi). 64x64 grid
/// scan plus golden-section coordinate descent; value accurate to 1e-8.
ThreeBodyAngles minimize_three_body_angles(double r1, double r2, double r3);

/// Reduced cost c~(r) = inf { c(x) : |x_i| = r_i }. Closed antipodal form
/// 1/(r1+r2) for N = 2; angular minimization for N = 3. Requires d >= 2.
double reduced_cost(std::span<const double> radii, int dimension, int num_marginals);

inline double reduced_pair_cost(double r, double s) {
  const double d = r + s;
  if (d <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / d;
}

}  // namespace mmot
