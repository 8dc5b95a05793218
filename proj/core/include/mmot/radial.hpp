#pragma once

#include <vector>

#include "mmot/cost.hpp"
#include "mmot/density.hpp"
#include "mmot/oracles.hpp"

namespace mmot {

/// The reduced multi-marginal problem over radii: lambda = |.|_# rho together
/// with the reduced cost over radius tuples.
struct RadialProblem {
  DiscreteDensity lambda;
  int dimension;
  int num_marginals;

  CoulombCostSpec cost_spec() const {
    return CoulombCostSpec{num_marginals, dimension, CostMode::RadialReduced};
  }
  double cost(std::span<const double> radii) const {
    return reduced_cost(radii, dimension, num_marginals);
  }
};

/// Radial co-motion map a(r) = R^{-1}(total_mass - R(r)) where R is the
/// cumulative of lambda. Decreasing involution with the median radius fixed.
ComotionMap radial_comotion_N2(const DiscreteDensity& lambda);

/// Builds the reduced problem from a radial density profile rho(r).
RadialProblem reduce_problem(const DiscreteDensity& rho_radial, int dimension, int num_marginals);

struct AngularReport {
  std::vector<double> thetas;  // polar angles of electrons 2..N, first at 0
  double cost;
};

/// Optimal angles of the reduced-cost minimization at the given radii:
/// theta2 = pi exactly for two marginals, the cached three-body minimizer
/// otherwise.
AngularReport angular_report(std::span<const double> radii, int dimension, int num_marginals);

}  // namespace mmot
