#include "mmot/radial.hpp"

#include <cmath>
#include <memory>

namespace mmot {

ComotionMap radial_comotion_N2(const DiscreteDensity& lambda) {
  auto q = std::make_shared<Quantile>(lambda);
  const double mass = lambda.total_mass;
  return ComotionMap(
      [q, mass](double r) { return q->inverse(mass - q->cdf(r)); }, q->support_lo(),
      q->support_hi(), "radial-N2");
}

RadialProblem reduce_problem(const DiscreteDensity& rho_radial, int dimension,
                             int num_marginals) {
  if (num_marginals < 2) throw InvalidParameterError("need at least 2 marginals");
  return RadialProblem{radialize(rho_radial, dimension), dimension, num_marginals};
}

AngularReport angular_report(std::span<const double> radii, int dimension, int num_marginals) {
  if (dimension < 2) throw InvalidParameterError("angular report requires dimension >= 2");
  if (static_cast<int>(radii.size()) != num_marginals) {
    throw InvalidParameterError("radii count does not match marginal count");
  }
  if (num_marginals == 2) {
    return AngularReport{{M_PI}, reduced_pair_cost(radii[0], radii[1])};
  }
  if (num_marginals == 3) {
    ThreeBodyAngles a = minimize_three_body_angles(radii[0], radii[1], radii[2]);
    return AngularReport{{a.theta2, a.theta3}, a.cost};
  }
  throw InvalidParameterError("angular report implemented for 2 or 3 marginals");
}

}  // namespace mmot
