#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mmot/density.hpp"
#include "mmot/solver.hpp"

namespace mmot {

/// Kantorovich potential samples recovered from scalings, gauge-anchored so
/// that the density-weighted mean equals `anchor`.
struct Potential {
  std::vector<double> x;
  std::vector<double> values;
  double epsilon;
  double anchor = 0.0;
};

/// u_j = epsilon * log a_j averaged over the N scalings, then anchored.
/// Entries at zero-mass grid points are meaningless and set to zero.
Potential potential_from_scalings(const ScalingState& state, const GibbsKernel& kernel,
                                  const DiscreteDensity& marginal, double anchor = 0.0);

struct DualityReport {
  double primal_cost;        // <c, gamma>
  double dual_value;         // N <u_raw, rho>
  double kappa_feasibility;  // max over sampled tuples of (sum u - c) / epsilon
  double kappa_gap;          // (dual_value - primal_cost) / epsilon
  int samples;
};

/// Weak-duality diagnostics with the unanchored potential; sampling is
/// deterministic in the seed.
DualityReport duality_report(const ScalingState& state, const GibbsKernel& kernel,
                             const DiscreteDensity& marginal, std::uint64_t seed = 12345,
                             int samples = 2000);

/// Conditional-mean (barycentric) and conditional-mode map estimates read off
/// a pair plan, with the conditional standard deviation as spread diagnostic.
struct MapEstimate {
  std::vector<double> x;
  std::vector<double> barycentric;
  std::vector<double> argmax;
  std::vector<double> spread;
  std::vector<std::uint8_t> valid;  // 0 for zero-mass source rows
};

MapEstimate map_from_plan(const Eigen::MatrixXd& pair_plan, const Grid1D& source,
                          const Grid1D& target);

Eigen::MatrixXd project_pair(const TransportPlan& plan, int axis_a, int axis_b);

/// <c, gamma> of a converged plan; equals the full-space value for radial runs.
double sce_energy(const GibbsKernel& kernel, const ScalingState& state);
double sce_energy(const TransportPlan& plan, const GibbsKernel& kernel);

}  // namespace mmot
