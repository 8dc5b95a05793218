#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mmot/density.hpp"
#include "mmot/kernel.hpp"

namespace mmot {

struct SolverConfig {
  double epsilon = 1e-2;     // informational; the kernel owns the value used
  int max_sweeps = 10000;
  double tolerance = 0.0;    // <= 0: auto, 1e-10 * max marginal weight
  enum class Mode { Linear, Log } mode = Mode::Linear;
  bool record_history = false;
  int threads = 0;

  void validate() const;
  double resolved_tolerance(const DiscreteDensity& marginal) const;
};

struct MarginalResidual {
  std::vector<double> linf;  // per marginal
  std::vector<double> l1;

  double max_linf() const;
  double max_l1() const;
};

/// Dense N-way array of plan weights, row-major with axis 0 slowest.
class TransportPlan {
 public:
  TransportPlan(std::vector<int> shape, double epsilon_used);

  /// The Gibbs plan exp(-c/eps) itself.
  static TransportPlan dense_gibbs(const GibbsKernel& kernel);

  int order() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t entry_count() const { return values_.size(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double epsilon_used() const { return epsilon_; }

  std::size_t stride(int axis) const;
  double total_mass() const;
  void renormalize(double mass = 1.0);

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  matrix() const;

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
  double epsilon_;
};

struct SweepRecord {
  int sweep;
  double residual_linf;
  double residual_l1;
  double objective;  // <c, gamma>; NaN when not recorded
};

/// The N scaling vectors of the IPFP recursion. Either the linear vectors or
/// their logs are active, never both.
struct ScalingState {
  std::vector<Eigen::ArrayXd> vec;
  std::vector<Eigen::ArrayXd> logvec;
  bool log_mode = false;
  int sweep_count = 0;

  int marginal_count() const {
    return static_cast<int>(log_mode ? logvec.size() : vec.size());
  }
};

struct SolveResult {
  ScalingState state;
  MarginalResidual residual;
  bool converged = false;
  int sweeps = 0;
  std::vector<SweepRecord> history;
  std::vector<std::string> warnings;
};

struct BregmanResult {
  TransportPlan plan;
  MarginalResidual residual;
  bool converged = false;
  int sweeps = 0;
  std::vector<SweepRecord> history;
};

/// Exact KL projection onto the marginal constraint of one axis (0-based):
/// each fiber is rescaled by rho_j / (partial sum over the other axes).
TransportPlan kl_project(const TransportPlan& plan, const DiscreteDensity& marginal, int axis);

/// Dense Bregman iteration: gamma^0 = Gibbs plan, then cyclic KL projections
/// over axes 0..N-1 until the max marginal violation drops below tolerance.
BregmanResult bregman_solve(const GibbsKernel& kernel, const DiscreteDensity& marginal,
                            const SolverConfig& config);
BregmanResult bregman_solve_from(TransportPlan initial, const GibbsKernel& kernel,
                                 const DiscreteDensity& marginal, const SolverConfig& config);

ScalingState initial_state(const GibbsKernel& kernel, const DiscreteDensity& marginal,
                           bool log_mode);

/// One full IPFP cycle over all axes. Returns the max pre-update marginal
/// violation seen during the cycle (and its L1 counterpart).
std::pair<double, double> ipfp_sweep(const GibbsKernel& kernel, const DiscreteDensity& marginal,
                                     ScalingState& state, int threads = 0);

/// Scaling-vector IPFP on the separable kernel factors (or the c~ tensor for
/// the radial three-marginal kernel). Restarts in log mode on linear-domain
/// overflow or underflow, with a warning in the result.
SolveResult ipfp_solve(const GibbsKernel& kernel, const DiscreteDensity& marginal,
                       const SolverConfig& config);

/// gamma = (prod_j a_j) * gibbs, materialized densely.
TransportPlan materialize_plan(const GibbsKernel& kernel, const ScalingState& state);

std::vector<double> marginal_of(const GibbsKernel& kernel, const ScalingState& state, int axis);
Eigen::MatrixXd pair_marginal(const GibbsKernel& kernel, const ScalingState& state, int axis_a,
                              int axis_b);

MarginalResidual residuals(const TransportPlan& plan, const DiscreteDensity& marginal);
MarginalResidual residuals(const GibbsKernel& kernel, const ScalingState& state,
                           const DiscreteDensity& marginal);

struct EntropicCost {
  double transport_cost;
  double entropy;
  double objective;  // cost + epsilon * entropy
  bool mass_on_infinite_cost = false;
};

/// <c, gamma> with 0 * inf = 0 and entropy with 0 log 0 = 0.
EntropicCost entropic_cost(const TransportPlan& plan, const GibbsKernel& kernel);

/// <c, gamma> from the scaling state without materializing the plan.
double transport_cost(const GibbsKernel& kernel, const ScalingState& state);

}  // namespace mmot
