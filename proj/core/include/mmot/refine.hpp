#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mmot/density.hpp"
#include "mmot/kernel.hpp"
#include "mmot/solver.hpp"

namespace mmot {

struct RefinementConfig {
  double xi = 0.9;   // threshold factor in (0,1)
  int levels = 1;    // total level count; 1 is a plain coarse solve
  std::optional<long> target_active_cells;  // default: level-0 total cell count

  void validate() const;
};

/// Active cells per row, CSR-style with sorted column indices.
struct SupportMask2D {
  int rows = 0;
  int cols = 0;
  std::vector<long> row_ptr;   // rows + 1
  std::vector<int> col_idx;
  long count() const { return static_cast<long>(col_idx.size()); }
};

/// Two-marginal plan restricted to a sparse support, values in CSR order.
struct SparsePlan {
  Grid1D grid;  // shared by both axes
  SupportMask2D support;
  std::vector<double> val;

  double mass() const;
  void renormalize(double mass = 1.0);
  double find(int row, int col) const;  // 0 when outside the support
};

/// m = min( min_j max_i plan_ij , min_i max_j plan_ij ); the mask keeps cells
/// with plan >= xi * m, which always covers every row and column maximum.
struct ThresholdResult {
  SupportMask2D mask;
  double m;
};
ThresholdResult threshold_support(const Eigen::MatrixXd& plan, double xi);
ThresholdResult threshold_support(const SparsePlan& plan, double xi);

/// Three-marginal analogue: fiber maxima per axis, m = min over axes.
struct ThresholdResult3D {
  std::vector<std::uint8_t> mask;  // row-major over the plan entries
  double m;
  long count;
};
ThresholdResult3D threshold_support_3d(const TransportPlan& plan, double xi);

struct RefineStepResult {
  Grid1D fine_grid;
  SparsePlan plan;   // bilinearly interpolated, filtered at xi*m, mass renormalized
  long children;     // stored entries before filtering
  bool saturated = false;  // the budget forbids any further refinement
};

/// Scales the per-axis resolution so the refined sparse plan holds about
/// `budget_cells` entries (the paper's constant-element intent): the raw rule
/// M_new = M_cells / (|T|/M_cells) is clamped whenever the predicted child
/// count would exceed the budget. budget_cells <= 0 disables the clamp.
RefineStepResult plan_refine_step(const Eigen::MatrixXd& plan, const Grid1D& grid,
                                  const ThresholdResult& threshold,
                                  const RefinementConfig& config, long budget_cells);
RefineStepResult plan_refine_step(const SparsePlan& plan, const ThresholdResult& threshold,
                                  const RefinementConfig& config, long budget_cells);

struct SparseSolveResult {
  SparsePlan plan;
  std::vector<double> log_a, log_b;
  DiscreteDensity row_marginal;  // restricted to covered rows, renormalized
  bool converged = false;
  int sweeps = 0;
  double residual_linf = 0.0;
  double residual_l1 = 0.0;
};

/// IPFP restricted to the support: filtered cells are structural zeros and
/// never enter the contraction sums. Marginals are restricted to rows and
/// columns that carry active cells and renormalized.
SparseSolveResult sparse_ipfp_solve(const GibbsKernel& kernel_spec_source, const Grid1D& grid,
                                    const SupportMask2D& support,
                                    const DiscreteDensity& marginal, const SolverConfig& config,
                                    const std::vector<double>* warm_log_a = nullptr,
                                    const std::vector<double>* warm_log_b = nullptr,
                                    const Grid1D* warm_grid = nullptr);

struct RefineLevelReport {
  int level;
  int grid_points_per_axis;
  long active_cells;
  double m;  // threshold level used to refine FROM this level; NaN on the last
  double xi;
  int sweeps;
  double residual;
  double objective;  // <c, gamma>
};

struct RefineResult {
  Grid1D grid;
  SparsePlan plan;
  std::vector<double> log_a, log_b;
  DiscreteDensity marginal;           // marginal enforced at the finest level
  std::vector<double> potential;      // eps*(log a + log b)/2, anchored
  std::vector<std::uint8_t> potential_valid;
  std::vector<RefineLevelReport> levels;
  bool stopped_early = false;
  std::string stop_reason;
};

/// Coarse-to-fine pipeline: solve, threshold, refine, re-solve, warm-started
/// from interpolated scalings. density_factory(m) discretizes the marginal on
/// m cells. Two marginals only.
RefineResult refine_solve(const std::function<DiscreteDensity(int)>& density_factory,
                          const CoulombCostSpec& spec, int coarse_m,
                          const SolverConfig& solver_config, const RefinementConfig& refinement);

}  // namespace mmot
