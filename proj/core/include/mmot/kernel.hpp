#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "mmot/cost.hpp"
#include "mmot/density.hpp"

namespace mmot {

/// Reduced three-body cost c~(r_i, r_j, r_k) tabulated over sorted index
/// triples of a radial grid (the cost is symmetric in its arguments).
class ThreeBodyRadialCost {
 public:
  ThreeBodyRadialCost(Grid1D grid, int threads);

  double at(int i, int j, int k) const;
  const Grid1D& grid() const { return grid_; }

 private:
  Grid1D grid_;
  std::vector<double> table_;  // index (i <= j <= k)
};

/// The regularized cost kernel exp(-c/epsilon), stored as one M x M factor per
/// unordered marginal pair. All marginals share a grid and the Coulomb pair
/// cost, so the factors coincide and share storage. The radial-reduced
/// three-marginal cost is not pairwise separable; that mode carries the
/// tabulated c~ and a dense exp(-c~/eps) tensor instead.
class GibbsKernel {
 public:
  static GibbsKernel build(const CoulombCostSpec& spec, const Grid1D& grid, double epsilon,
                           int threads = 0);

  double epsilon() const { return epsilon_; }
  const CoulombCostSpec& spec() const { return spec_; }
  const Grid1D& grid() const { return grid_; }
  int marginal_count() const { return spec_.num_marginals; }
  int grid_size() const { return grid_.size(); }

  /// False only for the radial-reduced three-marginal kernel.
  bool separable() const { return tensor_.empty(); }

  /// Factor for unordered pair (a, b); identical for all pairs here.
  const Eigen::MatrixXd& pair_factor(int a, int b) const;
  const Eigen::MatrixXd& pair_factor() const { return *factor_; }

  /// Pairwise cost between coordinates of two marginals.
  double pair_cost(double x, double y) const;
  Eigen::MatrixXd pair_cost_matrix() const;
  /// log factor (-c/epsilon), computed on demand; entries -inf at infinite cost.
  Eigen::MatrixXd log_pair_factor() const;

  /// Cost of a full index tuple (size N).
  double tuple_cost(const int* idx) const;

  const ThreeBodyRadialCost& three_body_cost() const;
  /// exp(-c~/eps) as a dense M^3 row-major tensor (radial N=3 only).
  const std::vector<double>& gibbs_tensor() const { return tensor_; }

 private:
  GibbsKernel(CoulombCostSpec spec, Grid1D grid, double epsilon)
      : spec_(spec), grid_(std::move(grid)), epsilon_(epsilon) {}

  CoulombCostSpec spec_;
  Grid1D grid_;
  double epsilon_;
  std::shared_ptr<const Eigen::MatrixXd> factor_;
  std::shared_ptr<const ThreeBodyRadialCost> three_body_;
  std::vector<double> tensor_;
};

/// Structural feasibility: every grid point with positive mass must see at
/// least one positive kernel entry. Throws InfeasibilityError otherwise.
void check_kernel_feasible(const GibbsKernel& kernel, const DiscreteDensity& marginal);

}  // namespace mmot
