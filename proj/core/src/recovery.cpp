#include "mmot/recovery.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mmot/oracles.hpp"

namespace mmot {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_scaling(const ScalingState& state, int axis, int i) {
  if (state.log_mode) return state.logvec[static_cast<std::size_t>(axis)][i];
  const double a = state.vec[static_cast<std::size_t>(axis)][i];
  return a > 0.0 ? std::log(a) : -kInf;
}
}  // namespace

Potential potential_from_scalings(const ScalingState& state, const GibbsKernel& kernel,
                                  const DiscreteDensity& marginal, double anchor) {
  const int n = kernel.marginal_count();
  const int m = kernel.grid_size();
  Potential pot;
  pot.epsilon = kernel.epsilon();
  pot.anchor = anchor;
  pot.x = kernel.grid().points();
  pot.values.assign(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    if (!(marginal.weights[static_cast<std::size_t>(i)] > 0.0)) continue;
    double mean = 0.0;
    for (int axis = 0; axis < n; ++axis) {
      const double g = log_scaling(state, axis, i);
      if (g == -kInf) {
        throw InfeasibilityError(
            "zero scaling against positive marginal mass at grid index " + std::to_string(i), i);
      }
      mean += g;
    }
    pot.values[static_cast<std::size_t>(i)] = kernel.epsilon() * mean / n;
  }
  anchor_potential(pot.values, marginal, anchor);
  // zero-mass points carry no information; flatten them to the anchor
  for (int i = 0; i < m; ++i) {
    if (!(marginal.weights[static_cast<std::size_t>(i)] > 0.0)) {
      pot.values[static_cast<std::size_t>(i)] = 0.0;
    }
  }
  return pot;
}

DualityReport duality_report(const ScalingState& state, const GibbsKernel& kernel,
                             const DiscreteDensity& marginal, std::uint64_t seed, int samples) {
  const int n = kernel.marginal_count();
  const int m = kernel.grid_size();
  const double eps = kernel.epsilon();

  // unanchored symmetrized potential
  std::vector<double> u(static_cast<std::size_t>(m), 0.0);
  std::vector<bool> alive(static_cast<std::size_t>(m), false);
  for (int i = 0; i < m; ++i) {
    if (!(marginal.weights[static_cast<std::size_t>(i)] > 0.0)) continue;
    alive[static_cast<std::size_t>(i)] = true;
    double mean = 0.0;
    for (int axis = 0; axis < n; ++axis) mean += log_scaling(state, axis, i);
    u[static_cast<std::size_t>(i)] = eps * mean / n;
  }

  DualityReport rep{};
  rep.samples = samples;
  rep.primal_cost = transport_cost(kernel, state);
  double dual = 0.0;
  for (int i = 0; i < m; ++i) dual += u[static_cast<std::size_t>(i)] * marginal.weights[static_cast<std::size_t>(i)];
  rep.dual_value = n * dual;
  rep.kappa_gap = (rep.dual_value - rep.primal_cost) / eps;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, m - 1);
  double worst = -kInf;
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int s = 0; s < samples; ++s) {
    double sum_u = 0.0;
    bool ok = true;
    for (int axis = 0; axis < n; ++axis) {
      const int i = pick(rng);
      idx[static_cast<std::size_t>(axis)] = i;
      if (!alive[static_cast<std::size_t>(i)]) ok = false;
      sum_u += u[static_cast<std::size_t>(i)];
    }
    if (!ok) continue;
    const double c = kernel.tuple_cost(idx.data());
    if (std::isinf(c)) continue;
    worst = std::max(worst, (sum_u - c) / eps);
  }
  rep.kappa_feasibility = worst;
  return rep;
}

MapEstimate map_from_plan(const Eigen::MatrixXd& pair_plan, const Grid1D& source,
                          const Grid1D& target) {
  if (pair_plan.rows() != source.size() || pair_plan.cols() != target.size()) {
    throw InvalidParameterError("pair plan shape does not match grids");
  }
  const int m = source.size();
  MapEstimate est;
  est.x = source.points();
  est.barycentric.assign(static_cast<std::size_t>(m), 0.0);
  est.argmax.assign(static_cast<std::size_t>(m), 0.0);
  est.spread.assign(static_cast<std::size_t>(m), 0.0);
  est.valid.assign(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i) {
    const double mass = pair_plan.row(i).sum();
    if (!(mass > 0.0)) continue;
    est.valid[static_cast<std::size_t>(i)] = 1;
    double mean = 0.0;
    int mode = 0;
    double mode_val = -kInf;
    for (int j = 0; j < target.size(); ++j) {
      const double w = pair_plan(i, j);
      mean += w * target.point(j);
      if (w > mode_val) {
        mode_val = w;
        mode = j;
      }
    }
    mean /= mass;
    double var = 0.0;
    for (int j = 0; j < target.size(); ++j) {
      const double d = target.point(j) - mean;
      var += pair_plan(i, j) * d * d;
    }
    est.barycentric[static_cast<std::size_t>(i)] = mean;
    est.argmax[static_cast<std::size_t>(i)] = target.point(mode);
    est.spread[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, var / mass));
  }
  return est;
}

Eigen::MatrixXd project_pair(const TransportPlan& plan, int axis_a, int axis_b) {
  const int n = plan.order();
  if (axis_a > axis_b) std::swap(axis_a, axis_b);
  if (axis_a < 0 || axis_b >= n || axis_a == axis_b) {
    throw InvalidParameterError("invalid projection axes");
  }
  const std::vector<int>& shape = plan.shape();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(shape[static_cast<std::size_t>(axis_a)],
                                              shape[static_cast<std::size_t>(axis_b)]);
  const std::size_t sa = plan.stride(axis_a);
  const std::size_t sb = plan.stride(axis_b);
  const std::size_t ma = static_cast<std::size_t>(shape[static_cast<std::size_t>(axis_a)]);
  const std::size_t mb = static_cast<std::size_t>(shape[static_cast<std::size_t>(axis_b)]);
  const std::vector<double>& v = plan.values();
  for (std::size_t pos = 0; pos < v.size(); ++pos) {
    out(static_cast<Eigen::Index>((pos / sa) % ma), static_cast<Eigen::Index>((pos / sb) % mb)) +=
        v[pos];
  }
  return out;
}

double sce_energy(const GibbsKernel& kernel, const ScalingState& state) {
  return transport_cost(kernel, state);
}

double sce_energy(const TransportPlan& plan, const GibbsKernel& kernel) {
  return entropic_cost(plan, kernel).transport_cost;
}

}  // namespace mmot
