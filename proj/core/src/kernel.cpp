#include "mmot/kernel.hpp"

#include <cfloat>
#include <cmath>
#include <limits>

#include "mmot/parallel.hpp"

namespace mmot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Entries below the smallest positive normal number are flushed to zero.
double gibbs_entry(double cost, double epsilon) {
  if (std::isinf(cost)) return 0.0;
  const double v = std::exp(-cost / epsilon);
  return v < DBL_MIN ? 0.0 : v;
}

std::size_t triple_index(int i, int j, int k) {
  // requires i <= j <= k
  const std::size_t kk = static_cast<std::size_t>(k);
  const std::size_t jj = static_cast<std::size_t>(j);
  return kk * (kk + 1) * (kk + 2) / 6 + jj * (jj + 1) / 2 + static_cast<std::size_t>(i);
}

}  // namespace

ThreeBodyRadialCost::ThreeBodyRadialCost(Grid1D grid, int threads) : grid_(std::move(grid)) {
  const int m = grid_.size();
  const std::size_t mm = static_cast<std::size_t>(m);
  table_.resize(mm * (mm + 1) * (mm + 2) / 6);
  parallel_for(mm, threads, [&](std::size_t k) {
    const double rk = grid_.point(static_cast<int>(k));
    for (std::size_t j = 0; j <= k; ++j) {
      const double rj = grid_.point(static_cast<int>(j));
      for (std::size_t i = 0; i <= j; ++i) {
        table_[triple_index(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k))] =
            minimize_three_body_angles(grid_.point(static_cast<int>(i)), rj, rk).cost;
      }
    }
  });
}

double ThreeBodyRadialCost::at(int i, int j, int k) const {
  if (i > j) std::swap(i, j);
  if (j > k) std::swap(j, k);
  if (i > j) std::swap(i, j);
  return table_[triple_index(i, j, k)];
}

GibbsKernel GibbsKernel::build(const CoulombCostSpec& spec, const Grid1D& grid, double epsilon,
                               int threads) {
  spec.validate();
  if (!(epsilon > 0.0)) throw InvalidParameterError("epsilon must be positive");
  if (spec.mode == CostMode::FullSpace && spec.dimension != 1) {
    throw InvalidParameterError("full-space kernels are one-dimensional; use radial-reduced mode");
  }

  GibbsKernel kernel(spec, grid, epsilon);
  const int m = grid.size();

  if (spec.mode == CostMode::RadialReduced && spec.num_marginals == 3) {
    if (m > 420) {
      throw InvalidParameterError(
          "radial three-marginal kernels are limited to grids of at most 420 points");
    }
    auto costs = std::make_shared<ThreeBodyRadialCost>(grid, threads);
    const std::size_t mm = static_cast<std::size_t>(m);
    std::vector<double> tensor(mm * mm * mm);
    parallel_for(mm, threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < mm; ++j) {
        double* row = tensor.data() + (i * mm + j) * mm;
        for (std::size_t k = 0; k < mm; ++k) {
          row[k] = gibbs_entry(
              costs->at(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)), epsilon);
        }
      }
    });
    kernel.three_body_ = std::move(costs);
    kernel.tensor_ = std::move(tensor);
    return kernel;
  }

  if (spec.mode == CostMode::RadialReduced && spec.num_marginals > 3) {
    throw InvalidParameterError("radial-reduced kernels support 2 or 3 marginals");
  }

  auto factor = std::make_shared<Eigen::MatrixXd>(m, m);
  Eigen::MatrixXd& f = *factor;
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t i) {
    const double xi = grid.point(static_cast<int>(i));
    for (std::size_t j = i; j < static_cast<std::size_t>(m); ++j) {
      f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          gibbs_entry(kernel.pair_cost(xi, grid.point(static_cast<int>(j))), epsilon);
    }
  });
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < i; ++j) f(i, j) = f(j, i);
  }
  kernel.factor_ = std::move(factor);
  return kernel;
}

const Eigen::MatrixXd& GibbsKernel::pair_factor(int a, int b) const {
  if (a == b || a < 0 || b < 0 || a >= spec_.num_marginals || b >= spec_.num_marginals) {
    throw InvalidParameterError("invalid marginal pair");
  }
  if (!factor_) throw InvalidParameterError("kernel has no separable pair factors");
  return *factor_;
}

double GibbsKernel::pair_cost(double x, double y) const {
  return spec_.mode == CostMode::FullSpace ? coulomb_pair(x, y) : reduced_pair_cost(x, y);
}

Eigen::MatrixXd GibbsKernel::pair_cost_matrix() const {
  const int m = grid_.size();
  Eigen::MatrixXd c(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) c(i, j) = pair_cost(grid_.point(i), grid_.point(j));
  }
  return c;
}

Eigen::MatrixXd GibbsKernel::log_pair_factor() const {
  const int m = grid_.size();
  Eigen::MatrixXd lk(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double c = pair_cost(grid_.point(i), grid_.point(j));
      lk(i, j) = std::isinf(c) ? -kInf : -c / epsilon_;
    }
  }
  return lk;
}

double GibbsKernel::tuple_cost(const int* idx) const {
  const int n = spec_.num_marginals;
  if (!separable()) {
    return three_body_->at(idx[0], idx[1], idx[2]);
  }
  double total = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      total += pair_cost(grid_.point(idx[a]), grid_.point(idx[b]));
    }
  }
  return total;
}

const ThreeBodyRadialCost& GibbsKernel::three_body_cost() const {
  if (!three_body_) throw InvalidParameterError("kernel has no three-body cost table");
  return *three_body_;
}

void check_kernel_feasible(const GibbsKernel& kernel, const DiscreteDensity& marginal) {
  const int m = kernel.grid_size();
  if (marginal.size() != m) throw InvalidParameterError("marginal grid does not match kernel");
  for (int i = 0; i < m; ++i) {
    if (!(marginal.weights[static_cast<std::size_t>(i)] > 0.0)) continue;
    bool ok = false;
    if (kernel.separable()) {
      ok = kernel.pair_factor().row(i).maxCoeff() > 0.0;
    } else {
      const std::size_t mm = static_cast<std::size_t>(m);
      const double* slice = kernel.gibbs_tensor().data() + static_cast<std::size_t>(i) * mm * mm;
      for (std::size_t t = 0; t < mm * mm && !ok; ++t) ok = slice[t] > 0.0;
    }
    if (!ok) {
      throw InfeasibilityError(
          "marginal has positive mass at index " + std::to_string(i) +
              " but the kernel row is structurally zero",
          i);
    }
  }
}

}  // namespace mmot
