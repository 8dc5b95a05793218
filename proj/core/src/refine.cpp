#include "mmot/refine.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmot/oracles.hpp"
#include "mmot/recovery.hpp"

namespace mmot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Grid1D refined_grid(const Grid1D& old, int m_new) {
  const bool symmetric = std::abs(old.lo() + old.hi()) <= 1e-15 * old.span();
  return symmetric ? Grid1D::centered_uniform(old.hi(), m_new)
                   : Grid1D::uniform_cells(old.lo(), old.hi(), m_new);
}

// interpolation weights of x between grid points (clamped at the ends)
void interp_coeff(const Grid1D& g, double x, int& i0, int& i1, double& t) {
  const std::vector<double>& p = g.points();
  if (x <= p.front()) {
    i0 = i1 = 0;
    t = 0.0;
    return;
  }
  if (x >= p.back()) {
    i0 = i1 = g.size() - 1;
    t = 0.0;
    return;
  }
  auto it = std::upper_bound(p.begin(), p.end(), x);
  i1 = static_cast<int>(it - p.begin());
  i0 = i1 - 1;
  t = (x - p[static_cast<std::size_t>(i0)]) /
      (p[static_cast<std::size_t>(i1)] - p[static_cast<std::size_t>(i0)]);
}

ThresholdResult threshold_impl(int n, const std::function<void(int, std::vector<double>&)>& row_of,
                               double xi) {
  // row maxima and column maxima in one pass
  std::vector<double> row_max(static_cast<std::size_t>(n), 0.0);
  std::vector<double> col_max(static_cast<std::size_t>(n), 0.0);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    row_of(i, row);
    for (int j = 0; j < n; ++j) {
      row_max[static_cast<std::size_t>(i)] = std::max(row_max[static_cast<std::size_t>(i)], row[static_cast<std::size_t>(j)]);
      col_max[static_cast<std::size_t>(j)] = std::max(col_max[static_cast<std::size_t>(j)], row[static_cast<std::size_t>(j)]);
    }
  }
  const double m = std::min(*std::min_element(row_max.begin(), row_max.end()),
                            *std::min_element(col_max.begin(), col_max.end()));
  if (!(m > 0.0)) throw InvalidParameterError("cannot threshold an all-zero plan row or column");

  ThresholdResult out;
  out.m = m;
  out.mask.rows = out.mask.cols = n;
  out.mask.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  const double cut = xi * m;
  for (int i = 0; i < n; ++i) {
    row_of(i, row);
    for (int j = 0; j < n; ++j) {
      if (row[static_cast<std::size_t>(j)] >= cut) out.mask.col_idx.push_back(j);
    }
    out.mask.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<long>(out.mask.col_idx.size());
  }
  return out;
}

}  // namespace

void RefinementConfig::validate() const {
  if (!(xi > 0.0 && xi < 1.0)) throw InvalidParameterError("xi must lie in (0, 1)");
  if (levels < 1) throw InvalidParameterError("levels must be at least 1");
  if (target_active_cells && *target_active_cells < 4) {
    throw InvalidParameterError("target_active_cells is too small");
  }
}

double SparsePlan::mass() const { return std::accumulate(val.begin(), val.end(), 0.0); }

void SparsePlan::renormalize(double target) {
  const double s = mass();
  if (!(s > 0.0)) throw InvalidParameterError("cannot renormalize an empty sparse plan");
  const double f = target / s;
  for (double& v : val) v *= f;
}

double SparsePlan::find(int row, int col) const {
  const long lo = support.row_ptr[static_cast<std::size_t>(row)];
  const long hi = support.row_ptr[static_cast<std::size_t>(row) + 1];
  auto begin = support.col_idx.begin() + lo;
  auto end = support.col_idx.begin() + hi;
  auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return val[static_cast<std::size_t>(it - support.col_idx.begin())];
}

ThresholdResult threshold_support(const Eigen::MatrixXd& plan, double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw InvalidParameterError("xi must lie in (0, 1)");
  if (plan.rows() != plan.cols()) throw InvalidParameterError("plan must be square");
  const int n = static_cast<int>(plan.rows());
  return threshold_impl(
      n,
      [&](int i, std::vector<double>& row) {
        for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = plan(i, j);
      },
      xi);
}

ThresholdResult threshold_support(const SparsePlan& plan, double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw InvalidParameterError("xi must lie in (0, 1)");
  const int n = plan.grid.size();
  return threshold_impl(
      n,
      [&](int i, std::vector<double>& row) {
        std::fill(row.begin(), row.end(), 0.0);
        for (long p = plan.support.row_ptr[static_cast<std::size_t>(i)];
             p < plan.support.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
          row[static_cast<std::size_t>(plan.support.col_idx[static_cast<std::size_t>(p)])] =
              plan.val[static_cast<std::size_t>(p)];
        }
      },
      xi);
}

ThresholdResult3D threshold_support_3d(const TransportPlan& plan, double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw InvalidParameterError("xi must lie in (0, 1)");
  if (plan.order() != 3) throw InvalidParameterError("expected a three-marginal plan");
  const int m = plan.shape()[0];
  const std::vector<double>& v = plan.values();
  double m_threshold = kInf;
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> fiber_max(static_cast<std::size_t>(m), 0.0);
    const std::size_t stride = plan.stride(axis);
    for (std::size_t pos = 0; pos < v.size(); ++pos) {
      const std::size_t idx = (pos / stride) % static_cast<std::size_t>(m);
      fiber_max[idx] = std::max(fiber_max[idx], v[pos]);
    }
    m_threshold = std::min(m_threshold, *std::min_element(fiber_max.begin(), fiber_max.end()));
  }
  if (!(m_threshold > 0.0)) throw InvalidParameterError("cannot threshold an all-zero plan fiber");

  ThresholdResult3D out;
  out.m = m_threshold;
  out.mask.assign(v.size(), 0);
  out.count = 0;
  const double cut = xi * m_threshold;
  for (std::size_t pos = 0; pos < v.size(); ++pos) {
    if (v[pos] >= cut) {
      out.mask[pos] = 1;
      ++out.count;
    }
  }
  return out;
}

namespace {

RefineStepResult refine_step_impl(const Grid1D& grid,
                                  const std::function<double(int, int)>& value_at,
                                  const ThresholdResult& threshold,
                                  const RefinementConfig& config, long budget_cells) {
  config.validate();
  const int n = grid.size();
  const long cells = static_cast<long>(n) * n;
  const long active = threshold.mask.count();
  if (active <= 0) throw InvalidParameterError("empty support mask");

  // M_new = M / r with r = |T| / M, in total-cell units; the budget caps the
  // predicted child count |T| * M_new / M.
  double cells_new = static_cast<double>(cells) / (static_cast<double>(active) / cells);
  const long budget = config.target_active_cells.value_or(budget_cells);
  if (budget > 0) {
    cells_new = std::min(cells_new, static_cast<double>(budget) * cells / active);
  }
  int m_new = static_cast<int>(std::llround(std::sqrt(std::max(cells_new, 4.0))));
  m_new -= m_new % 2;

  RefineStepResult out{grid, SparsePlan{grid, {}, {}}, 0, false};
  if (m_new <= n) {
    out.saturated = true;
    return out;
  }

  Grid1D fine = refined_grid(grid, m_new);

  // contiguous child column range of each old cell
  std::vector<int> child_lo(static_cast<std::size_t>(n) + 1, 0);
  {
    int cursor = 0;
    for (int j = 0; j <= n; ++j) {
      const double edge = grid.edge(j);
      while (cursor < m_new && fine.point(cursor) < edge) ++cursor;
      child_lo[static_cast<std::size_t>(j)] = cursor;
    }
    child_lo[static_cast<std::size_t>(n)] = m_new;
  }

  SparsePlan plan{fine, {}, {}};
  plan.support.rows = plan.support.cols = m_new;
  plan.support.row_ptr.assign(static_cast<std::size_t>(m_new) + 1, 0);
  const double cut = config.xi * threshold.m;

  long children = 0;
  for (int a = 0; a < m_new; ++a) {
    const double x = fine.point(a);
    const int parent_row = grid.locate(x);
    int i0, i1;
    double tx;
    interp_coeff(grid, x, i0, i1, tx);
    for (long p = threshold.mask.row_ptr[static_cast<std::size_t>(parent_row)];
         p < threshold.mask.row_ptr[static_cast<std::size_t>(parent_row) + 1]; ++p) {
      const int j = threshold.mask.col_idx[static_cast<std::size_t>(p)];
      for (int b = child_lo[static_cast<std::size_t>(j)]; b < child_lo[static_cast<std::size_t>(j) + 1];
           ++b) {
        ++children;
        const double y = fine.point(b);
        int j0, j1;
        double ty;
        interp_coeff(grid, y, j0, j1, ty);
        const double v = (1.0 - tx) * ((1.0 - ty) * value_at(i0, j0) + ty * value_at(i0, j1)) +
                         tx * ((1.0 - ty) * value_at(i1, j0) + ty * value_at(i1, j1));
        if (v >= cut) {
          plan.support.col_idx.push_back(b);
          plan.val.push_back(v);
        }
      }
    }
    plan.support.row_ptr[static_cast<std::size_t>(a) + 1] =
        static_cast<long>(plan.support.col_idx.size());
  }
  if (plan.val.empty()) throw InvalidParameterError("refinement filtered out every cell");
  plan.renormalize(1.0);
  out.fine_grid = std::move(fine);
  out.plan = std::move(plan);
  out.children = children;
  return out;
}

}  // namespace

RefineStepResult plan_refine_step(const Eigen::MatrixXd& plan, const Grid1D& grid,
                                  const ThresholdResult& threshold,
                                  const RefinementConfig& config, long budget_cells) {
  if (plan.rows() != grid.size() || plan.cols() != grid.size()) {
    throw InvalidParameterError("plan shape does not match grid");
  }
  return refine_step_impl(
      grid, [&](int i, int j) { return plan(i, j); }, threshold, config, budget_cells);
}

RefineStepResult plan_refine_step(const SparsePlan& plan, const ThresholdResult& threshold,
                                  const RefinementConfig& config, long budget_cells) {
  return refine_step_impl(
      plan.grid, [&](int i, int j) { return plan.find(i, j); }, threshold, config, budget_cells);
}

SparseSolveResult sparse_ipfp_solve(const GibbsKernel& kernel_spec_source, const Grid1D& grid,
                                    const SupportMask2D& support,
                                    const DiscreteDensity& marginal, const SolverConfig& config,
                                    const std::vector<double>* warm_log_a,
                                    const std::vector<double>* warm_log_b,
                                    const Grid1D* warm_grid) {
  config.validate();
  const int n = grid.size();
  if (marginal.size() != n) throw InvalidParameterError("marginal does not match grid");
  if (support.rows != n || support.cols != n) {
    throw InvalidParameterError("support does not match grid");
  }
  const double eps = kernel_spec_source.epsilon();

  // kernel restricted to active cells, with a transposed index for column sweeps
  const std::size_t nnz = static_cast<std::size_t>(support.count());
  std::vector<double> kval(nnz);
  for (int i = 0; i < n; ++i) {
    for (long p = support.row_ptr[static_cast<std::size_t>(i)];
         p < support.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
      const int j = support.col_idx[static_cast<std::size_t>(p)];
      const double c = kernel_spec_source.pair_cost(grid.point(i), grid.point(j));
      double v = std::isinf(c) ? 0.0 : std::exp(-c / eps);
      if (v < DBL_MIN) v = 0.0;
      kval[static_cast<std::size_t>(p)] = v;
    }
  }
  std::vector<long> col_ptr(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> row_idx(nnz);
  std::vector<long> pos_of(nnz);
  {
    for (std::size_t p = 0; p < nnz; ++p) {
      ++col_ptr[static_cast<std::size_t>(support.col_idx[p]) + 1];
    }
    for (int j = 0; j < n; ++j) col_ptr[static_cast<std::size_t>(j) + 1] += col_ptr[static_cast<std::size_t>(j)];
    std::vector<long> cursor(col_ptr.begin(), col_ptr.end() - 1);
    for (int i = 0; i < n; ++i) {
      for (long p = support.row_ptr[static_cast<std::size_t>(i)];
           p < support.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
        const int j = support.col_idx[static_cast<std::size_t>(p)];
        const long q = cursor[static_cast<std::size_t>(j)]++;
        row_idx[static_cast<std::size_t>(q)] = i;
        pos_of[static_cast<std::size_t>(q)] = p;
      }
    }
  }

  // restrict the marginal to covered rows/columns and renormalize
  std::vector<std::uint8_t> row_live(static_cast<std::size_t>(n), 0), col_live(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (support.row_ptr[static_cast<std::size_t>(i) + 1] > support.row_ptr[static_cast<std::size_t>(i)]) {
      row_live[static_cast<std::size_t>(i)] = 1;
    }
  }
  for (std::size_t p = 0; p < nnz; ++p) col_live[static_cast<std::size_t>(support.col_idx[p])] = 1;

  auto restricted = [&](const std::vector<std::uint8_t>& live) {
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      if (live[static_cast<std::size_t>(i)]) {
        w[static_cast<std::size_t>(i)] = marginal.weights[static_cast<std::size_t>(i)];
        s += w[static_cast<std::size_t>(i)];
      }
    }
    if (!(s > 0.0)) throw InfeasibilityError("support mask misses all marginal mass");
    for (double& x : w) x *= marginal.total_mass / s;
    return w;
  };
  const std::vector<double> rho_row = restricted(row_live);
  const std::vector<double> rho_col = restricted(col_live);

  // warm start from interpolated log scalings of the previous level
  std::vector<double> a(static_cast<std::size_t>(n), 1.0), b(static_cast<std::size_t>(n), 1.0);
  auto warm = [&](std::vector<double>& s, const std::vector<double>* w) {
    if (w == nullptr || warm_grid == nullptr) return;
    for (int i = 0; i < n; ++i) {
      int i0, i1;
      double t;
      interp_coeff(*warm_grid, grid.point(i), i0, i1, t);
      const double g = (1.0 - t) * (*w)[static_cast<std::size_t>(i0)] + t * (*w)[static_cast<std::size_t>(i1)];
      s[static_cast<std::size_t>(i)] = std::isfinite(g) ? std::exp(g) : 0.0;
    }
  };
  warm(a, warm_log_a);
  warm(b, warm_log_b);
  for (int i = 0; i < n; ++i) {
    if (!row_live[static_cast<std::size_t>(i)] || !(rho_row[static_cast<std::size_t>(i)] > 0.0)) a[static_cast<std::size_t>(i)] = 0.0;
    if (!col_live[static_cast<std::size_t>(i)] || !(rho_col[static_cast<std::size_t>(i)] > 0.0)) b[static_cast<std::size_t>(i)] = 0.0;
  }

  const double tol = config.resolved_tolerance(marginal);
  bool converged = false;
  int sweeps = 0;
  double linf = kInf, l1 = kInf;
  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    linf = 0.0;
    l1 = 0.0;
    // row scalings
    for (int i = 0; i < n; ++i) {
      if (!(rho_row[static_cast<std::size_t>(i)] > 0.0)) continue;
      double s = 0.0;
      for (long p = support.row_ptr[static_cast<std::size_t>(i)];
           p < support.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
        s += kval[static_cast<std::size_t>(p)] * b[static_cast<std::size_t>(support.col_idx[static_cast<std::size_t>(p)])];
      }
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw InfeasibilityError("sparse row " + std::to_string(i) + " infeasible", i);
      }
      const double d = std::abs(a[static_cast<std::size_t>(i)] * s - rho_row[static_cast<std::size_t>(i)]);
      linf = std::max(linf, d);
      l1 += d;
      a[static_cast<std::size_t>(i)] = rho_row[static_cast<std::size_t>(i)] / s;
    }
    // column scalings
    double linf_c = 0.0, l1_c = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!(rho_col[static_cast<std::size_t>(j)] > 0.0)) continue;
      double s = 0.0;
      for (long q = col_ptr[static_cast<std::size_t>(j)]; q < col_ptr[static_cast<std::size_t>(j) + 1]; ++q) {
        s += kval[static_cast<std::size_t>(pos_of[static_cast<std::size_t>(q)])] *
             a[static_cast<std::size_t>(row_idx[static_cast<std::size_t>(q)])];
      }
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw InfeasibilityError("sparse column " + std::to_string(j) + " infeasible", j);
      }
      const double d = std::abs(b[static_cast<std::size_t>(j)] * s - rho_col[static_cast<std::size_t>(j)]);
      linf_c = std::max(linf_c, d);
      l1_c += d;
      b[static_cast<std::size_t>(j)] = rho_col[static_cast<std::size_t>(j)] / s;
    }
    linf = std::max(linf, linf_c);
    l1 = std::max(l1, l1_c);
    sweeps = sweep;
    if (linf < tol) {
      converged = true;
      break;
    }
  }

  SparsePlan plan{grid, support, std::move(kval)};
  for (int i = 0; i < n; ++i) {
    for (long p = support.row_ptr[static_cast<std::size_t>(i)];
         p < support.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
      plan.val[static_cast<std::size_t>(p)] *=
          a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(support.col_idx[static_cast<std::size_t>(p)])];
    }
  }
  std::vector<double> log_a(static_cast<std::size_t>(n), -kInf);
  std::vector<double> log_b(static_cast<std::size_t>(n), -kInf);
  for (int i = 0; i < n; ++i) {
    if (a[static_cast<std::size_t>(i)] > 0.0) log_a[static_cast<std::size_t>(i)] = std::log(a[static_cast<std::size_t>(i)]);
    if (b[static_cast<std::size_t>(i)] > 0.0) log_b[static_cast<std::size_t>(i)] = std::log(b[static_cast<std::size_t>(i)]);
  }
  return SparseSolveResult{std::move(plan),
                           std::move(log_a),
                           std::move(log_b),
                           DiscreteDensity(grid, rho_row, marginal.total_mass),
                           converged,
                           sweeps,
                           linf,
                           l1};
}

RefineResult refine_solve(const std::function<DiscreteDensity(int)>& density_factory,
                          const CoulombCostSpec& spec, int coarse_m,
                          const SolverConfig& solver_config, const RefinementConfig& refinement) {
  refinement.validate();
  if (spec.num_marginals != 2) {
    throw InvalidParameterError("refinement pipeline supports 2 marginals");
  }

  DiscreteDensity rho = density_factory(coarse_m);
  GibbsKernel kernel = GibbsKernel::build(spec, rho.grid, solver_config.epsilon,
                                          solver_config.threads);
  SolveResult coarse = ipfp_solve(kernel, rho, solver_config);

  RefineResult out{rho.grid, SparsePlan{rho.grid, {}, {}}, {}, {}, rho, {}, {}, {}, false, ""};
  const long budget = refinement.target_active_cells.value_or(static_cast<long>(coarse_m) *
                                                              coarse_m);

  TransportPlan dense = materialize_plan(kernel, coarse.state);
  Eigen::MatrixXd plan0 = dense.matrix();
  out.levels.push_back({0, coarse_m, static_cast<long>(coarse_m) * coarse_m, kNaN, refinement.xi,
                        coarse.sweeps, coarse.residual.max_linf(),
                        transport_cost(kernel, coarse.state)});
  // coarse scalings in log form for the first warm start
  auto to_log = [](const Eigen::ArrayXd& v) {
    std::vector<double> g(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      g[static_cast<std::size_t>(i)] = v[i] > 0.0 ? std::log(v[i]) : -kInf;
    }
    return g;
  };
  if (coarse.state.log_mode) {
    out.log_a = to_log(coarse.state.logvec[0].exp());
    out.log_b = to_log(coarse.state.logvec[1].exp());
  } else {
    out.log_a = to_log(coarse.state.vec[0]);
    out.log_b = to_log(coarse.state.vec[1]);
  }
  if (!coarse.converged) {
    out.stopped_early = true;
    out.stop_reason = "coarse solve did not converge";
  }

  bool have_sparse = false;
  for (int level = 1; level < refinement.levels && !out.stopped_early; ++level) {
    ThresholdResult thr =
        have_sparse ? threshold_support(out.plan, refinement.xi) : threshold_support(plan0, refinement.xi);
    out.levels.back().m = thr.m;

    RefineStepResult step =
        have_sparse ? plan_refine_step(out.plan, thr, refinement, budget)
                    : plan_refine_step(plan0, out.grid, thr, refinement, budget);
    if (step.saturated) {
      out.stopped_early = true;
      out.stop_reason = "refinement would exceed the active-cell budget";
      break;
    }

    DiscreteDensity rho_fine = density_factory(step.fine_grid.size());
    SparseSolveResult solved =
        sparse_ipfp_solve(kernel, step.fine_grid, step.plan.support, rho_fine, solver_config,
                          &out.log_a, &out.log_b, &out.grid);
    if (!solved.converged) {
      out.stopped_early = true;
      out.stop_reason = "level " + std::to_string(level) + " did not converge";
      break;
    }

    out.grid = step.fine_grid;
    out.plan = std::move(solved.plan);
    out.log_a = std::move(solved.log_a);
    out.log_b = std::move(solved.log_b);
    out.marginal = std::move(solved.row_marginal);
    have_sparse = true;
    double obj = 0.0;
    for (int i = 0; i < out.grid.size(); ++i) {
      for (long p = out.plan.support.row_ptr[static_cast<std::size_t>(i)];
           p < out.plan.support.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
        const int j = out.plan.support.col_idx[static_cast<std::size_t>(p)];
        const double c = kernel.pair_cost(out.grid.point(i), out.grid.point(j));
        if (!std::isinf(c)) obj += c * out.plan.val[static_cast<std::size_t>(p)];
      }
    }
    out.levels.push_back({level, out.grid.size(), static_cast<long>(out.plan.val.size()), kNaN,
                          refinement.xi, solved.sweeps, solved.residual_linf, obj});
  }

  // potential at the finest level
  const double eps = solver_config.epsilon;
  const int n = out.grid.size();
  out.potential.assign(static_cast<std::size_t>(n), 0.0);
  out.potential_valid.assign(static_cast<std::size_t>(n), 0);
  if (!have_sparse) {
    Potential pot = potential_from_scalings(coarse.state, kernel, rho);
    out.potential = pot.values;
    for (int i = 0; i < n; ++i) {
      out.potential_valid[static_cast<std::size_t>(i)] =
          rho.weights[static_cast<std::size_t>(i)] > 0.0;
    }
    return out;
  }
  std::vector<double> masked_w(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const bool ok = std::isfinite(out.log_a[static_cast<std::size_t>(i)]) &&
                    std::isfinite(out.log_b[static_cast<std::size_t>(i)]) &&
                    out.marginal.weights[static_cast<std::size_t>(i)] > 0.0;
    if (ok) {
      out.potential[static_cast<std::size_t>(i)] =
          eps * 0.5 * (out.log_a[static_cast<std::size_t>(i)] + out.log_b[static_cast<std::size_t>(i)]);
      out.potential_valid[static_cast<std::size_t>(i)] = 1;
      masked_w[static_cast<std::size_t>(i)] = out.marginal.weights[static_cast<std::size_t>(i)];
    }
  }
  double mean = 0.0, wsum = 0.0;
  for (int i = 0; i < n; ++i) {
    mean += out.potential[static_cast<std::size_t>(i)] * masked_w[static_cast<std::size_t>(i)];
    wsum += masked_w[static_cast<std::size_t>(i)];
  }
  mean /= wsum;
  for (int i = 0; i < n; ++i) {
    if (out.potential_valid[static_cast<std::size_t>(i)]) {
      out.potential[static_cast<std::size_t>(i)] -= mean;
    }
  }
  return out;
}

}  // namespace mmot
