#include "mmot/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "mmot/parallel.hpp"

namespace mmot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kDenseEntryCap = 50'000'000;

struct LinearBreakdown {
  int axis;
};

double safe_log(double x) { return x > 0.0 ? std::log(x) : -kInf; }

Eigen::ArrayXd masked_array(const DiscreteDensity& rho, double value, bool log_mode) {
  Eigen::ArrayXd a(rho.size());
  for (int i = 0; i < rho.size(); ++i) {
    const bool alive = rho.weights[static_cast<std::size_t>(i)] > 0.0;
    a[i] = alive ? value : (log_mode ? -kInf : 0.0);
  }
  return a;
}

// ---------------------------------------------------------------------------
// linear-domain contractions: s_axis such that marginal_axis = a_axis * s_axis

Eigen::ArrayXd contract_linear_pair(const GibbsKernel& kernel,
                                    const std::vector<Eigen::ArrayXd>& a, int axis) {
  const Eigen::MatrixXd& k = kernel.pair_factor();
  const Eigen::VectorXd other = a[static_cast<std::size_t>(1 - axis)].matrix();
  // k is symmetric; the same product serves both axes
  return (k * other).array();
}

// For three separable marginals the partial contraction reduces to one
// matrix-matrix product: the innermost sum over the third axis first.
Eigen::ArrayXd contract_linear_triple(const GibbsKernel& kernel,
                                      const std::vector<Eigen::ArrayXd>& a, int axis) {
  const Eigen::MatrixXd& f01 = kernel.pair_factor(0, 1);
  const Eigen::MatrixXd& f02 = kernel.pair_factor(0, 2);
  const Eigen::MatrixXd& f12 = kernel.pair_factor(1, 2);
  if (axis == 0) {
    Eigen::MatrixXd g = f02 * a[2].matrix().asDiagonal() * f12.transpose();
    return (f01.cwiseProduct(g) * a[1].matrix()).array();
  }
  if (axis == 1) {
    Eigen::MatrixXd g = f02 * a[2].matrix().asDiagonal() * f12.transpose();
    return (f01.cwiseProduct(g).transpose() * a[0].matrix()).array();
  }
  Eigen::MatrixXd h = f01 * a[1].matrix().asDiagonal() * f12;
  return (f02.cwiseProduct(h).transpose() * a[0].matrix()).array();
}

Eigen::ArrayXd contract_linear_tensor(const GibbsKernel& kernel,
                                      const std::vector<Eigen::ArrayXd>& a, int axis) {
  const std::size_t m = static_cast<std::size_t>(kernel.grid_size());
  const double* e = kernel.gibbs_tensor().data();
  Eigen::ArrayXd s = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(m));
  if (axis == 0) {
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double* row = e + (i * m + j) * m;
        double inner = 0.0;
        for (std::size_t k = 0; k < m; ++k) inner += row[k] * a[2][static_cast<Eigen::Index>(k)];
        acc += a[1][static_cast<Eigen::Index>(j)] * inner;
      }
      s[static_cast<Eigen::Index>(i)] = acc;
    }
  } else if (axis == 1) {
    for (std::size_t i = 0; i < m; ++i) {
      const double ai = a[0][static_cast<Eigen::Index>(i)];
      if (ai == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        const double* row = e + (i * m + j) * m;
        double inner = 0.0;
        for (std::size_t k = 0; k < m; ++k) inner += row[k] * a[2][static_cast<Eigen::Index>(k)];
        s[static_cast<Eigen::Index>(j)] += ai * inner;
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      const double ai = a[0][static_cast<Eigen::Index>(i)];
      if (ai == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        const double w = ai * a[1][static_cast<Eigen::Index>(j)];
        if (w == 0.0) continue;
        const double* row = e + (i * m + j) * m;
        for (std::size_t k = 0; k < m; ++k) s[static_cast<Eigen::Index>(k)] += w * row[k];
      }
    }
  }
  return s;
}

Eigen::ArrayXd contract_linear(const GibbsKernel& kernel, const std::vector<Eigen::ArrayXd>& a,
                               int axis) {
  const int n = kernel.marginal_count();
  if (!kernel.separable()) return contract_linear_tensor(kernel, a, axis);
  if (n == 2) return contract_linear_pair(kernel, a, axis);
  if (n == 3) return contract_linear_triple(kernel, a, axis);
  throw InvalidParameterError("IPFP contractions support 2 or 3 marginals");
}

// ---------------------------------------------------------------------------
// log-domain contractions (log-sum-exp with per-fiber max subtraction)

Eigen::ArrayXd contract_log_pair(const Eigen::MatrixXd& lk, const Eigen::ArrayXd& g_other) {
  const Eigen::Index m = lk.rows();
  Eigen::ArrayXd s(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double mx = -kInf;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double t = lk(i, j) + g_other[j];
      if (t > mx) mx = t;
    }
    if (mx == -kInf) {
      s[i] = -kInf;
      continue;
    }
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double t = lk(i, j) + g_other[j];
      if (t != -kInf) acc += std::exp(t - mx);
    }
    s[i] = mx + std::log(acc);
  }
  return s;
}

Eigen::ArrayXd contract_log_triple(const GibbsKernel& kernel, const Eigen::MatrixXd& lk,
                                   const std::vector<Eigen::ArrayXd>& g, int axis, int threads) {
  const Eigen::Index m = lk.rows();
  Eigen::ArrayXd s(m);
  const Eigen::ArrayXd& gb = g[static_cast<std::size_t>(axis == 0 ? 1 : 0)];
  const Eigen::ArrayXd& gc = g[static_cast<std::size_t>(axis == 2 ? 1 : 2)];
  // term(out, b, c) with the three pair factors identical
  auto term = [&](Eigen::Index out, Eigen::Index b, Eigen::Index c) {
    if (axis == 0) return lk(out, b) + lk(out, c) + lk(b, c) + gb[b] + gc[c];
    if (axis == 1) return lk(b, out) + lk(b, c) + lk(out, c) + gb[b] + gc[c];
    return lk(b, c) + lk(b, out) + lk(c, out) + gb[b] + gc[c];
  };
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t io) {
    const Eigen::Index i = static_cast<Eigen::Index>(io);
    double mx = -kInf;
    for (Eigen::Index b = 0; b < m; ++b) {
      for (Eigen::Index c = 0; c < m; ++c) {
        const double t = term(i, b, c);
        if (t > mx) mx = t;
      }
    }
    if (mx == -kInf) {
      s[i] = -kInf;
      return;
    }
    double acc = 0.0;
    for (Eigen::Index b = 0; b < m; ++b) {
      for (Eigen::Index c = 0; c < m; ++c) {
        const double t = term(i, b, c);
        if (t != -kInf) acc += std::exp(t - mx);
      }
    }
    s[i] = mx + std::log(acc);
  });
  return s;
}

Eigen::ArrayXd contract_log_tensor(const GibbsKernel& kernel, const std::vector<Eigen::ArrayXd>& g,
                                   int axis, int threads) {
  const Eigen::Index m = kernel.grid_size();
  const ThreeBodyRadialCost& c = kernel.three_body_cost();
  const double eps = kernel.epsilon();
  Eigen::ArrayXd s(m);
  const Eigen::ArrayXd& gb = g[static_cast<std::size_t>(axis == 0 ? 1 : 0)];
  const Eigen::ArrayXd& gc = g[static_cast<std::size_t>(axis == 2 ? 1 : 2)];
  auto term = [&](Eigen::Index out, Eigen::Index b, Eigen::Index c3) {
    int i, j, k;
    if (axis == 0) {
      i = static_cast<int>(out), j = static_cast<int>(b), k = static_cast<int>(c3);
    } else if (axis == 1) {
      i = static_cast<int>(b), j = static_cast<int>(out), k = static_cast<int>(c3);
    } else {
      i = static_cast<int>(b), j = static_cast<int>(c3), k = static_cast<int>(out);
    }
    const double cost = c.at(i, j, k);
    if (std::isinf(cost)) return -kInf;
    return -cost / eps + gb[b] + gc[c3];
  };
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t io) {
    const Eigen::Index i = static_cast<Eigen::Index>(io);
    double mx = -kInf;
    for (Eigen::Index b = 0; b < m; ++b) {
      for (Eigen::Index c3 = 0; c3 < m; ++c3) {
        const double t = term(i, b, c3);
        if (t > mx) mx = t;
      }
    }
    if (mx == -kInf) {
      s[i] = -kInf;
      return;
    }
    double acc = 0.0;
    for (Eigen::Index b = 0; b < m; ++b) {
      for (Eigen::Index c3 = 0; c3 < m; ++c3) {
        const double t = term(i, b, c3);
        if (t != -kInf) acc += std::exp(t - mx);
      }
    }
    s[i] = mx + std::log(acc);
  });
  return s;
}

Eigen::ArrayXd contract_log(const GibbsKernel& kernel, const std::vector<Eigen::ArrayXd>& g,
                            int axis, int threads, const Eigen::MatrixXd* lk_cached) {
  const int n = kernel.marginal_count();
  if (!kernel.separable()) return contract_log_tensor(kernel, g, axis, threads);
  Eigen::MatrixXd lk_local;
  const Eigen::MatrixXd* lk = lk_cached;
  if (lk == nullptr) {
    lk_local = kernel.log_pair_factor();
    lk = &lk_local;
  }
  if (n == 2) return contract_log_pair(*lk, g[static_cast<std::size_t>(1 - axis)]);
  if (n == 3) return contract_log_triple(kernel, *lk, g, axis, threads);
  throw InvalidParameterError("IPFP contractions support 2 or 3 marginals");
}

// One full cycle over axes 0..N-1; returns max pre-update (linf, l1) residual.
std::pair<double, double> sweep_impl(const GibbsKernel& kernel, const DiscreteDensity& rho,
                                     ScalingState& state, int threads,
                                     const Eigen::MatrixXd* lk_cached) {
  const int n = kernel.marginal_count();
  const int m = kernel.grid_size();
  double worst_linf = 0.0, worst_l1 = 0.0;
  for (int axis = 0; axis < n; ++axis) {
    if (!state.log_mode) {
      Eigen::ArrayXd s = contract_linear(kernel, state.vec, axis);
      Eigen::ArrayXd& a = state.vec[static_cast<std::size_t>(axis)];
      double linf = 0.0, l1 = 0.0;
      for (int i = 0; i < m; ++i) {
        const double w = rho.weights[static_cast<std::size_t>(i)];
        const double marg = a[i] * s[i];
        const double d = std::abs(marg - w);
        if (!std::isfinite(marg)) throw LinearBreakdown{axis};
        linf = std::max(linf, d);
        l1 += d;
        if (w > 0.0) {
          if (!(s[i] > 0.0) || !std::isfinite(s[i])) throw LinearBreakdown{axis};
          a[i] = w / s[i];
          if (!std::isfinite(a[i])) throw LinearBreakdown{axis};
        } else {
          a[i] = 0.0;
        }
      }
      worst_linf = std::max(worst_linf, linf);
      worst_l1 = std::max(worst_l1, l1);
    } else {
      Eigen::ArrayXd s = contract_log(kernel, state.logvec, axis, threads, lk_cached);
      Eigen::ArrayXd& g = state.logvec[static_cast<std::size_t>(axis)];
      double linf = 0.0, l1 = 0.0;
      for (int i = 0; i < m; ++i) {
        const double w = rho.weights[static_cast<std::size_t>(i)];
        const double marg = (g[i] == -kInf || s[i] == -kInf) ? 0.0 : std::exp(g[i] + s[i]);
        const double d = std::abs(marg - w);
        linf = std::max(linf, d);
        l1 += d;
        if (w > 0.0) {
          if (s[i] == -kInf) {
            throw InfeasibilityError("marginal " + std::to_string(axis) +
                                         " infeasible at grid index " + std::to_string(i),
                                     i);
          }
          g[i] = std::log(w) - s[i];
        } else {
          g[i] = -kInf;
        }
      }
      worst_linf = std::max(worst_linf, linf);
      worst_l1 = std::max(worst_l1, l1);
    }
  }
  ++state.sweep_count;
  return {worst_linf, worst_l1};
}

}  // namespace

void SolverConfig::validate() const {
  if (max_sweeps < 1) throw InvalidParameterError("max_sweeps must be at least 1");
  if (tolerance < 0.0 && tolerance != 0.0) {
    throw InvalidParameterError("tolerance must be positive (or 0 for automatic)");
  }
}

double SolverConfig::resolved_tolerance(const DiscreteDensity& marginal) const {
  if (tolerance > 0.0) return tolerance;
  return 1e-10 * marginal.max_weight();
}

double MarginalResidual::max_linf() const {
  return linf.empty() ? 0.0 : *std::max_element(linf.begin(), linf.end());
}

double MarginalResidual::max_l1() const {
  return l1.empty() ? 0.0 : *std::max_element(l1.begin(), l1.end());
}

TransportPlan::TransportPlan(std::vector<int> shape, double epsilon_used)
    : shape_(std::move(shape)), epsilon_(epsilon_used) {
  if (shape_.size() < 2) throw InvalidParameterError("plans need at least 2 axes");
  std::size_t total = 1;
  for (int s : shape_) {
    if (s < 1) throw InvalidParameterError("plan axes must be nonempty");
    total *= static_cast<std::size_t>(s);
    if (total > kDenseEntryCap) {
      throw InvalidParameterError("dense plan exceeds the entry budget");
    }
  }
  values_.assign(total, 0.0);
}

TransportPlan TransportPlan::dense_gibbs(const GibbsKernel& kernel) {
  const int n = kernel.marginal_count();
  const int m = kernel.grid_size();
  TransportPlan plan(std::vector<int>(static_cast<std::size_t>(n), m), kernel.epsilon());
  if (!kernel.separable()) {
    plan.values_ = kernel.gibbs_tensor();
    return plan;
  }
  if (n == 2) {
    const Eigen::MatrixXd& k = kernel.pair_factor();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        plan.values_[static_cast<std::size_t>(i) * m + j] = k(i, j);
      }
    }
    return plan;
  }
  // generic product of pairwise factors via the tuple cost
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const double eps = kernel.epsilon();
  for (std::size_t pos = 0; pos < plan.values_.size(); ++pos) {
    const double c = kernel.tuple_cost(idx.data());
    plan.values_[pos] = std::isinf(c) ? 0.0 : std::exp(-c / eps);
    for (int axis = n - 1; axis >= 0; --axis) {
      if (++idx[static_cast<std::size_t>(axis)] < m) break;
      idx[static_cast<std::size_t>(axis)] = 0;
    }
  }
  return plan;
}

std::size_t TransportPlan::stride(int axis) const {
  std::size_t s = 1;
  for (int a = order() - 1; a > axis; --a) s *= static_cast<std::size_t>(shape_[static_cast<std::size_t>(a)]);
  return s;
}

double TransportPlan::total_mass() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

void TransportPlan::renormalize(double mass) {
  const double s = total_mass();
  if (!(s > 0.0)) throw InvalidParameterError("cannot renormalize an empty plan");
  const double f = mass / s;
  for (double& v : values_) v *= f;
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
TransportPlan::matrix() const {
  if (order() != 2) throw InvalidParameterError("matrix() requires a 2-marginal plan");
  return {values_.data(), shape_[0], shape_[1]};
}

TransportPlan kl_project(const TransportPlan& plan, const DiscreteDensity& marginal, int axis) {
  TransportPlan out = plan;
  const int n = out.order();
  if (axis < 0 || axis >= n) throw InvalidParameterError("projection axis out of range");
  const int m = out.shape()[static_cast<std::size_t>(axis)];
  if (marginal.size() != m) throw InvalidParameterError("marginal size does not match plan axis");

  const std::size_t stride = out.stride(axis);
  std::vector<double> sums(static_cast<std::size_t>(m), 0.0);
  const std::vector<double>& v = out.values();
  for (std::size_t pos = 0; pos < v.size(); ++pos) {
    sums[(pos / stride) % static_cast<std::size_t>(m)] += v[pos];
  }
  std::vector<double> factor(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double w = marginal.weights[static_cast<std::size_t>(j)];
    const double s = sums[static_cast<std::size_t>(j)];
    if (w > 0.0 && !(s > 0.0)) {
      throw InfeasibilityError("axis " + std::to_string(axis) + " infeasible at grid index " +
                                   std::to_string(j) + ": zero partial sum against positive mass",
                               j);
    }
    factor[static_cast<std::size_t>(j)] = w > 0.0 ? w / s : 0.0;
  }
  std::vector<double>& w = out.values();
  for (std::size_t pos = 0; pos < w.size(); ++pos) {
    w[pos] *= factor[(pos / stride) % static_cast<std::size_t>(m)];
  }
  return out;
}

BregmanResult bregman_solve_from(TransportPlan initial, const GibbsKernel& kernel,
                                 const DiscreteDensity& marginal, const SolverConfig& config) {
  config.validate();
  const int n = initial.order();
  const int m = initial.shape()[0];
  if (marginal.size() != m) throw InvalidParameterError("marginal size does not match plan");
  const double tol = config.resolved_tolerance(marginal);

  BregmanResult res{std::move(initial), {}, false, 0, {}};
  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    double worst_linf = 0.0, worst_l1 = 0.0;
    for (int axis = 0; axis < n; ++axis) {
      // pre-projection violation of this axis = |partial sums - rho|
      const std::size_t stride = res.plan.stride(axis);
      std::vector<double> sums(static_cast<std::size_t>(m), 0.0);
      for (std::size_t pos = 0; pos < res.plan.values().size(); ++pos) {
        sums[(pos / stride) % static_cast<std::size_t>(m)] += res.plan.values()[pos];
      }
      double linf = 0.0, l1 = 0.0;
      std::vector<double> factor(static_cast<std::size_t>(m));
      for (int j = 0; j < m; ++j) {
        const double wj = marginal.weights[static_cast<std::size_t>(j)];
        const double d = std::abs(sums[static_cast<std::size_t>(j)] - wj);
        linf = std::max(linf, d);
        l1 += d;
        if (wj > 0.0 && !(sums[static_cast<std::size_t>(j)] > 0.0)) {
          throw InfeasibilityError("axis " + std::to_string(axis) +
                                       " infeasible at grid index " + std::to_string(j),
                                   j);
        }
        factor[static_cast<std::size_t>(j)] = wj > 0.0 ? wj / sums[static_cast<std::size_t>(j)] : 0.0;
      }
      for (std::size_t pos = 0; pos < res.plan.values().size(); ++pos) {
        res.plan.values()[pos] *= factor[(pos / stride) % static_cast<std::size_t>(m)];
      }
      worst_linf = std::max(worst_linf, linf);
      worst_l1 = std::max(worst_l1, l1);
    }
    res.sweeps = sweep;
    if (config.record_history) {
      res.history.push_back({sweep, worst_linf, worst_l1, entropic_cost(res.plan, kernel).transport_cost});
    }
    if (worst_linf < tol) {
      MarginalResidual exact = residuals(res.plan, marginal);
      if (exact.max_linf() < tol) {
        res.residual = exact;
        res.converged = true;
        return res;
      }
    }
  }
  res.residual = residuals(res.plan, marginal);
  return res;
}

BregmanResult bregman_solve(const GibbsKernel& kernel, const DiscreteDensity& marginal,
                            const SolverConfig& config) {
  check_kernel_feasible(kernel, marginal);
  return bregman_solve_from(TransportPlan::dense_gibbs(kernel), kernel, marginal, config);
}

ScalingState initial_state(const GibbsKernel& kernel, const DiscreteDensity& marginal,
                           bool log_mode) {
  const int n = kernel.marginal_count();
  ScalingState state;
  state.log_mode = log_mode;
  auto& store = log_mode ? state.logvec : state.vec;
  store.reserve(static_cast<std::size_t>(n));
  // b_0 = 1 and a_0 = rho, generalized to ones on the later axes
  for (int axis = 0; axis < n; ++axis) {
    Eigen::ArrayXd v = masked_array(marginal, log_mode ? 0.0 : 1.0, log_mode);
    if (axis == 0) {
      for (int i = 0; i < marginal.size(); ++i) {
        const double w = marginal.weights[static_cast<std::size_t>(i)];
        v[i] = log_mode ? safe_log(w) : w;
      }
    }
    store.push_back(std::move(v));
  }
  return state;
}

std::pair<double, double> ipfp_sweep(const GibbsKernel& kernel, const DiscreteDensity& marginal,
                                     ScalingState& state, int threads) {
  try {
    return sweep_impl(kernel, marginal, state, threads, nullptr);
  } catch (const LinearBreakdown& b) {
    throw InfeasibilityError("linear-domain breakdown on axis " + std::to_string(b.axis) +
                             "; use log-domain mode");
  }
}

SolveResult ipfp_solve(const GibbsKernel& kernel, const DiscreteDensity& marginal,
                       const SolverConfig& config) {
  config.validate();
  if (marginal.size() != kernel.grid_size()) {
    throw InvalidParameterError("marginal grid does not match kernel grid");
  }
  if (kernel.marginal_count() > 3) {
    throw InvalidParameterError("IPFP supports 2 or 3 marginals");
  }
  check_kernel_feasible(kernel, marginal);
  const double tol = config.resolved_tolerance(marginal);

  SolveResult res;
  bool log_mode = config.mode == SolverConfig::Mode::Log;
  for (int attempt = 0; attempt < 2; ++attempt) {
    res.state = initial_state(kernel, marginal, log_mode);
    res.history.clear();
    res.converged = false;
    std::optional<Eigen::MatrixXd> lk;
    if (log_mode && kernel.separable()) lk = kernel.log_pair_factor();
    try {
      double prev_linf = kInf;
      bool warned_monotone = false;
      for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
        auto [linf, l1] =
            sweep_impl(kernel, marginal, res.state, config.threads, lk ? &*lk : nullptr);
        res.sweeps = sweep;
        if (config.record_history) {
          res.history.push_back({sweep, linf, l1, transport_cost(kernel, res.state)});
        }
        if (linf > prev_linf * (1.0 + 1e-9) && sweep > 2 && !warned_monotone) {
          res.warnings.push_back("marginal residual increased at sweep " + std::to_string(sweep));
          warned_monotone = true;
        }
        prev_linf = linf;
        if (linf < tol) {
          MarginalResidual exact = residuals(kernel, res.state, marginal);
          if (exact.max_linf() < tol) {
            res.residual = exact;
            res.converged = true;
            return res;
          }
        }
      }
      res.residual = residuals(kernel, res.state, marginal);
      return res;
    } catch (const LinearBreakdown& b) {
      if (log_mode) {
        throw InfeasibilityError("log-domain breakdown on axis " + std::to_string(b.axis));
      }
      res.warnings.push_back("linear-domain overflow/underflow on axis " + std::to_string(b.axis) +
                             "; restarting in log domain");
      log_mode = true;
    }
  }
  throw InfeasibilityError("solver failed in both evaluation modes");
}

TransportPlan materialize_plan(const GibbsKernel& kernel, const ScalingState& state) {
  const int n = kernel.marginal_count();
  const int m = kernel.grid_size();
  TransportPlan plan(std::vector<int>(static_cast<std::size_t>(n), m), kernel.epsilon());
  auto scaling = [&](int axis, int i) {
    return state.log_mode ? state.logvec[static_cast<std::size_t>(axis)][i]
                          : state.vec[static_cast<std::size_t>(axis)][i];
  };
  if (n == 2) {
    const Eigen::MatrixXd& k = kernel.separable() ? kernel.pair_factor() : kernel.pair_factor();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        double v;
        if (state.log_mode) {
          const double c = kernel.pair_cost(kernel.grid().point(i), kernel.grid().point(j));
          const double t = scaling(0, i) + scaling(1, j) + (std::isinf(c) ? -kInf : -c / kernel.epsilon());
          v = t == -kInf ? 0.0 : std::exp(t);
        } else {
          v = scaling(0, i) * k(i, j) * scaling(1, j);
        }
        plan.values()[static_cast<std::size_t>(i) * m + j] = v;
      }
    }
    return plan;
  }
  if (n != 3) throw InvalidParameterError("materialize_plan supports 2 or 3 marginals");
  const std::size_t mm = static_cast<std::size_t>(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int k3 = 0; k3 < m; ++k3) {
        double v;
        if (state.log_mode) {
          int idx[3] = {i, j, k3};
          const double c = kernel.tuple_cost(idx);
          const double t = scaling(0, i) + scaling(1, j) + scaling(2, k3) +
                           (std::isinf(c) ? -kInf : -c / kernel.epsilon());
          v = t == -kInf ? 0.0 : std::exp(t);
        } else if (!kernel.separable()) {
          v = state.vec[0][i] * state.vec[1][j] * state.vec[2][k3] *
              kernel.gibbs_tensor()[(static_cast<std::size_t>(i) * mm + j) * mm + k3];
        } else {
          const Eigen::MatrixXd& f = kernel.pair_factor();
          v = state.vec[0][i] * state.vec[1][j] * state.vec[2][k3] * f(i, j) * f(i, k3) * f(j, k3);
        }
        plan.values()[(static_cast<std::size_t>(i) * mm + j) * mm + k3] = v;
      }
    }
  }
  return plan;
}

std::vector<double> marginal_of(const GibbsKernel& kernel, const ScalingState& state, int axis) {
  const int m = kernel.grid_size();
  std::vector<double> marg(static_cast<std::size_t>(m));
  if (!state.log_mode) {
    Eigen::ArrayXd s = contract_linear(kernel, state.vec, axis);
    for (int i = 0; i < m; ++i) marg[static_cast<std::size_t>(i)] = state.vec[static_cast<std::size_t>(axis)][i] * s[i];
  } else {
    Eigen::ArrayXd s = contract_log(kernel, state.logvec, axis, 0, nullptr);
    for (int i = 0; i < m; ++i) {
      const double t = state.logvec[static_cast<std::size_t>(axis)][i] + s[i];
      marg[static_cast<std::size_t>(i)] = std::isfinite(t) ? std::exp(t) : 0.0;
    }
  }
  return marg;
}

Eigen::MatrixXd pair_marginal(const GibbsKernel& kernel, const ScalingState& state, int axis_a,
                              int axis_b) {
  const int n = kernel.marginal_count();
  const int m = kernel.grid_size();
  if (axis_a > axis_b) std::swap(axis_a, axis_b);
  if (axis_a < 0 || axis_b >= n || axis_a == axis_b) {
    throw InvalidParameterError("invalid axis pair");
  }
  if (n == 2) {
    TransportPlan plan = materialize_plan(kernel, state);
    return plan.matrix();
  }
  if (n != 3) throw InvalidParameterError("pair_marginal supports 2 or 3 marginals");

  if (state.log_mode || !kernel.separable()) {
    // streaming sum over the remaining axis
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
    const int other = 3 - axis_a - axis_b;
    const std::size_t mm = static_cast<std::size_t>(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        for (int k3 = 0; k3 < m; ++k3) {
          int idx[3] = {i, j, k3};
          double v;
          if (state.log_mode) {
            const double c = kernel.tuple_cost(idx);
            const double t = state.logvec[0][i] + state.logvec[1][j] + state.logvec[2][k3] +
                             (std::isinf(c) ? -kInf : -c / kernel.epsilon());
            v = t == -kInf ? 0.0 : std::exp(t);
          } else {
            v = state.vec[0][i] * state.vec[1][j] * state.vec[2][k3] *
                kernel.gibbs_tensor()[(static_cast<std::size_t>(i) * mm + j) * mm + k3];
          }
          out(idx[axis_a], idx[axis_b]) += v;
        }
      }
    }
    return out;
  }

  const Eigen::MatrixXd& f01 = kernel.pair_factor(0, 1);
  const Eigen::MatrixXd& f02 = kernel.pair_factor(0, 2);
  const Eigen::MatrixXd& f12 = kernel.pair_factor(1, 2);
  const Eigen::VectorXd a0 = state.vec[0].matrix(), a1 = state.vec[1].matrix(),
                        a2 = state.vec[2].matrix();
  Eigen::MatrixXd out;
  if (axis_a == 0 && axis_b == 1) {
    out = f01.cwiseProduct(f02 * a2.asDiagonal() * f12.transpose());
    out = a0.asDiagonal() * out * a1.asDiagonal();
  } else if (axis_a == 0 && axis_b == 2) {
    out = f02.cwiseProduct(f01 * a1.asDiagonal() * f12);
    out = a0.asDiagonal() * out * a2.asDiagonal();
  } else {
    out = f12.cwiseProduct(f01.transpose() * a0.asDiagonal() * f02);
    out = a1.asDiagonal() * out * a2.asDiagonal();
  }
  return out;
}

MarginalResidual residuals(const TransportPlan& plan, const DiscreteDensity& marginal) {
  const int n = plan.order();
  const int m = plan.shape()[0];
  if (marginal.size() != m) throw InvalidParameterError("marginal size does not match plan");
  MarginalResidual res;
  for (int axis = 0; axis < n; ++axis) {
    const std::size_t stride = plan.stride(axis);
    std::vector<double> sums(static_cast<std::size_t>(m), 0.0);
    for (std::size_t pos = 0; pos < plan.values().size(); ++pos) {
      sums[(pos / stride) % static_cast<std::size_t>(m)] += plan.values()[pos];
    }
    double linf = 0.0, l1 = 0.0;
    for (int j = 0; j < m; ++j) {
      const double d = std::abs(sums[static_cast<std::size_t>(j)] -
                                marginal.weights[static_cast<std::size_t>(j)]);
      linf = std::max(linf, d);
      l1 += d;
    }
    res.linf.push_back(linf);
    res.l1.push_back(l1);
  }
  return res;
}

MarginalResidual residuals(const GibbsKernel& kernel, const ScalingState& state,
                           const DiscreteDensity& marginal) {
  MarginalResidual res;
  for (int axis = 0; axis < kernel.marginal_count(); ++axis) {
    std::vector<double> marg = marginal_of(kernel, state, axis);
    double linf = 0.0, l1 = 0.0;
    for (int j = 0; j < kernel.grid_size(); ++j) {
      const double d = std::abs(marg[static_cast<std::size_t>(j)] -
                                marginal.weights[static_cast<std::size_t>(j)]);
      linf = std::max(linf, d);
      l1 += d;
    }
    res.linf.push_back(linf);
    res.l1.push_back(l1);
  }
  return res;
}

EntropicCost entropic_cost(const TransportPlan& plan, const GibbsKernel& kernel) {
  const int n = plan.order();
  const int m = plan.shape()[0];
  EntropicCost out{0.0, 0.0, 0.0, false};
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (std::size_t pos = 0; pos < plan.values().size(); ++pos) {
    const double v = plan.values()[pos];
    if (v > 0.0) {
      const double c = kernel.tuple_cost(idx.data());
      if (std::isinf(c)) {
        out.mass_on_infinite_cost = true;
        out.transport_cost = kInf;
      } else if (!out.mass_on_infinite_cost) {
        out.transport_cost += c * v;
      }
      out.entropy += v * std::log(v);
    }
    for (int axis = n - 1; axis >= 0; --axis) {
      if (++idx[static_cast<std::size_t>(axis)] < m) break;
      idx[static_cast<std::size_t>(axis)] = 0;
    }
  }
  out.objective = out.transport_cost + kernel.epsilon() * out.entropy;
  return out;
}

double transport_cost(const GibbsKernel& kernel, const ScalingState& state) {
  const int n = kernel.marginal_count();
  const int m = kernel.grid_size();
  const Grid1D& grid = kernel.grid();

  if (n == 2) {
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      double row = 0.0;
      for (int j = 0; j < m; ++j) {
        double v;
        if (state.log_mode) {
          const double c = kernel.pair_cost(grid.point(i), grid.point(j));
          if (std::isinf(c)) continue;
          const double t = state.logvec[0][i] + state.logvec[1][j] - c / kernel.epsilon();
          v = t == -kInf ? 0.0 : std::exp(t);
          row += v * c;
        } else {
          const double k = kernel.pair_factor()(i, j);
          if (k == 0.0) continue;
          v = state.vec[0][i] * k * state.vec[1][j];
          if (v != 0.0) row += v * kernel.pair_cost(grid.point(i), grid.point(j));
        }
      }
      total += row;
    }
    return total;
  }
  if (n != 3) throw InvalidParameterError("transport_cost supports 2 or 3 marginals");

  if (kernel.separable() && !state.log_mode) {
    // c = c01 + c02 + c12, so <c, gamma> = sum of pairwise costs against the
    // three pair marginals
    Eigen::MatrixXd p = pair_marginal(kernel, state, 0, 1) + pair_marginal(kernel, state, 0, 2) +
                        pair_marginal(kernel, state, 1, 2);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const double c = kernel.pair_cost(grid.point(i), grid.point(j));
        if (std::isinf(c)) continue;
        total += c * p(i, j);
      }
    }
    return total;
  }

  // streaming over the full index set
  double total = 0.0;
  const std::size_t mm = static_cast<std::size_t>(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int k3 = 0; k3 < m; ++k3) {
        int idx[3] = {i, j, k3};
        const double c = kernel.tuple_cost(idx);
        if (std::isinf(c)) continue;
        double v;
        if (state.log_mode) {
          const double t = state.logvec[0][i] + state.logvec[1][j] + state.logvec[2][k3] -
                           c / kernel.epsilon();
          v = t == -kInf ? 0.0 : std::exp(t);
        } else {
          const double e = kernel.separable()
                               ? kernel.pair_factor()(i, j) * kernel.pair_factor()(i, k3) *
                                     kernel.pair_factor()(j, k3)
                               : kernel.gibbs_tensor()[(static_cast<std::size_t>(i) * mm + j) * mm + k3];
          v = state.vec[0][i] * state.vec[1][j] * state.vec[2][k3] * e;
        }
        total += v * c;
      }
    }
  }
  return total;
}

}  // namespace mmot
