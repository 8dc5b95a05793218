#include "mmot/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace mmot {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ComotionMap::ComotionMap(std::function<double(double)> eval, double lo, double hi,
                         std::string label)
    : eval_(std::move(eval)), lo_(lo), hi_(hi), label_(std::move(label)) {
  if (!(hi_ > lo_)) throw InvalidParameterError("empty co-motion domain");
}

double ComotionMap::operator()(double x) const {
  const double slack = 1e-9 * (hi_ - lo_);
  if (x < lo_ - slack || x > hi_ + slack) {
    throw DomainError("co-motion argument outside [" + std::to_string(lo_) + ", " +
                      std::to_string(hi_) + "]");
  }
  return eval_(std::clamp(x, lo_, hi_));
}

ComotionMap comotion_uniform_N2(double a) {
  if (!(a > 0.0)) throw InvalidParameterError("uniform co-motion needs a > 0");
  return ComotionMap(
      [a](double x) { return x < 0.0 ? x + a / 2.0 : x - a / 2.0; }, -a / 2.0, a / 2.0,
      "uniform-N2");
}

ComotionMap comotion_triangular(double a) {
  if (!(a > 0.0)) throw InvalidParameterError("triangular co-motion needs a > 0");
  return ComotionMap(
      [a](double x) {
        if (x == 0.0) return -a;
        const double s = x > 0.0 ? 1.0 : -1.0;
        const double ax = std::abs(x);
        return s * (std::sqrt(2.0 * a * ax - x * x) - a);
      },
      -a, a, "triangular-N2");
}

std::vector<ComotionMap> comotion_multi_1d(const DiscreteDensity& density, int num_marginals) {
  if (num_marginals < 2) throw InvalidParameterError("need at least 2 marginals");
  auto q = std::make_shared<Quantile>(density);
  const double mass = density.total_mass;
  const double lo = q->support_lo();
  const double hi = q->support_hi();
  const double shift = mass / num_marginals;
  const double last = mass - shift;

  auto step = [q, mass, shift, last](double x) {
    const double w = q->cdf(x);
    return w <= last ? q->inverse(w + shift) : q->inverse(w - last);
  };

  std::vector<ComotionMap> maps;
  for (int i = 2; i <= num_marginals; ++i) {
    const int folds = i - 1;
    maps.emplace_back(
        [step, folds](double x) {
          double y = x;
          for (int f = 0; f < folds; ++f) y = step(y);
          return y;
        },
        lo, hi, "quantile-N" + std::to_string(num_marginals) + "-f" + std::to_string(i));
  }
  return maps;
}

PiecewisePotential::PiecewisePotential(std::vector<double> breakpoints,
                                       std::vector<double> slopes, double value_at_lo)
    : breaks_(std::move(breakpoints)), slopes_(std::move(slopes)) {
  if (breaks_.size() < 2 || slopes_.size() + 1 != breaks_.size()) {
    throw InvalidParameterError("piecewise potential needs k+1 breakpoints for k slopes");
  }
  values_.resize(breaks_.size());
  values_[0] = value_at_lo;
  for (std::size_t p = 0; p + 1 < breaks_.size(); ++p) {
    values_[p + 1] = values_[p] + slopes_[p] * (breaks_[p + 1] - breaks_[p]);
  }
}

double PiecewisePotential::operator()(double x) const {
  const double slack = 1e-9 * (breaks_.back() - breaks_.front());
  if (x < breaks_.front() - slack || x > breaks_.back() + slack) {
    throw DomainError("potential argument outside its domain");
  }
  x = std::clamp(x, breaks_.front(), breaks_.back());
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  std::size_t p = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - breaks_.begin())) - 1;
  p = std::min(p, slopes_.size() - 1);
  return values_[p] + slopes_[p] * (x - breaks_[p]);
}

double PiecewisePotential::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

PiecewisePotential potential_uniform_N3() {
  return PiecewisePotential({0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}, {45.0 / 4.0, 0.0, -45.0 / 4.0},
                            0.0);
}

double potential_uniform_N2(double a, double x) {
  if (std::abs(x) > a / 2.0 * (1.0 + 1e-9)) throw DomainError("outside the uniform support");
  return 2.0 / a - 4.0 * std::abs(x) / (a * a);
}

std::vector<double> potential_from_maps(const std::vector<ComotionMap>& maps,
                                        const DiscreteDensity& density) {
  const Grid1D& g = density.grid;
  const int m = g.size();
  const double tiny = 1e-12 * g.span();
  std::vector<double> slope(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double x = g.point(i);
    double d = 0.0;
    for (const ComotionMap& f : maps) {
      const double gap = x - f(x);
      if (std::abs(gap) < tiny) {
        if (density.weights[static_cast<std::size_t>(i)] > 0.0) {
          throw SingularIntegrandError("co-motion map touches the identity at x = " +
                                       std::to_string(x));
        }
        continue;
      }
      d -= gap / (std::abs(gap) * gap * gap);  // (x-f)/|x-f|^3 in 1D
    }
    slope[static_cast<std::size_t>(i)] = d;
  }
  std::vector<double> u(static_cast<std::size_t>(m), 0.0);
  for (int i = 1; i < m; ++i) {
    u[static_cast<std::size_t>(i)] =
        u[static_cast<std::size_t>(i) - 1] +
        0.5 * (slope[static_cast<std::size_t>(i) - 1] + slope[static_cast<std::size_t>(i)]) *
            (g.point(i) - g.point(i - 1));
  }
  anchor_potential(u, density);
  return u;
}

void anchor_potential(std::vector<double>& values, const DiscreteDensity& density, double anchor) {
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) mean += values[i] * density.weights[i];
  mean /= density.total_mass;
  const double shift = mean - anchor;
  for (double& v : values) v -= shift;
}

double linf_after_shift(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw InvalidParameterError("size mismatch");
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return 0.5 * (hi - lo);
}

}  // namespace mmot
