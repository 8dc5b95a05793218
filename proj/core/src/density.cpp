#include "mmot/density.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mmot {

namespace {

void check_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) {
      throw InvalidParameterError(std::string(what) + " must be strictly increasing");
    }
  }
}

std::vector<double> normalized(std::vector<double> w, double total_mass) {
  double s = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw InvalidParameterError("density has nonpositive or nonfinite total mass");
  }
  const double f = total_mass / s;
  for (double& x : w) x *= f;
  return w;
}

}  // namespace

Grid1D::Grid1D(std::vector<double> points, std::vector<double> edges)
    : points_(std::move(points)), edges_(std::move(edges)) {
  if (points_.size() < 2) throw InvalidParameterError("grid needs at least 2 points");
  if (edges_.size() != points_.size() + 1) {
    throw InvalidParameterError("grid edges must have size()+1 entries");
  }
  check_increasing(points_, "grid points");
  check_increasing(edges_, "grid edges");
}

Grid1D Grid1D::uniform_cells(double lo, double hi, int m) {
  if (!(hi > lo)) throw InvalidParameterError("degenerate interval");
  if (m < 2) throw InvalidParameterError("grid size must be at least 2");
  const double h = (hi - lo) / m;
  std::vector<double> pts(static_cast<std::size_t>(m));
  std::vector<double> edg(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k < m; ++k) {
    pts[static_cast<std::size_t>(k)] = lo + (k + 0.5) * h;
    edg[static_cast<std::size_t>(k)] = lo + k * h;
  }
  edg[static_cast<std::size_t>(m)] = hi;
  return Grid1D(std::move(pts), std::move(edg));
}

Grid1D Grid1D::centered_uniform(double halfwidth, int m) {
  if (!(halfwidth > 0.0)) throw InvalidParameterError("halfwidth must be positive");
  if (m < 2) throw InvalidParameterError("grid size must be at least 2");
  const double h = 2.0 * halfwidth / m;
  std::vector<double> pts(static_cast<std::size_t>(m));
  std::vector<double> edg(static_cast<std::size_t>(m) + 1);
  // Fill the upper half from the right edge, mirror the lower half so that
  // pts[k] == -pts[m-1-k] exactly.
  for (int k = m - 1; 2 * k >= m; --k) {
    const double p = halfwidth - (m - 1 - k + 0.5) * h;
    pts[static_cast<std::size_t>(k)] = p;
    pts[static_cast<std::size_t>(m - 1 - k)] = -p;
  }
  if (m % 2 == 1) pts[static_cast<std::size_t>(m / 2)] = 0.0;
  for (int k = m; 2 * k > m; --k) {
    const double e = halfwidth - (m - k) * h;
    edg[static_cast<std::size_t>(k)] = e;
    edg[static_cast<std::size_t>(m - k)] = -e;
  }
  if (m % 2 == 0) edg[static_cast<std::size_t>(m / 2)] = 0.0;
  return Grid1D(std::move(pts), std::move(edg));
}

Grid1D Grid1D::from_points(std::vector<double> points) {
  if (points.size() < 2) throw InvalidParameterError("grid needs at least 2 points");
  check_increasing(points, "grid points");
  const std::size_t m = points.size();
  std::vector<double> edg(m + 1);
  edg[0] = points[0] - 0.5 * (points[1] - points[0]);
  for (std::size_t k = 1; k < m; ++k) edg[k] = 0.5 * (points[k - 1] + points[k]);
  edg[m] = points[m - 1] + 0.5 * (points[m - 1] - points[m - 2]);
  return Grid1D(std::move(points), std::move(edg));
}

int Grid1D::locate(double x) const {
  if (x <= edges_.front()) return 0;
  if (x >= edges_.back()) return size() - 1;
  auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  int idx = static_cast<int>(it - edges_.begin()) - 1;
  return std::clamp(idx, 0, size() - 1);
}

bool Grid1D::same_points(const Grid1D& other, double tol) const {
  if (other.size() != size()) return false;
  for (int i = 0; i < size(); ++i) {
    if (std::abs(point(i) - other.point(i)) > tol) return false;
  }
  return true;
}

DiscreteDensity::DiscreteDensity(Grid1D g, std::vector<double> w, double mass)
    : grid(std::move(g)), weights(std::move(w)), total_mass(mass) {
  if (weights.size() != static_cast<std::size_t>(grid.size())) {
    throw InvalidParameterError("weights size does not match grid");
  }
  if (!(total_mass > 0.0)) throw InvalidParameterError("total_mass must be positive");
  for (double x : weights) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidParameterError("density weights must be nonnegative and finite");
    }
  }
}

double DiscreteDensity::sum() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double DiscreteDensity::max_weight() const {
  return *std::max_element(weights.begin(), weights.end());
}

Quantile::Quantile(DiscreteDensity density) : density_(std::move(density)) {
  cum_.resize(density_.weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cum_.size(); ++i) {
    acc += density_.weights[i];
    cum_[i] = acc;
  }
}

double Quantile::cdf(double x) const {
  const Grid1D& g = density_.grid;
  if (x <= g.lo()) return 0.0;
  if (x >= g.hi()) return cum_.back();
  const int k = g.locate(x);
  const double prev = k > 0 ? cum_[static_cast<std::size_t>(k) - 1] : 0.0;
  const double width = g.cell_width(k);
  return prev + density_.weights[static_cast<std::size_t>(k)] * (x - g.edge(k)) / width;
}

double Quantile::inverse(double w) const {
  const double total = density_.total_mass;
  if (!(w >= 0.0) || w > total * (1.0 + 1e-12)) {
    throw DomainError("quantile argument outside [0, total_mass]");
  }
  w = std::min(w, cum_.back());
  auto it = std::lower_bound(cum_.begin(), cum_.end(), w);
  if (it == cum_.end()) return density_.grid.hi();
  const std::size_t k = static_cast<std::size_t>(it - cum_.begin());
  const double prev = k > 0 ? cum_[k - 1] : 0.0;
  const double mass = cum_[k] - prev;
  const Grid1D& g = density_.grid;
  if (!(mass > 0.0)) return g.edge(static_cast<int>(k));
  const double frac = (w - prev) / mass;
  return g.edge(static_cast<int>(k)) + frac * g.cell_width(static_cast<int>(k));
}

DiscreteDensity make_uniform(double a, int m, double total_mass) {
  if (!(a > 0.0)) throw InvalidParameterError("uniform density needs a > 0");
  Grid1D grid = Grid1D::centered_uniform(a / 2.0, m);
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) w[static_cast<std::size_t>(i)] = a * grid.cell_width(i);
  return DiscreteDensity(std::move(grid), normalized(std::move(w), total_mass), total_mass);
}

DiscreteDensity make_uniform_interval(double lo, double hi, int m, double total_mass) {
  Grid1D grid = Grid1D::uniform_cells(lo, hi, m);
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) w[static_cast<std::size_t>(i)] = grid.cell_width(i);
  return DiscreteDensity(std::move(grid), normalized(std::move(w), total_mass), total_mass);
}

DiscreteDensity make_triangular(double a, int m, double total_mass) {
  if (!(a > 0.0)) throw InvalidParameterError("triangular density needs a > 0");
  Grid1D grid = Grid1D::centered_uniform(a, m);
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double x = std::abs(grid.point(i));
    w[static_cast<std::size_t>(i)] = (a - x) / (a * a) * grid.cell_width(i);
  }
  return DiscreteDensity(std::move(grid), normalized(std::move(w), total_mass), total_mass);
}

DiscreteDensity make_gaussian(double sigma, double lo, double hi, int m, double total_mass) {
  if (!(sigma > 0.0)) throw InvalidParameterError("gaussian density needs sigma > 0");
  if (!(hi > lo)) throw InvalidParameterError("degenerate interval");
  const bool symmetric = std::abs(lo + hi) <= 1e-15 * (hi - lo);
  Grid1D grid = symmetric ? Grid1D::centered_uniform(hi, m) : Grid1D::uniform_cells(lo, hi, m);
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double t = grid.point(i) / sigma;
    w[static_cast<std::size_t>(i)] = std::exp(-t * t) * grid.cell_width(i);
  }
  return DiscreteDensity(std::move(grid), normalized(std::move(w), total_mass), total_mass);
}

DiscreteDensity make_ball_rho(int m, double radius, double total_mass) {
  if (!(radius > 0.0)) throw InvalidParameterError("ball radius must be positive");
  return make_uniform_interval(0.0, radius, m, total_mass);
}

DiscreteDensity radialize(const DiscreteDensity& rho_radial, int dimension) {
  if (dimension != 2 && dimension != 3) {
    throw InvalidParameterError("radialize supports dimension 2 or 3");
  }
  const Grid1D& g = rho_radial.grid;
  if (g.point(0) < 0.0) throw InvalidParameterError("radial grid points must be nonnegative");
  const double c = dimension == 2 ? 2.0 * M_PI : 4.0 * M_PI;
  std::vector<double> w(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i) {
    const double r = g.point(i);
    w[static_cast<std::size_t>(i)] =
        c * std::pow(r, dimension - 1) * rho_radial.weights[static_cast<std::size_t>(i)];
  }
  return DiscreteDensity(g, normalized(std::move(w), rho_radial.total_mass),
                         rho_radial.total_mass);
}

DiscreteDensity rediscretize(const DiscreteDensity& density, int m) {
  const Grid1D& old = density.grid;
  const bool symmetric = std::abs(old.lo() + old.hi()) <= 1e-15 * old.span();
  Grid1D grid = symmetric ? Grid1D::centered_uniform(old.hi(), m)
                          : Grid1D::uniform_cells(old.lo(), old.hi(), m);
  std::vector<double> w(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double x = grid.point(i);
    // piecewise-linear interpolation of density values over old points
    double v;
    if (x <= old.point(0)) {
      v = density.value(0);
    } else if (x >= old.point(old.size() - 1)) {
      v = density.value(old.size() - 1);
    } else {
      auto it = std::upper_bound(old.points().begin(), old.points().end(), x);
      const int k = static_cast<int>(it - old.points().begin());
      const double x0 = old.point(k - 1), x1 = old.point(k);
      const double t = (x - x0) / (x1 - x0);
      v = (1.0 - t) * density.value(k - 1) + t * density.value(k);
    }
    w[static_cast<std::size_t>(i)] = v * grid.cell_width(i);
  }
  return DiscreteDensity(std::move(grid), normalized(std::move(w), density.total_mass),
                         density.total_mass);
}

namespace {

bool parse_two_doubles(const std::string& line, double& a, double& b) {
  std::string s = line;
  for (char& c : s) {
    if (c == ',' || c == ';' || c == '\t') c = ' ';
  }
  std::istringstream in(s);
  std::string extra;
  if (!(in >> a >> b)) return false;
  if (in >> extra) return false;
  return true;
}

}  // namespace

LoadedDensity load_density(const std::string& path, double total_mass) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open density file: " + path);
  std::vector<double> pos, val;
  std::string line;
  long row = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++row;
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
    if (trimmed.empty() || trimmed[0] == '#') continue;
    double x, w;
    if (!parse_two_doubles(trimmed, x, w)) {
      if (header_allowed) {
        header_allowed = false;  // one non-numeric header line is tolerated
        continue;
      }
      throw IoError("cannot parse density row", row);
    }
    header_allowed = false;
    if (!pos.empty() && !(x > pos.back())) {
      throw IoError("positions must be strictly increasing", row);
    }
    if (w < 0.0 || !std::isfinite(w)) throw IoError("negative or nonfinite weight", row);
    pos.push_back(x);
    val.push_back(w);
  }
  if (pos.size() < 2) throw IoError("density file needs at least 2 rows: " + path);
  Grid1D grid = Grid1D::from_points(std::move(pos));
  std::vector<double> w(val.size());
  for (int i = 0; i < grid.size(); ++i) {
    w[static_cast<std::size_t>(i)] = val[static_cast<std::size_t>(i)] * grid.cell_width(i);
  }
  const double original = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(original > 0.0)) throw IoError("density file has zero mass: " + path);
  return LoadedDensity{
      DiscreteDensity(std::move(grid), normalized(std::move(w), total_mass), total_mass),
      original};
}

void save_density(const std::string& path, const DiscreteDensity& density) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write density file: " + path);
  out << "position,weight\n";
  char buf[80];
  for (int i = 0; i < density.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", density.grid.point(i), density.value(i));
    out << buf;
  }
}

}  // namespace mmot
