#pragma once

#include <string>
#include <vector>

#include "mmot/errors.hpp"

namespace mmot {

/// One-dimensional grid of cell midpoints with explicit cell edges.
/// Quadrature weight of a point is the width of its cell (midpoint rule).
class Grid1D {
 public:
  Grid1D(std::vector<double> points, std::vector<double> edges);

  /// m equal cells on [lo, hi], points at cell midpoints.
  static Grid1D uniform_cells(double lo, double hi, int m);

  /// m equal cells on [-halfwidth, halfwidth]. Points and edges are mirrored
  /// exactly: point(k) == -point(m-1-k) holds bitwise.
  static Grid1D centered_uniform(double halfwidth, int m);

  /// Grid through given points; edges at half-gaps, one-sided at the ends.
  static Grid1D from_points(std::vector<double> points);

  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& edges() const { return edges_; }
  double point(int i) const { return points_[static_cast<std::size_t>(i)]; }
  double edge(int i) const { return edges_[static_cast<std::size_t>(i)]; }
  double cell_width(int i) const {
    return edges_[static_cast<std::size_t>(i) + 1] - edges_[static_cast<std::size_t>(i)];
  }
  double lo() const { return edges_.front(); }
  double hi() const { return edges_.back(); }
  double span() const { return hi() - lo(); }

  /// Index of the cell containing x (clamped to [0, size-1]).
  int locate(double x) const;

  bool same_points(const Grid1D& other, double tol) const;

 private:
  std::vector<double> points_;
  std::vector<double> edges_;  // size() + 1 entries, strictly increasing
};

/// Nonnegative point masses on a Grid1D summing to total_mass.
/// weights[i] is the discrete mass of cell i; value(i) = weights[i] / cell width
/// recovers the underlying density sample.
struct DiscreteDensity {
  Grid1D grid;
  std::vector<double> weights;
  double total_mass = 1.0;

  DiscreteDensity(Grid1D g, std::vector<double> w, double mass);

  int size() const { return grid.size(); }
  double value(int i) const { return weights[static_cast<std::size_t>(i)] / grid.cell_width(i); }
  double sum() const;
  double max_weight() const;
};

/// Piecewise-linear cumulative distribution of a DiscreteDensity and its
/// inverse. cum(k) accumulates the mass up to and including cell k, so the
/// continuous cdf passes through (edge(k+1), cum(k)).
class Quantile {
 public:
  explicit Quantile(DiscreteDensity density);

  const DiscreteDensity& density() const { return density_; }
  const std::vector<double>& cumulative() const { return cum_; }

  double cdf(double x) const;
  /// Leftmost x with cdf(x) = w. Throws DomainError for w outside [0, total_mass].
  double inverse(double w) const;

  double support_lo() const { return density_.grid.lo(); }
  double support_hi() const { return density_.grid.hi(); }

 private:
  DiscreteDensity density_;
  std::vector<double> cum_;
};

DiscreteDensity make_uniform(double a, int m, double total_mass = 1.0);
DiscreteDensity make_uniform_interval(double lo, double hi, int m, double total_mass = 1.0);
DiscreteDensity make_triangular(double a, int m, double total_mass = 1.0);
DiscreteDensity make_gaussian(double sigma, double lo, double hi, int m, double total_mass = 1.0);

/// Radial density rho(r) of the uniform ball of given radius: constant on [0, radius].
DiscreteDensity make_ball_rho(int m, double radius = 1.0, double total_mass = 1.0);

/// lambda(r) = C(d) r^{d-1} rho(r), renormalized to rho.total_mass.
/// C(2) = 2*pi, C(3) = 4*pi. Requires nonnegative grid points.
DiscreteDensity radialize(const DiscreteDensity& rho_radial, int dimension);

/// Resample a density onto m cells over the same support (linear interpolation
/// of density values, then renormalization).
DiscreteDensity rediscretize(const DiscreteDensity& density, int m);

struct LoadedDensity {
  DiscreteDensity density;
  double original_mass;  // integral of the file contents before normalization
};

/// CSV with two columns position,weight (header optional). Weights are density
/// values; they are converted to cell masses and normalized to total_mass.
LoadedDensity load_density(const std::string& path, double total_mass = 1.0);

/// Writes position,value rows with 17 significant digits.
void save_density(const std::string& path, const DiscreteDensity& density);

}  // namespace mmot
