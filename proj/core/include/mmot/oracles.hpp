#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mmot/density.hpp"

namespace mmot {

/// An optimal transport map on an interval. Evaluation outside the domain
/// throws DomainError; maps are defined rho-a.e. only.
class ComotionMap {
 public:
  ComotionMap(std::function<double(double)> eval, double lo, double hi, std::string label);

  double operator()(double x) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::string& label() const { return label_; }

 private:
  std::function<double(double)> eval_;
  double lo_, hi_;
  std::string label_;
};

/// f(x) = x + a/2 for x < 0, x - a/2 for x >= 0 on [-a/2, a/2]; the unique
/// measure-preserving branch assignment for the two-particle uniform density.
ComotionMap comotion_uniform_N2(double a);

/// f(x) = sign(x) (sqrt(2a|x| - x^2) - a) on [-a, a]; f(0) = -a.
ComotionMap comotion_triangular(double a);

/// Quantile construction of the N-marginal one-dimensional maps: the support
/// is split at F^{-1}(k/N) and f~ shifts mass by 1/N in cdf coordinates,
/// wrapping on the last interval. Returns f_2, ..., f_N where f_i is f~
/// composed i-1 times.
std::vector<ComotionMap> comotion_multi_1d(const DiscreteDensity& density, int num_marginals);

/// Continuous piecewise-linear potential on consecutive intervals.
class PiecewisePotential {
 public:
  PiecewisePotential(std::vector<double> breakpoints, std::vector<double> slopes,
                     double value_at_lo);

  double operator()(double x) const;
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& slopes() const { return slopes_; }
  double max_abs() const;

 private:
  std::vector<double> breaks_;
  std::vector<double> slopes_;
  std::vector<double> values_;  // at breakpoints
};

/// The three-piece potential of the uniform [0,1] three-marginal problem:
/// slope 45/4, flat 15/4, slope -45/4.
PiecewisePotential potential_uniform_N3();

/// Tent potential for the two-particle uniform density on [-a/2, a/2] in the
/// tight dual normalization: u(x) = 2/a - 4|x|/a^2.
double potential_uniform_N2(double a, double x);

/// Integrates the equilibrium equation u'(x) = -sum_i (x - f_i(x)) / |x - f_i(x)|^3
/// along the density grid (trapezoid rule) and anchors the gauge so that
/// the density-weighted mean of u is zero.
std::vector<double> potential_from_maps(const std::vector<ComotionMap>& maps,
                                        const DiscreteDensity& density);

/// Anchor values so that sum(values * weights) / total_mass equals `anchor`.
void anchor_potential(std::vector<double>& values, const DiscreteDensity& density,
                      double anchor = 0.0);

/// max_i |a_i - b_i - s| minimized over the constant shift s
/// (s = (max + min)/2 of the difference).
double linf_after_shift(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mmot
