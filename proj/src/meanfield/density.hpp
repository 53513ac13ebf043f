#pragma once

#include <string>

#include "meanfield/transient.hpp"

namespace opdyn::meanfield {

struct Axis {
  double lo = -3.0;
  double hi = 3.0;
  std::size_t n = 201;

  /// Node k, written so that symmetric ranges give exactly mirrored nodes.
  double at(std::size_t k) const;
  double step() const { return n > 1 ? (hi - lo) / static_cast<double>(n - 1) : 0.0; }
};

/// Values on the tensor grid of `axes`; the first axis varies fastest.
struct DensityGrid {
  std::vector<Axis> axes;
  std::vector<Vector> per_personality;
  Vector aggregate;

  std::size_t size() const;
  std::vector<std::size_t> index(std::size_t flat) const;
};

/// Multivariate normal density evaluator with a cached Cholesky factor.
class Gaussian {
 public:
  /// Adds 1e-12 I when `regularize` is set or when the covariance is not
  /// numerically positive definite; throws NumericalError if that still fails.
  Gaussian(Vector mean, const Matrix& cov, bool regularize = false);
  double operator()(std::span<const double> x) const;
  double log_density(std::span<const double> x) const;

 private:
  Vector mean_;
  Matrix lower_;
  double log_norm_ = 0.0;
};

DensityGrid density_grid(const GaussianMixtureState& st, const std::vector<Axis>& axes);

/// Product-trapezoid integral of grid values.
double grid_integral(const std::vector<Axis>& axes, std::span<const double> values);

/// Exact marginal density of coordinate `dim` for the aggregated mixture.
Vector marginal_density(const GaussianMixtureState& st, std::size_t dim, const Axis& axis);

/// Smallest axis-aligned box holding every component's mean plus or minus
/// `sigmas` standard deviations along the dominant covariance direction.
std::vector<Axis> covering_axes(const GaussianMixtureState& st, const std::vector<Axis>& requested, double sigmas,
                                bool& expanded);

}  // namespace opdyn::meanfield
