#include "meanfield/density.hpp"

#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace opdyn::meanfield {

double Axis::at(std::size_t k) const {
  if (n <= 1) return 0.5 * (lo + hi);
  const double d = static_cast<double>(n - 1);
  return (lo * (d - static_cast<double>(k)) + hi * static_cast<double>(k)) / d;
}

std::size_t DensityGrid::size() const {
  std::size_t s = 1;
  for (const auto& a : axes) s *= a.n;
  return s;
}

std::vector<std::size_t> DensityGrid::index(std::size_t flat) const {
  std::vector<std::size_t> k(axes.size());
  for (std::size_t d = 0; d < axes.size(); ++d) {
    k[d] = flat % axes[d].n;
    flat /= axes[d].n;
  }
  return k;
}

Gaussian::Gaussian(Vector mean, const Matrix& cov, bool regularize) : mean_(std::move(mean)) {
  const std::size_t n = mean_.size();
  if (cov.rows() != n || cov.cols() != n) throw ValidationError("covariance", "dimension mismatch");
  Matrix c = 0.5 * (cov + cov.transpose());
  bool ok = !regularize && linalg::cholesky(c, lower_);
  if (!ok) {
    c += 1e-12 * Matrix::identity(n);
    ok = linalg::cholesky(c, lower_);
  }
  if (!ok)
    throw NumericalError("degenerate covariance after regularization; use a larger t or a nonzero noise variance");
  double logdet = 0.0;
  for (std::size_t k = 0; k < n; ++k) logdet += std::log(lower_(k, k));
  log_norm_ = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - logdet;
}

double Gaussian::log_density(std::span<const double> x) const {
  const std::size_t n = mean_.size();
  double z[16];
  std::vector<double> heap;
  double* zp = z;
  if (n > 16) {
    heap.resize(n);
    zp = heap.data();
  }
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i] - mean_[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower_(i, k) * zp[k];
    zp[i] = s / lower_(i, i);
    q += zp[i] * zp[i];
  }
  return log_norm_ - 0.5 * q;
}

double Gaussian::operator()(std::span<const double> x) const { return std::exp(log_density(x)); }

DensityGrid density_grid(const GaussianMixtureState& st, const std::vector<Axis>& axes) {
  const std::size_t m = st.means.size();
  if (m == 0) throw ValidationError("state", "no mixture components");
  const std::size_t n = st.means.front().size();
  if (axes.size() != n) throw ValidationError("grid", "one axis per subject is required");
  for (const auto& a : axes)
    if (a.n < 1 || !(a.hi >= a.lo)) throw ValidationError("grid", "axis needs n >= 1 and hi >= lo");

  std::vector<Gaussian> comps;
  comps.reserve(m);
  for (std::size_t i = 0; i < m; ++i) comps.emplace_back(st.means[i], st.covariances[i], st.t == 0.0);

  DensityGrid g;
  g.axes = axes;
  const std::size_t total = g.size();
  g.per_personality.assign(m, Vector(total));
  g.aggregate.assign(total, 0.0);
  Vector x(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t d = 0; d < n; ++d) {
      x[d] = axes[d].at(rest % axes[d].n);
      rest /= axes[d].n;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double v = st.weights[i] * comps[i](x);
      g.per_personality[i][flat] = v;
      sum += v;
    }
    g.aggregate[flat] = sum;
  }
  return g;
}

double grid_integral(const std::vector<Axis>& axes, std::span<const double> values) {
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.n;
  if (values.size() != total) throw ValidationError("grid", "value count does not match axes");
  double s = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    double w = 1.0;
    for (const auto& a : axes) {
      const std::size_t k = rest % a.n;
      rest /= a.n;
      w *= (k == 0 || k + 1 == a.n) ? 0.5 * a.step() : a.step();
    }
    s += w * values[flat];
  }
  return s;
}

Vector marginal_density(const GaussianMixtureState& st, std::size_t dim, const Axis& axis) {
  Vector out(axis.n, 0.0);
  for (std::size_t i = 0; i < st.means.size(); ++i) {
    const double mu = st.means[i][dim];
    const double var = st.covariances[i](dim, dim) + (st.t == 0.0 ? 1e-12 : 0.0);
    if (!(var > 0.0)) throw NumericalError("degenerate marginal variance");
    const double norm = st.weights[i] / std::sqrt(2.0 * std::numbers::pi * var);
    for (std::size_t k = 0; k < axis.n; ++k) {
      const double z = axis.at(k) - mu;
      out[k] += norm * std::exp(-0.5 * z * z / var);
    }
  }
  return out;
}

std::vector<Axis> covering_axes(const GaussianMixtureState& st, const std::vector<Axis>& requested, double sigmas,
                                bool& expanded) {
  expanded = false;
  std::vector<Axis> axes = requested;
  for (std::size_t i = 0; i < st.means.size(); ++i) {
    const auto eig = linalg::symmetric_eigen(0.5 * (st.covariances[i] + st.covariances[i].transpose()));
    const double spread = sigmas * std::sqrt(std::max(0.0, eig.values.back()));
    for (std::size_t d = 0; d < axes.size(); ++d) {
      const double lo = st.means[i][d] - spread, hi = st.means[i][d] + spread;
      if (lo < axes[d].lo) {
        axes[d].lo = lo;
        expanded = true;
      }
      if (hi > axes[d].hi) {
        axes[d].hi = hi;
        expanded = true;
      }
    }
  }
  return axes;
}

}  // namespace opdyn::meanfield
