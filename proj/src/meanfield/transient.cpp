#include "meanfield/transient.hpp"

#include <cmath>

#include "common/error.hpp"

namespace opdyn::meanfield {

namespace {

Matrix rk4_covariance(const Matrix& xi, const Matrix& d, double t, std::size_t steps) {
  const std::size_t n = xi.rows();
  Matrix s(n, n);
  const double h = t / static_cast<double>(steps);
  const Matrix xit = xi.transpose();
  auto rhs = [&](const Matrix& x) { return d - xi * x - x * xit; };
  for (std::size_t k = 0; k < steps; ++k) {
    const Matrix k1 = rhs(s);
    const Matrix k2 = rhs(s + (0.5 * h) * k1);
    const Matrix k3 = rhs(s + (0.5 * h) * k2);
    const Matrix k4 = rhs(s + h * k3);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

}  // namespace

Matrix noise_covariance(const Matrix& xi, const Matrix& d, double t, const TransientOptions& opts) {
  if (t < 0.0 || !std::isfinite(t)) throw ValidationError("t", "time must be finite and non-negative");
  const std::size_t n = xi.rows();
  if (t == 0.0) return Matrix(n, n);

  const auto spec = linalg::spectrum(xi);
  const double scale = std::max(1.0, linalg::norm_inf(xi));
  bool singular = false;
  for (auto a : spec.eigenvalues)
    for (auto b : spec.eigenvalues)
      if (std::abs(a + b) <= opts.kron_singular_tol * scale) singular = true;

  Matrix out;
  if (singular) {
    out = rk4_covariance(xi, d, t, opts.rk4_steps);
  } else {
    const Matrix id = Matrix::identity(n);
    const Matrix k = linalg::kron(xi, id) + linalg::kron(id, xi);
    const Vector rhs = (Matrix::identity(n * n) - linalg::matexp(k, -t)) * std::span<const double>(linalg::vec(d));
    out = linalg::unvec(linalg::solve(k, rhs), n, n);
  }
  return 0.5 * (out + out.transpose());
}

Transient::Transient(DiscreteSystem sys, TransientOptions opts) : sys_(std::move(sys)), opts_(opts) {
  const auto spec = linalg::spectrum(sys_.Psi);
  psi_min_modulus_ = std::abs(spec.eigenvalues.front());
  for (auto z : spec.eigenvalues) psi_min_modulus_ = std::min(psi_min_modulus_, std::abs(z));
  psi_invertible_ = psi_min_modulus_ > opts_.singular_tol;
  if (psi_invertible_) {
    psi_lu_.emplace(sys_.Psi);
    if (psi_lu_->singular()) {
      psi_invertible_ = false;
    } else {
      y_limit_ = psi_lu_->solve(sys_.forcing());
    }
  }
  for (const auto& xi : sys_.Xi) {
    double m = 1e300;
    for (auto z : linalg::spectrum(xi).eigenvalues) m = std::min(m, std::abs(z));
    xi_invertible_.push_back(m > opts_.singular_tol);
  }
}

void Transient::require_invertible() const {
  if (!psi_invertible_)
    throw NumericalError("Psi is singular (min |eigenvalue| " + std::to_string(psi_min_modulus_) +
                         "); use the Volterra quadrature path");
}

const Vector& Transient::stacked_moment_limit() const {
  require_invertible();
  return y_limit_;
}

Vector Transient::stacked_moment(double t) const {
  require_invertible();
  if (t < 0.0 || !std::isfinite(t)) throw ValidationError("t", "time must be finite and non-negative");
  Vector start = sys_.P0 * std::span<const double>(sys_.x0_stack);
  for (std::size_t k = 0; k < start.size(); ++k) start[k] -= y_limit_[k];
  Vector y = linalg::matexp(sys_.Psi, -t) * std::span<const double>(start);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += y_limit_[k];
  return y;
}

Vector Transient::gamma(double t) const {
  const Vector y = stacked_moment(t);
  return sys_.Zbar * std::span<const double>(y);
}

Vector Transient::mean(std::size_t i, double t) const {
  if (i >= sys_.M) throw ValidationError("personality", "index out of range");
  return all_means(t)[i];
}

namespace {
constexpr std::size_t kAnchorEvery = 16;
}

std::vector<Vector> Transient::all_means(double t) const {
  require_invertible();
  if (t < 0.0 || !std::isfinite(t)) throw ValidationError("t", "time must be finite and non-negative");
  const std::size_t M = sys_.M, N = sys_.N;

  // Terms that do not involve the convolution with gamma.
  std::vector<Vector> base(M);
  std::vector<Vector> forcing(M);  // alpha C u for personalities whose Xi is singular
  for (std::size_t i = 0; i < M; ++i) {
    const Vector x0 = sys_.block(sys_.x0_stack, i);
    base[i] = linalg::matexp(sys_.Xi[i], -t) * std::span<const double>(x0);
    const Vector cu = sys_.C * std::span<const double>(sys_.block(sys_.u_stack, i));
    if (xi_invertible_[i]) {
      const Matrix decay = Matrix::identity(N) - linalg::matexp(sys_.Xi[i], -t);
      const Vector term = linalg::solve(sys_.Xi[i], decay * std::span<const double>(cu));
      for (std::size_t n = 0; n < N; ++n) base[i][n] += sys_.alpha[i] * term[n];
      forcing[i] = Vector(N, 0.0);
    } else {
      forcing[i] = cu;
      for (double& v : forcing[i]) v *= sys_.alpha[i];
    }
  }
  if (t == 0.0) return base;

  // Composite Simpson on the convolution, accumulated Horner-style so only the
  // one-step propagators e^{-Xi h} and e^{-Psi h} are needed.
  auto convolution = [&](std::size_t nodes) {
    const double h = t / static_cast<double>(nodes - 1);
    const Matrix step_psi = linalg::matexp(sys_.Psi, -h);
    std::vector<Matrix> step_xi;
    for (const auto& xi : sys_.Xi) step_xi.push_back(linalg::matexp(xi, -h));

    Vector dev = sys_.P0 * std::span<const double>(sys_.x0_stack);
    for (std::size_t k = 0; k < dev.size(); ++k) dev[k] -= y_limit_[k];
    const Vector dev0 = dev;
    Vector y(dev.size()), g(dev.size()), tmp(dev.size());
    std::vector<Vector> acc(M, Vector(N, 0.0));
    Vector scratch(N);
    for (std::size_t k = 0; k < nodes; ++k) {
      for (std::size_t q = 0; q < y.size(); ++q) y[q] = dev[q] + y_limit_[q];
      linalg::multiply(sys_.Zbar, y, g);
      const double wk = (k == 0 || k == nodes - 1) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      for (std::size_t i = 0; i < M; ++i) {
        linalg::multiply(step_xi[i], acc[i], scratch);
        for (std::size_t n = 0; n < N; ++n)
          acc[i][n] = (k == 0 ? 0.0 : scratch[n]) +
                      wk * (sys_.alpha_bar[i] * g[i * N + n] + forcing[i][n]);
      }
      // Re-anchor on the exact propagator now and then so rounding from the
      // one-step product does not build up over thousands of nodes.
      if ((k + 1) % kAnchorEvery == 0) {
        dev = linalg::matexp(sys_.Psi, -h * static_cast<double>(k + 1)) * std::span<const double>(dev0);
      } else {
        linalg::multiply(step_psi, dev, tmp);
        std::swap(dev, tmp);
      }
    }
    for (auto& a : acc)
      for (double& v : a) v *= h / 3.0;
    return acc;
  };

  std::size_t nodes = std::max<std::size_t>(3, opts_.initial_nodes | 1);
  std::vector<Vector> prev = convolution(nodes);
  for (;;) {
    const std::size_t next_nodes = 2 * nodes - 1;
    if (next_nodes > opts_.max_nodes)
      throw NumericalError("mean quadrature did not reach tolerance", static_cast<long>(nodes));
    std::vector<Vector> cur = convolution(next_nodes);
    double change = 0.0;
    for (std::size_t i = 0; i < M; ++i) change = std::max(change, linalg::max_abs_diff(cur[i], prev[i]));
    prev = std::move(cur);
    nodes = next_nodes;
    if (change < opts_.quadrature_tol) break;
  }

  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t n = 0; n < N; ++n) base[i][n] += prev[i][n];
  return base;
}

Matrix Transient::covariance(std::size_t i, double t) const {
  if (i >= sys_.M) throw ValidationError("personality", "index out of range");
  Matrix s = noise_covariance(sys_.Xi[i], sys_.D, t, opts_);
  if (linalg::norm_inf(sys_.cov0[i]) > 0.0) {
    const Matrix e = linalg::matexp(sys_.Xi[i], -t);
    s += e * sys_.cov0[i] * e.transpose();
  }
  return s;
}

GaussianMixtureState Transient::state(double t) const {
  GaussianMixtureState st;
  st.t = t;
  st.weights = sys_.r;
  st.means = all_means(t);
  for (std::size_t i = 0; i < sys_.M; ++i) st.covariances.push_back(covariance(i, t));
  return st;
}

}  // namespace opdyn::meanfield
