#pragma once

#include <optional>

#include "meanfield/system.hpp"

namespace opdyn::meanfield {

struct TransientOptions {
  std::size_t initial_nodes = 513;
  double quadrature_tol = 1e-8;
  std::size_t max_nodes = (std::size_t{1} << 22) + 1;
  /// Psi counts as singular when some eigenvalue has modulus below this.
  double singular_tol = 1e-12;
  /// Relative threshold on |lambda_a + lambda_b| for the covariance Kronecker sum.
  double kron_singular_tol = 1e-9;
  std::size_t rk4_steps = 2048;
};

/// Per-personality Gaussian components of the opinion density at one time.
struct GaussianMixtureState {
  double t = 0.0;
  Vector weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
};

/// Integral over [0, t] of e^{-xi s} d e^{-xi^T s} ds, the noise-driven covariance
/// with a zero initial spread.
Matrix noise_covariance(const Matrix& xi, const Matrix& d, double t, const TransientOptions& opts = {});

/// Closed-form transient solution of the discrete-personality system.
class Transient {
 public:
  explicit Transient(DiscreteSystem sys, TransientOptions opts = {});

  const DiscreteSystem& system() const { return sys_; }
  const TransientOptions& options() const { return opts_; }
  bool psi_invertible() const { return psi_invertible_; }
  double psi_min_modulus() const { return psi_min_modulus_; }

  /// Stacked gamma(t), length MN. Throws NumericalError when Psi is singular.
  Vector gamma(double t) const;
  /// Stacked first moment y(t) = P0 m(t) solving dy/dt = -Psi y + P1 (I (x) C) u.
  Vector stacked_moment(double t) const;
  /// Limit of the stacked moment as t grows, Psi^{-1} P1 (I (x) C) u.
  const Vector& stacked_moment_limit() const;

  /// Mean of personality i by quadrature of the convolution with gamma.
  Vector mean(std::size_t i, double t) const;
  /// All personality means from one shared quadrature pass.
  std::vector<Vector> all_means(double t) const;
  Matrix covariance(std::size_t i, double t) const;
  GaussianMixtureState state(double t) const;

 private:
  void require_invertible() const;

  DiscreteSystem sys_;
  TransientOptions opts_;
  bool psi_invertible_ = false;
  double psi_min_modulus_ = 0.0;
  std::optional<linalg::LU> psi_lu_;
  Vector y_limit_;
  std::vector<bool> xi_invertible_;
};

}  // namespace opdyn::meanfield
