#pragma once

#include "meanfield/density.hpp"
#include "meanfield/system.hpp"
#include "model/scenario.hpp"

namespace opdyn::meanfield {

struct SteadyState {
  std::vector<Vector> f;   // stationary mean per personality
  std::vector<Matrix> W;   // stationary covariance per personality
  std::vector<Vector> beta;
  Vector eta;
  Vector w;
  Vector gamma_inf;  // stacked, length MN
};

/// gamma at infinity through Psi^{-1}: Zbar Psi^{-1} P1 (I (x) C) u.
Vector gamma_infinity_closed(const DiscreteSystem& sys);
/// gamma at infinity from the final-value fixed point solved as its own linear system:
/// (I - Zbar Xi^{-1} P2) gamma = Zbar Xi^{-1} P1 (I (x) C) u.
Vector gamma_infinity_fixed_point(const DiscreteSystem& sys);

/// Stationary Gaussian mixture. Refuses anything not classified Stable by
/// throwing InstabilityError with the serialized stability report.
SteadyState steady_state(const DiscreteSystem& sys, const model::Scenario& scn);

/// Stationary mean from a given beta: (alpha_bar beta + alpha u) / w.
std::vector<Vector> stationary_means(const DiscreteSystem& sys, const std::vector<Vector>& beta);

GaussianMixtureState steady_mixture(const DiscreteSystem& sys, const SteadyState& ss);

/// Normalized Gibbs density of component i for symmetric positive definite C,
/// computed in whitened coordinates y = L^T x with L^T D L = I. Includes the weight r_i.
double gibbs_density(const DiscreteSystem& sys, const SteadyState& ss, std::size_t i, std::span<const double> x);

}  // namespace opdyn::meanfield
