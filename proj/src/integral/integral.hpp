#pragma once

#include <vector>

#include "meanfield/system.hpp"
#include "model/scenario.hpp"

namespace opdyn::integral {

using linalg::Matrix;
using linalg::Vector;

struct VolterraTrajectory {
  std::vector<double> times;
  std::vector<Vector> gamma;  // stacked, length MN each
};

/// Trapezoidal product-integration of the Volterra equation for gamma(t) on
/// [0, horizon] with step dt. The source term is evaluated in closed form.
VolterraTrajectory volterra_solve(const meanfield::DiscreteSystem& sys, double horizon, double dt);

/// Source term gamma0 + gamma1 at time t.
Vector volterra_source(const meanfield::DiscreteSystem& sys, double t);

struct FredholmOptions {
  double tol = 1e-12;
  long max_iterations = 10000;
  /// |w| or |eta| below this is treated as vanishing.
  double weight_tol = 1e-12;
};

struct FredholmSolution {
  std::size_t n = 0;
  Vector p;
  std::vector<Vector> phi;
  std::vector<Vector> beta;
  std::vector<Vector> f;
  long iterations = 0;
  bool direct_solve = false;
  double kappa = 0.0;
  double residual = 0.0;
  /// Sup-norm change per Neumann iteration.
  std::vector<double> changes;
};

/// Upper bound sup alpha_bar eta / (alpha + alpha_bar eta) over the mesh.
double contraction_bound(const model::Scenario& scn);

/// Neumann iteration phi <- h + A phi on the personality mesh of a discrete
/// scenario, one subject component at a time.
FredholmSolution fredholm_solve(const model::Scenario& scn, const FredholmOptions& opts = {});
/// Discretizes the continuous specification with n cells, then solves.
FredholmSolution fredholm_solve(const model::ContinuousSpec& spec, std::size_t n, const FredholmOptions& opts = {});

/// sup-norm of phi - h - A phi recomputed from the scenario data alone.
double fredholm_residual(const model::Scenario& scn, const std::vector<Vector>& phi);

/// Nystrom interpolant of a mesh solution, evaluated at arbitrary personalities.
std::vector<Vector> nystrom_interpolate(const model::ContinuousSpec& spec, const model::Scenario& mesh,
                                        const FredholmSolution& sol, std::span<const double> at);

struct MeshStudyRow {
  std::size_t n = 0;
  double sup_diff = 0.0;  // sup over the 2n mesh of |phi_n - phi_2n|
  long iterations = 0;
  double kappa = 0.0;
};

std::vector<MeshStudyRow> mesh_refinement_study(const model::ContinuousSpec& spec, std::span<const std::size_t> ns,
                                                const FredholmOptions& opts = {});

}  // namespace opdyn::integral
