#pragma once

#include <vector>

#include "linalg/matrix.hpp"
#include "model/scenario.hpp"

namespace opdyn::meanfield {

using linalg::Matrix;
using linalg::Vector;

/// Matrices of the discrete-personality mean-field system. Stacked vectors and
/// MN x MN matrices are ordered personality-major: entry i*N + n is subject n
/// of personality i.
struct DiscreteSystem {
  std::size_t M = 0;
  std::size_t N = 0;

  Vector r;
  Vector alpha;
  Vector alpha_bar;
  Matrix zeta;  // M x M kernel table
  Vector eta;   // eta_i = sum_j zeta_ij r_j
  Vector w;     // w_i = alpha_bar_i eta_i + alpha_i

  Matrix C;
  Matrix D;  // sigma^2 C C^T
  double noise_variance = 0.0;

  std::vector<Matrix> Gamma;  // C eta_i
  std::vector<Matrix> Xi;     // alpha_bar_i Gamma_i + alpha_i C
  Matrix Zbar;                // zeta (x) C
  Matrix P0, P1, P2;          // diag(r), diag(r alpha), diag(r alpha_bar), each (x) I_N
  Matrix Psi;                 // blockdiag(Xi) - P2 Zbar
  Vector u_stack;
  Vector x0_stack;
  std::vector<Matrix> cov0;  // initial covariance per personality (zero for Dirac starts)

  Vector block(std::span<const double> stacked, std::size_t i) const;
  /// P1 (I_M (x) C) u: the constant forcing of the stacked first moment.
  Vector forcing() const;
  Matrix xi_blockdiag() const;
};

DiscreteSystem assemble(const model::Scenario& scn);

}  // namespace opdyn::meanfield
