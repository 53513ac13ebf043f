#include "meanfield/steady.hpp"

#include <cmath>
#include <numbers>

#include "common/error.hpp"
#include "stability/stability.hpp"

namespace opdyn::meanfield {

Vector gamma_infinity_closed(const DiscreteSystem& sys) {
  const Vector y = linalg::solve(sys.Psi, sys.forcing());
  return sys.Zbar * std::span<const double>(y);
}

Vector gamma_infinity_fixed_point(const DiscreteSystem& sys) {
  const std::size_t mn = sys.M * sys.N;
  std::vector<Matrix> inv;
  for (const auto& xi : sys.Xi) inv.push_back(linalg::inverse(xi));
  const Matrix xi_inv = linalg::block_diagonal(inv);
  const Matrix zx = sys.Zbar * xi_inv;
  const Matrix lhs = Matrix::identity(mn) - zx * sys.P2;
  const Vector rhs = zx * std::span<const double>(sys.forcing());
  return linalg::solve(lhs, rhs);
}

std::vector<Vector> stationary_means(const DiscreteSystem& sys, const std::vector<Vector>& beta) {
  std::vector<Vector> f(sys.M, Vector(sys.N));
  for (std::size_t i = 0; i < sys.M; ++i) {
    if (std::abs(sys.w[i]) < 1e-300) throw NumericalError("w(p) vanishes for personality " + std::to_string(i));
    for (std::size_t n = 0; n < sys.N; ++n)
      f[i][n] = (sys.alpha_bar[i] * beta[i][n] + sys.alpha[i] * sys.u_stack[i * sys.N + n]) / sys.w[i];
  }
  return f;
}

SteadyState steady_state(const DiscreteSystem& sys, const model::Scenario& scn) {
  stability::StabilityReport rep = stability::classify(sys);
  rep.sufficient_checks.prop1 = stability::prop1_check(scn);
  rep.sufficient_checks.prop2 = stability::prop2_check(scn);
  if (rep.classification != stability::Classification::Stable)
    throw InstabilityError(std::string("no steady state: system is ") + stability::to_string(rep.classification),
                           stability::to_json(rep));
  const double min_re_c = linalg::spectrum(sys.C).min_real_part;
  for (std::size_t i = 0; i < sys.M; ++i)
    if (!(sys.w[i] * min_re_c > 0.0))
      throw InstabilityError("no steady state: -w(p) C is not Hurwitz for personality " + std::to_string(i),
                             stability::to_json(rep));

  SteadyState ss;
  ss.eta = sys.eta;
  ss.w = sys.w;
  // beta_i = sum_j zeta_ij y_j with y the stationary stacked moment.
  const Vector y = linalg::solve(sys.Psi, sys.forcing());
  ss.gamma_inf = sys.Zbar * std::span<const double>(y);
  ss.beta.assign(sys.M, Vector(sys.N, 0.0));
  for (std::size_t i = 0; i < sys.M; ++i)
    for (std::size_t j = 0; j < sys.M; ++j)
      for (std::size_t n = 0; n < sys.N; ++n) ss.beta[i][n] += sys.zeta(i, j) * y[j * sys.N + n];
  ss.f = stationary_means(sys, ss.beta);
  for (std::size_t i = 0; i < sys.M; ++i) ss.W.push_back(linalg::lyapunov_solve(-sys.w[i] * sys.C, sys.D));
  return ss;
}

GaussianMixtureState steady_mixture(const DiscreteSystem& sys, const SteadyState& ss) {
  GaussianMixtureState st;
  st.t = HUGE_VAL;
  st.weights = sys.r;
  st.means = ss.f;
  st.covariances = ss.W;
  return st;
}

double gibbs_density(const DiscreteSystem& sys, const SteadyState& ss, std::size_t i, std::span<const double> x) {
  const std::size_t n = sys.N;
  if (linalg::max_abs_diff(sys.C, sys.C.transpose()) > 1e-14 * std::max(1.0, linalg::norm_inf(sys.C)))
    throw ValidationError("coupling", "the Gibbs form needs a symmetric coupling matrix");
  // D = Q S Q^T; L = Q S^{-1/2}.
  const auto eig = linalg::symmetric_eigen(sys.D);
  Matrix l(n, n), linv_t(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (!(eig.values[b] > 0.0)) throw NumericalError("diffusion tensor is singular");
      l(a, b) = eig.vectors(a, b) / std::sqrt(eig.values[b]);
      linv_t(a, b) = eig.vectors(a, b) * std::sqrt(eig.values[b]);
    }
  // Potential V1(y) = (w/2) (y - y_f)^T K (y - y_f), K = L^T C L^{-T}; the
  // standard-form stationary law is exp(-2 V1) over y.
  const Matrix k = l.transpose() * sys.C * linv_t;
  const Matrix ks = 0.5 * (k + k.transpose());
  const Matrix precision = 2.0 * sys.w[i] * ks;
  Vector dx(n);
  for (std::size_t a = 0; a < n; ++a) dx[a] = x[a] - ss.f[i][a];
  const Vector dy = l.transpose() * std::span<const double>(dx);
  const Vector pdy = ks * std::span<const double>(dy);
  double v1 = 0.0;
  for (std::size_t a = 0; a < n; ++a) v1 += 0.5 * sys.w[i] * dy[a] * pdy[a];
  const double det_prec = linalg::LU(precision).determinant();
  if (!(det_prec > 0.0)) throw NumericalError("Gibbs potential is not confining");
  const double norm_y = std::sqrt(det_prec) / std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(n));
  const double jac = std::abs(linalg::LU(l).determinant());
  return sys.r[i] * norm_y * jac * std::exp(-2.0 * v1);
}

}  // namespace opdyn::meanfield
