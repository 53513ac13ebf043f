#include <doctest.h>

#include <cmath>
#include <random>

#include "common/error.hpp"
#include "meanfield/density.hpp"
#include "meanfield/fp_residual.hpp"
#include "meanfield/steady.hpp"
#include "meanfield/system.hpp"
#include "meanfield/transient.hpp"
#include "model/scenario.hpp"

using namespace opdyn;
using namespace opdyn::meanfield;
using linalg::Matrix;
using linalg::Vector;

namespace {

model::Scenario small_scenario() {
  model::Scenario s;
  s.subjects = 2;
  s.personalities = {{-0.6, 0.2}, {0.1, 0.5}, {0.7, 0.3}};
  s.coupling = Matrix{{1.0, 0.3}, {-0.2, 0.8}};
  s.stubbornness = {0.2, 0.4, 0.3};
  s.prejudice = {{-1.0, 0.5}, {0.2, 1.0}, {1.5, -0.5}};
  s.interaction = model::ProximityKernel{};
  s.noise_variance = 0.05;
  s.initial = {model::DiracLaw{{0.3, -0.2}}, model::DiracLaw{{0.0, 0.4}},
               model::GaussianLaw{{1.0, 1.0}, Matrix{{0.2, 0.05}, {0.05, 0.1}}}};
  return s;
}

// Straight from the agent drift: dm_i = C[abar_i sum_j zeta_ij r_j (m_j - m_i) + alpha_i (u_i - m_i)].
std::vector<Vector> rk4_means(const model::Scenario& s, double t, std::size_t steps) {
  const std::size_t m = s.personality_count(), n = s.subjects;
  std::vector<Vector> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i] = model::initial_mean(s.initial[i]);
  auto rhs = [&](const std::vector<Vector>& y) {
    std::vector<Vector> out(m, Vector(n, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
      Vector pre(n, 0.0);
      const double ab = 1.0 - s.stubbornness[i];
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < n; ++k) pre[k] += ab * s.zeta(i, j) * s.personalities[j].r * (y[j][k] - y[i][k]);
      for (std::size_t k = 0; k < n; ++k) pre[k] += s.stubbornness[i] * (s.prejudice[i][k] - y[i][k]);
      out[i] = s.coupling * pre;
    }
    return out;
  };
  auto axpy = [&](const std::vector<Vector>& y, const std::vector<Vector>& d, double h) {
    auto z = y;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < n; ++k) z[i][k] += h * d[i][k];
    return z;
  };
  const double h = t / static_cast<double>(steps);
  for (std::size_t s2 = 0; s2 < steps; ++s2) {
    const auto k1 = rhs(x), k2 = rhs(axpy(x, k1, h / 2)), k3 = rhs(axpy(x, k2, h / 2)), k4 = rhs(axpy(x, k3, h));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < n; ++k) x[i][k] += h / 6 * (k1[i][k] + 2 * k2[i][k] + 2 * k3[i][k] + k4[i][k]);
  }
  return x;
}

Matrix rk4_covariance(const Matrix& xi, const Matrix& d, const Matrix& s0, double t, std::size_t steps) {
  auto rhs = [&](const Matrix& s) { return d - xi * s - s * xi.transpose(); };
  Matrix s = s0;
  const double h = t / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const Matrix k1 = rhs(s), k2 = rhs(s + (h / 2) * k1), k3 = rhs(s + (h / 2) * k2), k4 = rhs(s + h * k3);
    s += (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

}  // namespace

TEST_CASE("assembled system matches its definitions") {
  const auto scn = small_scenario();
  const auto sys = assemble(scn);
  CHECK(sys.M == 3);
  CHECK(sys.N == 2);
  for (std::size_t i = 0; i < 3; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < 3; ++j) eta += scn.zeta(i, j) * scn.personalities[j].r;
    CHECK(sys.eta[i] == doctest::Approx(eta).epsilon(1e-15));
    const double w = (1 - scn.stubbornness[i]) * eta + scn.stubbornness[i];
    CHECK(linalg::max_abs_diff(sys.Xi[i], w * scn.coupling) < 1e-15);
  }
  // Psi y reproduces the negated linear part of the stacked mean dynamics.
  Vector y(6);
  for (std::size_t k = 0; k < 6; ++k) y[k] = std::sin(1.0 + k);
  const Vector py = sys.Psi * y;
  for (std::size_t i = 0; i < 3; ++i) {
    const double ri = scn.personalities[i].r;
    Vector pre(2, 0.0);
    for (std::size_t k = 0; k < 2; ++k) {
      double s = sys.w[i] * y[i * 2 + k];
      for (std::size_t j = 0; j < 3; ++j) s -= ri * (1 - scn.stubbornness[i]) * scn.zeta(i, j) * y[j * 2 + k];
      pre[k] = s;
    }
    const Vector expect = scn.coupling * pre;
    for (std::size_t k = 0; k < 2; ++k) CHECK(py[i * 2 + k] == doctest::Approx(expect[k]).epsilon(1e-13));
  }
  CHECK(linalg::max_abs_diff(sys.D, scn.noise_variance * (scn.coupling * scn.coupling.transpose())) < 1e-16);
}

TEST_CASE("transient means agree with direct integration of the moment system") {
  const auto scn = small_scenario();
  const Transient tr(assemble(scn), TransientOptions{.quadrature_tol = 1e-11});
  REQUIRE(tr.psi_invertible());
  for (double t : {0.0, 0.3, 2.0, 7.5}) {
    const auto ref = rk4_means(scn, t, 4000);
    const auto all = tr.all_means(t);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(linalg::max_abs_diff(tr.mean(i, t), ref[i]) < 1e-9);
      CHECK(linalg::max_abs_diff(all[i], ref[i]) < 1e-9);
    }
    // Stacked moment and gamma are consistent with the means.
    const Vector y = tr.stacked_moment(t);
    Vector stacked;
    for (std::size_t i = 0; i < 3; ++i)
      for (double v : ref[i]) stacked.push_back(v * scn.personalities[i].r);
    CHECK(linalg::max_abs_diff(y, stacked) < 1e-10);
    CHECK(linalg::max_abs_diff(tr.gamma(t), tr.system().Zbar * std::span<const double>(stacked)) < 1e-10);
  }
}

TEST_CASE("transient covariance solves the Lyapunov differential equation") {
  const auto scn = small_scenario();
  const auto sys = assemble(scn);
  const Transient tr(sys);
  for (double t : {0.5, 4.0}) {
    for (std::size_t i = 0; i < 3; ++i) {
      const Matrix ref = rk4_covariance(sys.Xi[i], sys.D, sys.cov0[i], t, 4000);
      CHECK(linalg::max_abs_diff(tr.covariance(i, t), ref) < 1e-11);
    }
  }
  // Singular Kronecker sum: rotation generator. Exact answer sigma^2 t I.
  const Matrix rot{{0.0, 1.0}, {-1.0, 0.0}};
  const Matrix d = 0.3 * (rot * rot.transpose());
  for (double t : {1.0, 10.0, 80.0}) {
    const Matrix s = noise_covariance(rot, d, t);
    CHECK(linalg::max_abs_diff(s, (0.3 * t) * Matrix::identity(2)) < 1e-9 * std::max(1.0, t));
  }
  // Generic case against RK4.
  const Matrix xi{{0.7, 0.4}, {-0.3, 0.2}};
  const Matrix dd{{0.5, 0.1}, {0.1, 0.2}};
  CHECK(linalg::max_abs_diff(noise_covariance(xi, dd, 3.0), rk4_covariance(xi, dd, Matrix(2, 2), 3.0, 6000)) < 1e-11);
}

TEST_CASE("singular Psi is rejected on the closed-form path") {
  auto scn = model::build_preset("example1", {{"zeta2", "0.0101010101010101"}, {"M", "2"}});
  // alpha - abar zeta2 vanishes up to rounding for this zeta2.
  scn.interaction = model::CommunityKernel{1.0, 0.01 / 0.99};
  const Transient tr(assemble(scn));
  CHECK_FALSE(tr.psi_invertible());
  CHECK_THROWS_AS(tr.gamma(1.0), NumericalError);
}

TEST_CASE("density grids conserve mass and respect mirror symmetry") {
  const auto scn = model::build_preset("community");
  const Transient tr(assemble(scn));
  const auto st = tr.state(5.0);
  bool expanded = false;
  const auto axes = covering_axes(st, {Axis{-3, 3, 201}, Axis{-3, 3, 201}}, 6.0, expanded);
  const auto g = density_grid(st, axes);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(grid_integral(axes, g.per_personality[i]) == doctest::Approx(scn.personalities[i].r).epsilon(1e-4));
  // Prejudices are mirrored, so the aggregate density is even on a symmetric grid.
  const auto sym = density_grid(st, {Axis{-2, 2, 41}, Axis{-2, 2, 41}});
  double worst = 0.0;
  for (std::size_t k = 0; k < sym.size(); ++k) worst = std::max(worst, std::abs(sym.aggregate[k] - sym.aggregate[sym.size() - 1 - k]));
  CHECK(worst < 1e-10);

  // Exact 1-D marginal versus numerical integration of the 2-D grid.
  const Axis ax{-2, 2, 41};
  const Vector marg = marginal_density(st, 1, ax);
  const Axis fine{-8, 8, 1601};
  const auto g2 = density_grid(st, {fine, ax});
  for (std::size_t k = 0; k < ax.n; ++k) {
    Vector row(fine.n);
    for (std::size_t j = 0; j < fine.n; ++j) row[j] = g2.aggregate[k * fine.n + j];
    CHECK(grid_integral({fine}, row) == doctest::Approx(marg[k]).epsilon(1e-6));
  }
}

TEST_CASE("Gaussian evaluator") {
  const Gaussian g({1.0, -1.0}, Matrix{{2.0, 0.5}, {0.5, 1.0}});
  const double det = 2.0 - 0.25;
  const double x0 = 0.5, x1 = 0.0;  // offsets (-0.5, 1)
  const double q = (1.0 * 0.25 - 2 * 0.5 * (-0.5) * 1.0 + 2.0 * 1.0) / det;
  CHECK(g(std::vector<double>{x0, x1}) == doctest::Approx(std::exp(-0.5 * q) / (2 * M_PI * std::sqrt(det))).epsilon(1e-14));
  CHECK_THROWS_AS(Gaussian({0.0, 0.0}, Matrix{{1.0, 2.0}, {2.0, 1.0}}), NumericalError);
}

TEST_CASE("steady state: fixed point, Lyapunov and long-time limit agree") {
  const auto scn = small_scenario();
  const auto sys = assemble(scn);
  const auto ss = steady_state(sys, scn);
  CHECK(linalg::max_abs_diff(gamma_infinity_closed(sys), gamma_infinity_fixed_point(sys)) < 1e-12);
  const Transient tr(sys, TransientOptions{.quadrature_tol = 1e-11});
  const auto late = tr.all_means(400.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(linalg::max_abs_diff(ss.f[i], late[i]) < 1e-8);
    const Matrix res = sys.Xi[i] * ss.W[i] + ss.W[i] * sys.Xi[i].transpose() - sys.D;
    CHECK(linalg::norm_inf(res) < 1e-13);
    CHECK(linalg::max_abs_diff(ss.W[i], tr.covariance(i, 400.0)) < 1e-10);
  }
  // Self-consistency: f = (abar beta + alpha u) / w with beta = sum_j zeta_ij r_j f_j.
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 2; ++k) {
      double beta = 0.0;
      for (std::size_t j = 0; j < 3; ++j) beta += scn.zeta(i, j) * scn.personalities[j].r * ss.f[j][k];
      const double a = scn.stubbornness[i];
      CHECK(ss.f[i][k] == doctest::Approx(((1 - a) * beta + a * scn.prejudice[i][k]) / sys.w[i]).epsilon(1e-12));
    }
}

TEST_CASE("steady state refuses unstable scenarios") {
  const auto scn = model::build_preset("example1", {{"zeta2", "0.5"}});
  try {
    steady_state(assemble(scn), scn);
    FAIL("expected refusal");
  } catch (const InstabilityError& e) {
    CHECK(e.report_json().find("\"TypeII\"") != std::string::npos);
  }
}

TEST_CASE("Gibbs form equals the stationary Gaussian for symmetric coupling") {
  auto scn = small_scenario();
  scn.coupling = Matrix{{2.0, 0.5}, {0.5, 1.0}};
  const auto sys = assemble(scn);
  const auto ss = steady_state(sys, scn);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (std::size_t i = 0; i < 3; ++i) {
    const Gaussian g(ss.f[i], ss.W[i]);
    for (int k = 0; k < 5; ++k) {
      const Vector x{ss.f[i][0] + 0.3 * nd(rng), ss.f[i][1] + 0.3 * nd(rng)};
      CHECK(gibbs_density(sys, ss, i, x) == doctest::Approx(scn.personalities[i].r * g(x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("Fokker-Planck residual is small and converges at second order") {
  auto scn = small_scenario();
  scn.noise_variance = 0.2;
  const Transient tr(assemble(scn), TransientOptions{.quadrature_tol = 1e-13});
  const auto st = tr.state(1.0);
  std::vector<std::pair<double, double>> box;
  for (std::size_t k = 0; k < 2; ++k) box.emplace_back(st.means[1][k] - 0.5, st.means[1][k] + 0.5);
  const auto a = fp_residual(tr, 1.0, box, 0.04, 0.04);
  const auto b = fp_residual(tr, 1.0, box, 0.02, 0.02);
  CHECK(a.sup_residual < 0.05 * a.sup_density);
  CHECK(std::log2(a.sup_residual / b.sup_residual) > 1.8);
}
