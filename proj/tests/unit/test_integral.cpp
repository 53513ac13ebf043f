#include <doctest.h>

#include <cmath>

#include "common/error.hpp"
#include "integral/integral.hpp"
#include "meanfield/steady.hpp"
#include "meanfield/transient.hpp"

using namespace opdyn;
using namespace opdyn::integral;

namespace {

model::Scenario mixed() {
  model::Scenario s;
  s.subjects = 2;
  s.personalities = {{-0.6, 0.2}, {0.1, 0.5}, {0.7, 0.3}};
  s.coupling = Matrix{{1.0, 0.3}, {0.0, 0.8}};
  s.stubbornness = {0.2, 0.4, 0.3};
  s.prejudice = {{-1.0, 0.5}, {0.2, 1.0}, {1.5, -0.5}};
  s.interaction = model::ProximityKernel{};
  s.noise_variance = 0.05;
  s.initial = {model::DiracLaw{{0.3, -0.2}}, model::DiracLaw{{0.0, 0.4}}, model::DiracLaw{{1.0, 1.0}}};
  return s;
}

double sup_error(const VolterraTrajectory& v, const meanfield::Transient& tr) {
  double e = 0.0;
  for (std::size_t k = 0; k < v.times.size(); ++k) e = std::max(e, linalg::max_abs_diff(v.gamma[k], tr.gamma(v.times[k])));
  return e;
}

}  // namespace

TEST_CASE("Volterra solve converges to the closed-form gamma at second order") {
  const auto sys = meanfield::assemble(mixed());
  const meanfield::Transient tr(sys);
  // The source at t = 0 equals gamma(0).
  CHECK(linalg::max_abs_diff(volterra_source(sys, 0.0), tr.gamma(0.0)) < 1e-14);
  const auto coarse = volterra_solve(sys, 3.0, 0.02);
  const auto fine = volterra_solve(sys, 3.0, 0.01);
  CHECK(coarse.times.size() == 151);
  CHECK(coarse.times.back() == doctest::Approx(3.0));
  const double ec = sup_error(coarse, tr), ef = sup_error(fine, tr);
  CHECK(ef < 1e-3);
  CHECK(ec / ef > 3.5);
  CHECK_THROWS_AS(volterra_solve(sys, 1.0, 0.0), ValidationError);
}

TEST_CASE("Fredholm solution reproduces the mean-field steady state") {
  const auto scn = mixed();
  const auto sys = meanfield::assemble(scn);
  const auto ss = meanfield::steady_state(sys, scn);
  const auto sol = fredholm_solve(scn);
  CHECK(sol.kappa < 1.0);
  CHECK(sol.kappa == doctest::Approx(contraction_bound(scn)));
  CHECK_FALSE(sol.direct_solve);
  CHECK(sol.residual < 1e-11);
  CHECK(fredholm_residual(scn, sol.phi) < 1e-11);
  for (std::size_t i = 0; i < 3; ++i) CHECK(linalg::max_abs_diff(sol.f[i], ss.f[i]) < 1e-10);
  // Neumann changes shrink geometrically.
  REQUIRE(sol.changes.size() > 3);
  CHECK(sol.changes.back() < sol.changes.front());
}

TEST_CASE("Fredholm refuses non-contractive or singular problems") {
  const auto repulsive = model::build_preset("example1", {{"M", "2"}, {"zeta2", "10"}});
  CHECK_THROWS_AS(fredholm_solve(repulsive), NumericalError);
  const auto balanced = model::build_preset("example1", {{"M", "2"}, {"zeta2", "1"}});
  CHECK_THROWS_AS(fredholm_solve(balanced), NumericalError);
}

TEST_CASE("Nystrom interpolation and mesh refinement") {
  const auto spec = model::uniform_proximity_spec(0.1, Matrix{{1.0}}, 1, 1e-3);
  const auto mesh = model::discretize_personality(spec, 20);
  const auto sol = fredholm_solve(mesh);
  std::vector<double> nodes;
  for (const auto& p : mesh.personalities) nodes.push_back(p.p);
  // At the mesh nodes the interpolant is the mesh solution itself.
  const auto at_nodes = nystrom_interpolate(spec, mesh, sol, nodes);
  for (std::size_t i = 0; i < nodes.size(); ++i) CHECK(at_nodes[i][0] == doctest::Approx(sol.phi[i][0]).epsilon(1e-12));

  const std::vector<std::size_t> ns{10, 20, 40};
  const auto rows = mesh_refinement_study(spec, ns);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].sup_diff < rows[0].sup_diff);
  CHECK(rows[2].sup_diff < rows[1].sup_diff);
  const std::vector<std::size_t> bad{20, 10};
  CHECK_THROWS_AS(mesh_refinement_study(spec, bad), ValidationError);
}
