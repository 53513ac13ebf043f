#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "integral/integral.hpp"

namespace opdyn::integral {

namespace {

struct MeshData {
  std::size_t M = 0, N = 0;
  Matrix zeta;
  Vector r, alpha, alpha_bar, eta, w;
  std::vector<Vector> u;
};

MeshData mesh_data(const model::Scenario& scn, double weight_tol) {
  model::validate(scn);
  MeshData d;
  d.M = scn.personality_count();
  d.N = scn.subjects;
  d.zeta = scn.zeta_table();
  d.alpha = scn.stubbornness;
  d.u = scn.prejudice;
  for (std::size_t i = 0; i < d.M; ++i) {
    d.r.push_back(scn.personalities[i].r);
    d.alpha_bar.push_back(1.0 - d.alpha[i]);
  }
  d.eta.assign(d.M, 0.0);
  for (std::size_t i = 0; i < d.M; ++i) {
    for (std::size_t k = 0; k < d.M; ++k) d.eta[i] += d.zeta(i, k) * d.r[k];
    d.w.push_back(d.alpha_bar[i] * d.eta[i] + d.alpha[i]);
    if (std::abs(d.w[i]) <= weight_tol)
      throw NumericalError("singular weight: w(p) vanishes at p = " + std::to_string(scn.personalities[i].p));
    if (std::abs(d.eta[i]) <= weight_tol)
      throw NumericalError("singular weight: eta(p) vanishes at p = " + std::to_string(scn.personalities[i].p));
  }
  return d;
}

double kappa_of(const MeshData& d) {
  double k = -HUGE_VAL;
  for (std::size_t i = 0; i < d.M; ++i) k = std::max(k, d.alpha_bar[i] * d.eta[i] / d.w[i]);
  return k;
}

// A_ik = Phi_ik r_k and h_i, both built straight from the definitions.
void operator_and_source(const MeshData& d, Matrix& a, std::vector<Vector>& h) {
  a = Matrix(d.M, d.M);
  h.assign(d.M, Vector(d.N, 0.0));
  for (std::size_t i = 0; i < d.M; ++i)
    for (std::size_t k = 0; k < d.M; ++k) {
      const double q = d.zeta(i, k) / (d.eta[i] * d.w[k]);
      a(i, k) = q * d.alpha_bar[k] * d.eta[k] * d.r[k];
      for (std::size_t n = 0; n < d.N; ++n) h[i][n] += q * d.alpha[k] * d.u[k][n] * d.r[k];
    }
}

}  // namespace

double contraction_bound(const model::Scenario& scn) { return kappa_of(mesh_data(scn, 0.0)); }

double fredholm_residual(const model::Scenario& scn, const std::vector<Vector>& phi) {
  const MeshData d = mesh_data(scn, 0.0);
  double sup = 0.0;
  for (std::size_t i = 0; i < d.M; ++i)
    for (std::size_t n = 0; n < d.N; ++n) {
      double hsum = 0.0, asum = 0.0;
      for (std::size_t k = 0; k < d.M; ++k) {
        hsum += d.zeta(i, k) * d.alpha[k] * d.u[k][n] * d.r[k] / (d.eta[i] * d.w[k]);
        asum += d.zeta(i, k) * d.alpha_bar[k] * d.eta[k] / (d.eta[i] * d.w[k]) * phi[k][n] * d.r[k];
      }
      sup = std::max(sup, std::abs(phi[i][n] - hsum - asum));
    }
  return sup;
}

FredholmSolution fredholm_solve(const model::Scenario& scn, const FredholmOptions& opts) {
  const MeshData d = mesh_data(scn, opts.weight_tol);
  FredholmSolution sol;
  sol.n = d.M;
  for (const auto& p : scn.personalities) sol.p.push_back(p.p);
  sol.kappa = kappa_of(d);
  if (!(sol.kappa < 1.0))
    throw NumericalError("Fredholm contraction fails: kappa = sup alpha_bar eta / w = " + std::to_string(sol.kappa));

  Matrix a;
  std::vector<Vector> h;
  operator_and_source(d, a, h);

  // Column n of phi is the n-th subject component.
  Matrix phi(d.M, d.N), next(d.M, d.N);
  for (std::size_t i = 0; i < d.M; ++i)
    for (std::size_t n = 0; n < d.N; ++n) phi(i, n) = h[i][n];
  bool converged = false;
  for (long it = 1; it <= opts.max_iterations; ++it) {
    Vector col(d.M), out(d.M);
    double change = 0.0;
    for (std::size_t n = 0; n < d.N; ++n) {
      for (std::size_t i = 0; i < d.M; ++i) col[i] = phi(i, n);
      linalg::multiply(a, col, out);
      for (std::size_t i = 0; i < d.M; ++i) {
        next(i, n) = h[i][n] + out[i];
        change = std::max(change, std::abs(next(i, n) - phi(i, n)));
      }
    }
    std::swap(phi, next);
    sol.iterations = it;
    sol.changes.push_back(change);
    if (!std::isfinite(change)) break;
    if (change < opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    // Dense Nystrom system (I - A) phi = h, one right-hand side per component.
    const linalg::LU lu(Matrix::identity(d.M) - a);
    if (lu.singular()) throw NumericalError("Fredholm iteration diverged and I - A is singular", sol.iterations);
    Matrix rhs(d.M, d.N);
    for (std::size_t i = 0; i < d.M; ++i)
      for (std::size_t n = 0; n < d.N; ++n) rhs(i, n) = h[i][n];
    phi = lu.solve(rhs);
    sol.direct_solve = true;
  }

  sol.phi.assign(d.M, Vector(d.N));
  sol.beta.assign(d.M, Vector(d.N));
  sol.f.assign(d.M, Vector(d.N));
  for (std::size_t i = 0; i < d.M; ++i)
    for (std::size_t n = 0; n < d.N; ++n) {
      sol.phi[i][n] = phi(i, n);
      sol.beta[i][n] = d.eta[i] * phi(i, n);
      sol.f[i][n] = (d.alpha_bar[i] * sol.beta[i][n] + d.alpha[i] * d.u[i][n]) / d.w[i];
    }
  sol.residual = fredholm_residual(scn, sol.phi);
  return sol;
}

FredholmSolution fredholm_solve(const model::ContinuousSpec& spec, std::size_t n, const FredholmOptions& opts) {
  return fredholm_solve(model::discretize_personality(spec, n), opts);
}

std::vector<Vector> nystrom_interpolate(const model::ContinuousSpec& spec, const model::Scenario& mesh,
                                        const FredholmSolution& sol, std::span<const double> at) {
  const MeshData d = mesh_data(mesh, 0.0);
  std::vector<Vector> out;
  for (double p : at) {
    double eta = 0.0;
    for (std::size_t k = 0; k < d.M; ++k) eta += spec.kernel(p, mesh.personalities[k].p) * d.r[k];
    if (std::abs(eta) < 1e-300) throw NumericalError("eta vanishes at an interpolation point");
    Vector v(d.N, 0.0);
    for (std::size_t k = 0; k < d.M; ++k) {
      const double q = spec.kernel(p, mesh.personalities[k].p) * d.r[k] / (eta * d.w[k]);
      for (std::size_t n = 0; n < d.N; ++n)
        v[n] += q * (d.alpha[k] * d.u[k][n] + d.alpha_bar[k] * d.eta[k] * sol.phi[k][n]);
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<MeshStudyRow> mesh_refinement_study(const model::ContinuousSpec& spec, std::span<const std::size_t> ns,
                                                const FredholmOptions& opts) {
  std::vector<MeshStudyRow> rows;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    if (k > 0 && ns[k] <= ns[k - 1]) throw ValidationError("n", "mesh sequence must be increasing");
    const std::size_t n = ns[k];
    const model::Scenario coarse = model::discretize_personality(spec, n);
    const model::Scenario fine = model::discretize_personality(spec, 2 * n);
    const FredholmSolution sc = fredholm_solve(coarse, opts);
    const FredholmSolution sf = fredholm_solve(fine, opts);
    const auto interp = nystrom_interpolate(spec, coarse, sc, sf.p);
    MeshStudyRow row;
    row.n = n;
    row.iterations = sc.iterations;
    row.kappa = sc.kappa;
    for (std::size_t i = 0; i < sf.p.size(); ++i)
      row.sup_diff = std::max(row.sup_diff, linalg::max_abs_diff(interp[i], sf.phi[i]));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace opdyn::integral
