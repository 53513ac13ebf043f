#include "meanfield/system.hpp"

namespace opdyn::meanfield {

Vector DiscreteSystem::block(std::span<const double> stacked, std::size_t i) const {
  return Vector(stacked.begin() + static_cast<std::ptrdiff_t>(i * N),
                stacked.begin() + static_cast<std::ptrdiff_t>((i + 1) * N));
}

Vector DiscreteSystem::forcing() const {
  Vector b(M * N);
  for (std::size_t i = 0; i < M; ++i) {
    const Vector cu = C * std::span<const double>(u_stack.data() + i * N, N);
    for (std::size_t n = 0; n < N; ++n) b[i * N + n] = r[i] * alpha[i] * cu[n];
  }
  return b;
}

Matrix DiscreteSystem::xi_blockdiag() const { return linalg::block_diagonal(Xi); }

DiscreteSystem assemble(const model::Scenario& scn) {
  model::validate(scn);
  DiscreteSystem s;
  s.M = scn.personality_count();
  s.N = scn.subjects;
  const std::size_t M = s.M, N = s.N;

  s.C = scn.coupling;
  s.noise_variance = scn.noise_variance;
  s.D = scn.noise_variance * (s.C * s.C.transpose());
  s.zeta = scn.zeta_table();

  s.r.resize(M);
  s.alpha = scn.stubbornness;
  s.alpha_bar.resize(M);
  s.eta.assign(M, 0.0);
  s.w.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    s.r[i] = scn.personalities[i].r;
    s.alpha_bar[i] = 1.0 - s.alpha[i];
  }
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < M; ++j) s.eta[i] += s.zeta(i, j) * s.r[j];
    s.w[i] = s.alpha_bar[i] * s.eta[i] + s.alpha[i];
    s.Gamma.push_back(s.eta[i] * s.C);
    s.Xi.push_back(s.alpha_bar[i] * s.Gamma[i] + s.alpha[i] * s.C);
  }

  s.Zbar = linalg::kron(s.zeta, s.C);
  Vector d0(M * N), d1(M * N), d2(M * N);
  s.u_stack.resize(M * N);
  s.x0_stack.resize(M * N);
  for (std::size_t i = 0; i < M; ++i) {
    const Vector& x0 = model::initial_mean(scn.initial[i]);
    for (std::size_t n = 0; n < N; ++n) {
      d0[i * N + n] = s.r[i];
      d1[i * N + n] = s.r[i] * s.alpha[i];
      d2[i * N + n] = s.r[i] * s.alpha_bar[i];
      s.u_stack[i * N + n] = scn.prejudice[i][n];
      s.x0_stack[i * N + n] = x0[n];
    }
    if (const auto* g = std::get_if<model::GaussianLaw>(&scn.initial[i]))
      s.cov0.push_back(g->cov);
    else
      s.cov0.push_back(Matrix(N, N));
  }
  s.P0 = Matrix::diagonal(d0);
  s.P1 = Matrix::diagonal(d1);
  s.P2 = Matrix::diagonal(d2);

  s.Psi = s.xi_blockdiag();
  for (std::size_t a = 0; a < M * N; ++a)
    for (std::size_t b = 0; b < M * N; ++b) s.Psi(a, b) -= d2[a] * s.Zbar(a, b);
  return s;
}

}  // namespace opdyn::meanfield
