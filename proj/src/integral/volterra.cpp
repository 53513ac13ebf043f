#include <cmath>

#include "common/error.hpp"
#include "integral/integral.hpp"

namespace opdyn::integral {

namespace {

// y = blockdiag(blocks) x for N x N blocks.
void apply_blocks(const std::vector<Matrix>& blocks, std::span<const double> x, std::span<double> y) {
  const std::size_t n = blocks.front().rows();
  for (std::size_t i = 0; i < blocks.size(); ++i) linalg::multiply(blocks[i], x.subspan(i * n, n), y.subspan(i * n, n));
}

}  // namespace

Vector volterra_source(const meanfield::DiscreteSystem& sys, double t) {
  const std::size_t M = sys.M, N = sys.N;
  const Vector p0x0 = sys.P0 * std::span<const double>(sys.x0_stack);
  const Vector b = sys.forcing();
  Vector inner(M * N);
  for (std::size_t i = 0; i < M; ++i) {
    const Vector a = linalg::matexp(sys.Xi[i], -t) * std::span<const double>(p0x0.data() + i * N, N);
    const Vector c = linalg::integrated_decay(sys.Xi[i], t) * std::span<const double>(b.data() + i * N, N);
    for (std::size_t n = 0; n < N; ++n) inner[i * N + n] = a[n] + c[n];
  }
  return sys.Zbar * std::span<const double>(inner);
}

VolterraTrajectory volterra_solve(const meanfield::DiscreteSystem& sys, double horizon, double dt) {
  if (!(dt > 0.0) || !(horizon >= dt)) throw ValidationError("volterra", "need dt > 0 and horizon >= dt");
  const std::size_t steps = static_cast<std::size_t>(std::llround(horizon / dt));
  const std::size_t mn = sys.M * sys.N;

  std::vector<std::vector<Matrix>> kernel(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j)
    for (const auto& xi : sys.Xi) kernel[j].push_back(linalg::matexp(xi, -static_cast<double>(j) * dt));

  const Matrix zp = sys.Zbar * sys.P2;
  const linalg::LU lhs(Matrix::identity(mn) - (0.5 * dt) * zp);
  if (lhs.singular()) throw NumericalError("trapezoidal Volterra step matrix is singular");

  VolterraTrajectory out;
  out.times.reserve(steps + 1);
  out.gamma.reserve(steps + 1);
  std::vector<Vector> p2g;  // P2 gamma_k
  auto p2 = [&](const Vector& g) {
    Vector v(mn);
    for (std::size_t q = 0; q < mn; ++q) v[q] = sys.P2(q, q) * g[q];
    return v;
  };

  out.times.push_back(0.0);
  out.gamma.push_back(volterra_source(sys, 0.0));
  p2g.push_back(p2(out.gamma.back()));

  Vector acc(mn), tmp(mn);
  for (std::size_t n = 1; n <= steps; ++n) {
    std::fill(acc.begin(), acc.end(), 0.0);
    apply_blocks(kernel[n], p2g[0], tmp);
    for (std::size_t q = 0; q < mn; ++q) acc[q] += 0.5 * tmp[q];
    for (std::size_t k = 1; k < n; ++k) {
      apply_blocks(kernel[n - k], p2g[k], tmp);
      for (std::size_t q = 0; q < mn; ++q) acc[q] += tmp[q];
    }
    const double t = static_cast<double>(n) * dt;
    Vector rhs = volterra_source(sys, t);
    const Vector conv = sys.Zbar * std::span<const double>(acc);
    for (std::size_t q = 0; q < mn; ++q) rhs[q] += dt * conv[q];
    out.times.push_back(t);
    out.gamma.push_back(lhs.solve(rhs));
    p2g.push_back(p2(out.gamma.back()));
  }
  return out;
}

}  // namespace opdyn::integral
