#include "meanfield/fp_residual.hpp"

#include <cmath>

#include "common/error.hpp"

namespace opdyn::meanfield {

ResidualResult fp_residual(const Transient& tr, double t, const std::vector<std::pair<double, double>>& box, double h,
                           double dt) {
  const DiscreteSystem& sys = tr.system();
  const std::size_t N = sys.N, M = sys.M;
  if (box.size() != N) throw ValidationError("box", "one range per subject is required");
  if (!(h > 0.0) || !(dt > 0.0) || t - dt <= 0.0) throw ValidationError("fp_residual", "need h > 0 and 0 < dt < t");

  const GaussianMixtureState before = tr.state(t - dt);
  const GaussianMixtureState now = tr.state(t);
  const GaussianMixtureState after = tr.state(t + dt);
  const Vector gamma = tr.gamma(t);

  std::vector<Gaussian> g0, g1, g2;
  for (std::size_t i = 0; i < M; ++i) {
    g0.emplace_back(before.means[i], before.covariances[i]);
    g1.emplace_back(now.means[i], now.covariances[i]);
    g2.emplace_back(after.means[i], after.covariances[i]);
  }

  std::vector<std::size_t> counts(N);
  std::size_t total = 1;
  for (std::size_t d = 0; d < N; ++d) {
    counts[d] = static_cast<std::size_t>(std::llround((box[d].second - box[d].first) / h)) + 1;
    total *= counts[d];
  }

  ResidualResult res;
  res.points = total;
  Vector x(N), xp(N), drift(N);
  for (std::size_t i = 0; i < M; ++i) {
    const double r = sys.r[i];
    const Matrix& xi = sys.Xi[i];
    const Vector cu = sys.C * std::span<const double>(sys.block(sys.u_stack, i));
    Vector phi(N);
    for (std::size_t n = 0; n < N; ++n) phi[n] = sys.alpha_bar[i] * gamma[i * N + n] + sys.alpha[i] * cu[n];

    auto rho = [&](std::span<const double> at) { return r * g1[i](at); };
    auto flux = [&](std::span<const double> at, std::size_t n) {
      double mu = phi[n];
      for (std::size_t k = 0; k < N; ++k) mu -= xi(n, k) * at[k];
      return mu * rho(at);
    };

    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rest = flat;
      for (std::size_t d = 0; d < N; ++d) {
        const double c = static_cast<double>(counts[d] - 1);
        const std::size_t k = rest % counts[d];
        rest /= counts[d];
        x[d] = c > 0 ? (box[d].first * (c - static_cast<double>(k)) + box[d].second * static_cast<double>(k)) / c
                     : box[d].first;
      }
      const double center = rho(x);
      double lhs = (r * g2[i](x) - r * g0[i](x)) / (2.0 * dt);
      double div = 0.0, diff = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        xp = x;
        xp[n] = x[n] + h;
        const double fp = flux(xp, n), rp = rho(xp);
        xp[n] = x[n] - h;
        const double fm = flux(xp, n), rm = rho(xp);
        div += (fp - fm) / (2.0 * h);
        diff += sys.D(n, n) * (rp - 2.0 * center + rm) / (h * h);
        for (std::size_t m = n + 1; m < N; ++m) {
          if (sys.D(m, n) == 0.0) continue;
          double cross = 0.0;
          for (int sn : {-1, 1})
            for (int sm : {-1, 1}) {
              xp = x;
              xp[n] += sn * h;
              xp[m] += sm * h;
              cross += sn * sm * rho(xp);
            }
          diff += 2.0 * sys.D(m, n) * cross / (4.0 * h * h);
        }
      }
      const double residual = lhs + div - 0.5 * diff;
      res.sup_residual = std::max(res.sup_residual, std::abs(residual));
      res.sup_density = std::max(res.sup_density, center);
    }
  }
  return res;
}

}  // namespace opdyn::meanfield
