#include <cmath>

#include "common/error.hpp"
#include "model/scenario.hpp"

namespace opdyn::model {

Vector simpson_weights(double a, double b, std::size_t n) {
  if (n < 3 || n % 2 == 0) throw ValidationError("quadrature", "Simpson rule needs an odd node count >= 3");
  const double h = (b - a) / static_cast<double>(n - 1);
  Vector w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = (k == 0 || k == n - 1) ? 1.0 : (k % 2 ? 4.0 : 2.0);
  for (double& x : w) x *= h / 3.0;
  return w;
}

Scenario discretize_personality(const ContinuousSpec& spec, std::size_t n) {
  if (n < 2) throw ValidationError("n", "mesh count must be at least 2");
  if (!(spec.p_max > spec.p_min)) throw ValidationError("p_range", "empty personality interval");
  if (!spec.density || !spec.kernel || !spec.stubbornness || !spec.prejudice)
    throw ValidationError("continuous", "density, kernel, stubbornness and prejudice are required");

  const double a = spec.p_min, b = spec.p_max;
  const double dn = static_cast<double>(n);
  // Cell edges and midpoints written as convex combinations so symmetric
  // intervals give exactly mirrored values.
  auto edge = [&](std::size_t k) { return (a * (dn - static_cast<double>(k)) + b * static_cast<double>(k)) / dn; };

  constexpr std::size_t nodes = 65;
  std::vector<Personality> pers(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = edge(i), hi = edge(i + 1);
    const Vector w = simpson_weights(lo, hi, nodes);
    double mass = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) {
      const double x = (lo * static_cast<double>(nodes - 1 - k) + hi * static_cast<double>(k)) /
                       static_cast<double>(nodes - 1);
      const double d = spec.density(x);
      if (!std::isfinite(d) || d < 0.0) throw ValidationError("density", "must be finite and non-negative");
      mass += w[k] * d;
    }
    const double mid = (a * (2.0 * dn - 2.0 * i - 1.0) + b * (2.0 * i + 1.0)) / (2.0 * dn);
    pers[i] = {mid, mass};
    total += mass;
  }
  if (!(std::abs(total - 1.0) <= 1e-6))
    throw ValidationError("density", "does not integrate to 1 over the personality interval (got " +
                                         std::to_string(total) + ")");
  for (auto& p : pers) p.r /= total;

  Scenario s;
  s.subjects = spec.subjects;
  s.personalities = std::move(pers);
  s.coupling = spec.coupling.empty() ? Matrix::identity(spec.subjects) : spec.coupling;
  Matrix table(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = s.personalities[i].p;
    s.stubbornness.push_back(spec.stubbornness(p));
    s.prejudice.push_back(spec.prejudice(p));
    s.initial.push_back(DiracLaw{spec.initial_mean ? spec.initial_mean(p) : Vector(spec.subjects, 0.0)});
    for (std::size_t j = 0; j < n; ++j) table(i, j) = spec.kernel(p, s.personalities[j].p);
  }
  s.interaction = TableKernel{std::move(table)};
  s.noise_variance = spec.noise_variance;
  validate(s);
  return s;
}

}  // namespace opdyn::model
