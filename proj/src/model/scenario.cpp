#include "model/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.hpp"

namespace opdyn::model {

namespace {

bool same_community(double p, double q) { return (p < 0.0) == (q < 0.0); }

void require_finite(const Vector& v, const std::string& field) {
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError(field, "entries must be finite");
}

void require_length(const Vector& v, std::size_t n, const std::string& field) {
  if (v.size() != n)
    throw ValidationError(field, "expected length " + std::to_string(n) + ", got " + std::to_string(v.size()));
  require_finite(v, field);
}

void require_shape(const Matrix& m, std::size_t r, std::size_t c, const std::string& field) {
  if (m.rows() != r || m.cols() != c)
    throw ValidationError(field, "expected " + std::to_string(r) + "x" + std::to_string(c) + " matrix");
  if (!m.all_finite()) throw ValidationError(field, "entries must be finite");
}

}  // namespace

const Vector& initial_mean(const InitialLaw& law) {
  return std::visit(
      [](const auto& l) -> const Vector& {
        if constexpr (std::is_same_v<std::decay_t<decltype(l)>, DiracLaw>)
          return l.x0;
        else
          return l.mean;
      },
      law);
}

double Scenario::zeta(std::size_t i, std::size_t j) const {
  const double p = personalities[i].p;
  const double q = personalities[j].p;
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ProximityKernel>) {
          return 1.0 / (1.0 + (p - q) * (p - q));
        } else if constexpr (std::is_same_v<K, CommunityKernel>) {
          return same_community(p, q) ? k.zeta1 : -k.zeta2;
        } else if constexpr (std::is_same_v<K, TableKernel>) {
          return k.values(i, j);
        } else {
          return k.left[i] * k.right[j];
        }
      },
      interaction);
}

Matrix Scenario::zeta_table() const {
  const std::size_t m = personality_count();
  Matrix z(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) z(i, j) = zeta(i, j);
  return z;
}

void validate(const Scenario& s) {
  const std::size_t n = s.subjects;
  const std::size_t m = s.personality_count();
  if (n < 1) throw ValidationError("subjects", "must be at least 1");
  if (m < 1) throw ValidationError("personalities", "at least one personality is required");

  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& pr = s.personalities[i];
    if (!std::isfinite(pr.p)) throw ValidationError("personalities", "p must be finite");
    if (!std::isfinite(pr.r) || pr.r < 0.0) throw ValidationError("personalities", "r must be a non-negative mass");
    total += pr.r;
    for (std::size_t j = 0; j < i; ++j)
      if (s.personalities[j].p == pr.p) throw ValidationError("personalities", "personality values must be distinct");
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("personalities", "masses must sum to 1 (got " + std::to_string(total) + ")");

  require_shape(s.coupling, n, n, "coupling");

  require_length(s.stubbornness, m, "stubbornness");
  for (double a : s.stubbornness)
    if (!(a > 0.0 && a <= 1.0)) throw ValidationError("stubbornness", "must lie in (0, 1]");

  if (s.prejudice.size() != m) throw ValidationError("prejudice", "one vector per personality is required");
  for (const auto& u : s.prejudice) require_length(u, n, "prejudice");

  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, CommunityKernel>) {
          if (!std::isfinite(k.zeta1) || !std::isfinite(k.zeta2))
            throw ValidationError("interaction", "community parameters must be finite");
        } else if constexpr (std::is_same_v<K, TableKernel>) {
          require_shape(k.values, m, m, "interaction");
        } else if constexpr (std::is_same_v<K, ProductFormKernel>) {
          require_length(k.left, m, "interaction");
          require_length(k.right, m, "interaction");
        }
      },
      s.interaction);

  if (!std::isfinite(s.noise_variance) || s.noise_variance < 0.0)
    throw ValidationError("noise_variance", "must be finite and non-negative");

  if (s.initial.size() != m) throw ValidationError("initial", "one law per personality is required");
  for (const auto& law : s.initial) {
    if (const auto* d = std::get_if<DiracLaw>(&law)) {
      require_length(d->x0, n, "initial");
    } else {
      const auto& g = std::get<GaussianLaw>(law);
      require_length(g.mean, n, "initial");
      require_shape(g.cov, n, n, "initial");
      const double scale = std::max(1.0, linalg::norm_inf(g.cov));
      if (linalg::max_abs_diff(g.cov, g.cov.transpose()) > 1e-12 * scale)
        throw ValidationError("initial", "covariance must be symmetric");
      const auto eig = linalg::symmetric_eigen(g.cov);
      if (eig.values.front() < -1e-12 * scale)
        throw ValidationError("initial", "covariance must be positive semidefinite");
    }
  }
}

Scenario with_parameter(const Scenario& s, const std::string& key, double value) {
  Scenario out = s;
  if (key == "noise_variance" || key == "sigma2") {
    out.noise_variance = value;
  } else if (key == "stubbornness" || key == "alpha") {
    std::fill(out.stubbornness.begin(), out.stubbornness.end(), value);
  } else if (key == "zeta1" || key == "zeta2") {
    auto* k = std::get_if<CommunityKernel>(&out.interaction);
    if (!k) throw ValidationError(key, "only defined for the community interaction kernel");
    (key == "zeta1" ? k->zeta1 : k->zeta2) = value;
  } else if (key == "rho") {
    if (out.subjects < 2) throw ValidationError(key, "requires at least two subjects");
    out.coupling(0, 1) = value;
  } else if (key.rfind("coupling.", 0) == 0) {
    std::size_t i = 0, j = 0;
    const std::string rest = key.substr(9);
    const auto dot = rest.find('.');
    try {
      if (dot == std::string::npos) throw std::invalid_argument("missing index");
      i = std::stoul(rest.substr(0, dot));
      j = std::stoul(rest.substr(dot + 1));
    } catch (const std::exception&) {
      throw ValidationError(key, "expected coupling.<row>.<col>");
    }
    if (i >= out.subjects || j >= out.subjects) throw ValidationError(key, "coupling index out of range");
    out.coupling(i, j) = value;
  } else {
    throw ValidationError(key, "not an overridable numeric field");
  }
  validate(out);
  return out;
}

}  // namespace opdyn::model
