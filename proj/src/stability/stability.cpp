#include "stability/stability.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "json.hpp"

namespace opdyn::stability {

const char* to_string(Classification c) {
  switch (c) {
    case Classification::Stable:
      return "Stable";
    case Classification::TypeI:
      return "TypeI";
    case Classification::TypeII:
      return "TypeII";
  }
  return "?";
}

const char* to_string(Check c) {
  switch (c) {
    case Check::Holds:
      return "holds";
    case Check::Fails:
      return "fails";
    case Check::NotApplicable:
      return "not-applicable";
  }
  return "?";
}

Classification classify_values(double min_real_xi, double min_real_psi, double tol) {
  if (min_real_xi <= tol) return Classification::TypeI;
  if (min_real_psi <= tol) return Classification::TypeII;
  return Classification::Stable;
}

Matrix theta_matrix(const meanfield::DiscreteSystem& sys) {
  Matrix theta(sys.M, sys.M);
  for (std::size_t i = 0; i < sys.M; ++i)
    for (std::size_t j = 0; j < sys.M; ++j)
      theta(i, j) = (i == j ? sys.eta[i] : 0.0) - sys.r[i] * sys.zeta(i, j);
  return theta;
}

StabilityReport classify(const meanfield::DiscreteSystem& sys) {
  StabilityReport rep;
  rep.min_real_Xi = 1e300;
  for (const auto& xi : sys.Xi) rep.min_real_Xi = std::min(rep.min_real_Xi, linalg::spectrum(xi).min_real_part);
  rep.psi_spectrum = linalg::spectrum(sys.Psi);
  rep.min_real_Psi = rep.psi_spectrum.min_real_part;
  rep.classification = classify_values(rep.min_real_Xi, rep.min_real_Psi);

  const bool constant_alpha =
      std::all_of(sys.alpha.begin(), sys.alpha.end(), [&](double a) { return a == sys.alpha.front(); });
  if (constant_alpha) rep.theta_spectrum = linalg::spectrum(theta_matrix(sys));

  const linalg::LU lu(sys.Psi);
  if (!lu.singular()) {
    const Matrix inv = lu.inverse();
    if (inv.all_finite()) rep.psi_inverse_norm = linalg::norm_inf(inv);
  }
  return rep;
}

StabilityReport classify(const model::Scenario& scn) {
  StabilityReport rep = classify(meanfield::assemble(scn));
  rep.sufficient_checks.prop1 = prop1_check(scn);
  rep.sufficient_checks.prop2 = prop2_check(scn);
  return rep;
}

Check prop1_check(const model::Scenario& scn) {
  if (scn.subjects != 1) return Check::NotApplicable;
  const Matrix z = scn.zeta_table();
  for (double v : z.data())
    if (v < 0.0) return Check::Fails;
  return Check::Holds;
}

Check prop2_check(const model::Scenario& scn) {
  if (scn.subjects != 1) return Check::NotApplicable;
  const auto& a = scn.stubbornness;
  if (!std::all_of(a.begin(), a.end(), [&](double x) { return x == a.front(); })) return Check::NotApplicable;
  const Matrix z = scn.zeta_table();
  if (*std::min_element(z.data().begin(), z.data().end()) >= 0.0) return Check::NotApplicable;
  const double alpha = a.front();
  if (alpha >= 1.0) return Check::Holds;
  const double bound = -alpha / (1.0 - alpha);
  const std::size_t m = scn.personality_count();
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      s += z(i, j) * scn.personalities[j].r - std::abs(z(i, j)) * scn.personalities[i].r;
    }
    if (!(s > bound)) return Check::Fails;
  }
  // The row condition only controls Psi; a negative self-interaction can still
  // make some Xi non-Hurwitz, which must not be reported as a pass.
  const auto sys = meanfield::assemble(scn);
  for (double w : sys.w)
    if (!(w * scn.coupling(0, 0) > kMarginTol)) return Check::Fails;
  return Check::Holds;
}

std::vector<ContinuousConditionValue> continuous_condition(const model::ContinuousSpec& spec,
                                                           std::span<const double> p_samples, std::size_t nodes) {
  if (!spec.density || !spec.kernel || !spec.stubbornness)
    throw ValidationError("continuous", "density, kernel and stubbornness are required");
  const linalg::Vector w = model::simpson_weights(spec.p_min, spec.p_max, nodes);
  const double d = static_cast<double>(nodes - 1);
  linalg::Vector q(nodes), rho(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    q[k] = (spec.p_min * (d - static_cast<double>(k)) + spec.p_max * static_cast<double>(k)) / d;
    rho[k] = spec.density(q[k]);
  }
  std::vector<ContinuousConditionValue> out;
  for (double p : p_samples) {
    double i1 = 0.0, i2 = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) {
      const double z = spec.kernel(p, q[k]);
      i1 += w[k] * z * rho[k];
      i2 += w[k] * std::abs(z);
    }
    ContinuousConditionValue v;
    v.p = p;
    v.lhs = i1 - i2 * spec.density(p);
    const double alpha = spec.stubbornness(p);
    v.bound = alpha >= 1.0 ? -HUGE_VAL : -alpha / (1.0 - alpha);
    v.check = v.lhs > v.bound ? Check::Holds : Check::Fails;
    out.push_back(v);
  }
  return out;
}

Example1Result example1_oracle(std::size_t M, double alpha, double zeta1, double zeta2) {
  if (M < 2 || M % 2 != 0) throw ValidationError("M", "must be even and at least 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha", "must lie in (0, 1)");
  const double ab = 1.0 - alpha;
  Example1Result r;
  const double xi = alpha + ab * (zeta1 - zeta2) / 2.0;
  r.eigenvalues.assign(M - 2, xi);
  r.eigenvalues.push_back(alpha);
  r.eigenvalues.push_back(alpha - ab * zeta2);
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end());
  r.classification = classify_values(xi, r.eigenvalues.front());
  r.zeta2_type2 = alpha / ab;
  r.zeta2_type1 = zeta1 + 2.0 * alpha / ab;
  return r;
}

std::string to_json(const StabilityReport& r) {
  using Json = nlohmann::ordered_json;
  auto spectrum_json = [](const Spectrum& s) {
    Json a = Json::array();
    for (auto z : s.eigenvalues) a.push_back(Json::array({z.real(), z.imag()}));
    return a;
  };
  Json j;
  j["classification"] = to_string(r.classification);
  j["min_real_Xi"] = r.min_real_Xi;
  j["min_real_Psi"] = r.min_real_Psi;
  j["psi_eigenvalues"] = spectrum_json(r.psi_spectrum);
  j["theta_eigenvalues"] = r.theta_spectrum ? spectrum_json(*r.theta_spectrum) : Json(nullptr);
  j["sufficient_checks"] = {{"prop1", to_string(r.sufficient_checks.prop1)},
                            {"prop2", to_string(r.sufficient_checks.prop2)},
                            {"continuous", to_string(r.sufficient_checks.continuous)}};
  j["psi_inverse_norm_inf"] = r.psi_inverse_norm ? Json(*r.psi_inverse_norm) : Json(nullptr);
  return j.dump(2);
}

}  // namespace opdyn::stability
