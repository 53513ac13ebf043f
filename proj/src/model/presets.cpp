#include <cmath>
#include <set>

#include "common/error.hpp"
#include "model/scenario.hpp"

namespace opdyn::model {

namespace {

class ParamReader {
 public:
  ParamReader(const std::string& preset, const Params& params) : preset_(preset), params_(params) {}

  double real(const std::string& key, double fallback, const std::string& alias = "") {
    used_.insert(key);
    if (!alias.empty()) used_.insert(alias);
    auto it = params_.find(key);
    if (it == params_.end() && !alias.empty()) it = params_.find(alias);
    if (it == params_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ValidationError(it->first, "expected a real number, got '" + it->second + "'");
    }
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t minimum) {
    const double v = real(key, static_cast<double>(fallback));
    if (v != std::floor(v) || v < static_cast<double>(minimum) || v > 1e6)
      throw ValidationError(key, "expected an integer >= " + std::to_string(minimum));
    return static_cast<std::size_t>(v);
  }

  void finish() const {
    for (const auto& [key, value] : params_)
      if (!used_.count(key)) throw ValidationError(key, "unknown parameter for preset '" + preset_ + "'");
  }

 private:
  std::string preset_;
  const Params& params_;
  std::set<std::string> used_;
};

Vector signed_prejudice(double p, const Vector& positive) {
  Vector u = positive;
  if (p < 0.0)
    for (double& x : u) x = 0.0 - x;
  return u;
}

double alpha_param(ParamReader& r, double fallback) {
  const double a = r.real("alpha", fallback, "stubbornness");
  if (!(a > 0.0 && a <= 1.0)) throw ValidationError("alpha", "stubbornness must lie in (0, 1]");
  return a;
}

double noise_param(ParamReader& r, double fallback) {
  const double s = r.real("noise_variance", fallback, "sigma2");
  if (s < 0.0) throw ValidationError("noise_variance", "must be non-negative");
  return s;
}

// Equal personality masses p_i = (2i - 1)/M - 1 for i = 1..M.
Scenario community_base(std::size_t m, std::size_t n, const Matrix& c, double alpha, double zeta1, double zeta2,
                        const Vector& positive_prejudice, double sigma2) {
  Scenario s;
  s.subjects = n;
  s.coupling = c;
  for (std::size_t i = 0; i < m; ++i) {
    const double p = (static_cast<double>(2 * i + 1) - static_cast<double>(m)) / static_cast<double>(m);
    s.personalities.push_back({p, 1.0 / static_cast<double>(m)});
    s.prejudice.push_back(signed_prejudice(p, positive_prejudice));
    s.initial.push_back(DiracLaw{Vector(n, 0.0)});
  }
  s.stubbornness = Vector(m, alpha);
  s.interaction = CommunityKernel{zeta1, zeta2};
  s.noise_variance = sigma2;
  return s;
}

Scenario proximity_preset(const std::string& name, const Params& params, double rho_default, int prejudice_default) {
  ParamReader r(name, params);
  const std::size_t n = r.count("n", 50, 2);
  const double alpha = alpha_param(r, 0.01);
  const double sigma2 = noise_param(r, 1e-3);
  const double rho = r.real("rho", rho_default);
  const double eps = r.real("epsilon", 1e-10);
  const double variant = r.real("prejudice", prejudice_default);
  r.finish();
  if (variant != 1.0 && variant != 2.0) throw ValidationError("prejudice", "expected 1 or 2");
  const Matrix c{{1.0, rho}, {eps, 1.0}};
  Scenario s = discretize_personality(uniform_proximity_spec(alpha, c, static_cast<int>(variant), sigma2), n);
  s.interaction = ProximityKernel{};
  validate(s);
  return s;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"noise-sweep", "correlation-sweep", "community", "rotational", "example1", "scalar-ou"};
}

ContinuousSpec uniform_proximity_spec(double alpha, const Matrix& coupling, int prejudice_variant,
                                      double noise_variance) {
  ContinuousSpec spec;
  spec.p_min = -1.0;
  spec.p_max = 1.0;
  spec.subjects = coupling.rows();
  spec.density = [](double) { return 0.5; };
  spec.kernel = [](double p, double q) { return 1.0 / (1.0 + (p - q) * (p - q)); };
  spec.stubbornness = [alpha](double) { return alpha; };
  const std::size_t n = coupling.rows();
  Vector positive(n, 0.0);
  positive[prejudice_variant == 1 ? 0 : std::min<std::size_t>(1, n - 1)] = 1.0;
  spec.prejudice = [positive](double p) { return signed_prejudice(p, positive); };
  spec.initial_mean = [n](double) { return Vector(n, 0.0); };
  spec.coupling = coupling;
  spec.noise_variance = noise_variance;
  return spec;
}

Scenario build_preset(const std::string& name, const Params& params) {
  if (name == "noise-sweep") return proximity_preset(name, params, 0.3, 1);
  if (name == "correlation-sweep") return proximity_preset(name, params, 5.0, 2);

  if (name == "community" || name == "rotational") {
    const bool rot = name == "rotational";
    ParamReader r(name, params);
    const std::size_t m = r.count("M", 2, 2);
    if (m % 2 != 0) throw ValidationError("M", "must be even");
    const double alpha = alpha_param(r, 0.01);
    const double sigma2 = noise_param(r, 1e-3);
    const double zeta1 = r.real("zeta1", 1.0);
    const double zeta2 = r.real("zeta2", rot ? -0.1 : 0.004);
    Matrix c;
    Vector positive;
    if (rot) {
      const double scale = r.real("prejudice_scale", 10.0);
      c = Matrix{{0.0, 1.0}, {-1.0, 0.0}};
      positive = {0.0, scale};
    } else {
      c = Matrix{{1.0, r.real("rho", 1.0)}, {r.real("epsilon", 1e-10), 1.0}};
      positive = {0.0, 1.0};
    }
    r.finish();
    Scenario s = community_base(m, 2, c, alpha, zeta1, zeta2, positive, sigma2);
    validate(s);
    return s;
  }

  if (name == "example1") {
    ParamReader r(name, params);
    const std::size_t m = r.count("M", 4, 2);
    if (m % 2 != 0) throw ValidationError("M", "must be even");
    const double alpha = alpha_param(r, 0.01);
    const double sigma2 = noise_param(r, 1e-3);
    const double zeta1 = r.real("zeta1", 1.0);
    const double zeta2 = r.real("zeta2", 0.1);
    r.finish();
    Scenario s = community_base(m, 1, Matrix{{1.0}}, alpha, zeta1, zeta2, Vector{1.0}, sigma2);
    validate(s);
    return s;
  }

  if (name == "scalar-ou") {
    ParamReader r(name, params);
    const double alpha = alpha_param(r, 0.5);
    const double sigma2 = noise_param(r, 0.02);
    const double u = r.real("u", 0.0);
    const double x0 = r.real("x0", 0.0);
    r.finish();
    Scenario s;
    s.subjects = 1;
    s.personalities = {{0.0, 1.0}};
    s.coupling = Matrix{{1.0}};
    s.stubbornness = {alpha};
    s.prejudice = {{u}};
    s.interaction = TableKernel{Matrix{{0.0}}};
    s.noise_variance = sigma2;
    s.initial = {DiracLaw{{x0}}};
    validate(s);
    return s;
  }

  throw ValidationError("preset", "unknown preset '" + name + "'");
}

}  // namespace opdyn::model
