#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "linalg/matrix.hpp"

namespace opdyn::model {

using linalg::Matrix;
using linalg::Vector;

struct Personality {
  double p = 0.0;
  double r = 0.0;
};

/// zeta(p, q) = 1 / (1 + |p - q|^2).
struct ProximityKernel {};

/// Two communities split at p = 0: zeta1 within a community, -zeta2 across.
struct CommunityKernel {
  double zeta1 = 1.0;
  double zeta2 = 0.0;
};

/// Explicit M x M table indexed by personality position.
struct TableKernel {
  Matrix values;
};

/// zeta(p_i, p_j) = left[i] * right[j].
struct ProductFormKernel {
  Vector left;
  Vector right;
};

using InteractionKernel = std::variant<ProximityKernel, CommunityKernel, TableKernel, ProductFormKernel>;

struct DiracLaw {
  Vector x0;
};

struct GaussianLaw {
  Vector mean;
  Matrix cov;
};

using InitialLaw = std::variant<DiracLaw, GaussianLaw>;

const Vector& initial_mean(const InitialLaw& law);

struct Scenario {
  std::size_t subjects = 0;
  std::vector<Personality> personalities;
  Matrix coupling;
  Vector stubbornness;
  std::vector<Vector> prejudice;
  InteractionKernel interaction;
  double noise_variance = 0.0;
  std::vector<InitialLaw> initial;

  std::size_t personality_count() const { return personalities.size(); }
  double zeta(std::size_t i, std::size_t j) const;
  Matrix zeta_table() const;
};

/// Throws ValidationError naming the offending field.
void validate(const Scenario& s);

std::string to_json(const Scenario& s);
Scenario from_json(std::string_view text);
Scenario load_file(const std::string& path);
/// SHA-256 of the canonical serialization, lowercase hex.
std::string digest(const Scenario& s);
std::string sha256_hex(std::string_view bytes);

using Params = std::map<std::string, std::string>;

std::vector<std::string> preset_names();
Scenario build_preset(const std::string& name, const Params& params = {});

/// Returns a copy with one parameter changed. Supported keys: noise_variance,
/// stubbornness, zeta1, zeta2, coupling.<i>.<j>.
Scenario with_parameter(const Scenario& s, const std::string& key, double value);

struct ContinuousSpec {
  double p_min = -1.0;
  double p_max = 1.0;
  std::size_t subjects = 1;
  std::function<double(double)> density;
  std::function<double(double, double)> kernel;
  std::function<double(double)> stubbornness;
  std::function<Vector(double)> prejudice;
  std::function<Vector(double)> initial_mean;
  Matrix coupling;
  double noise_variance = 0.0;
};

/// Equal-width cells, mass by Simpson quadrature of the density over each cell,
/// everything else sampled at the cell midpoints.
Scenario discretize_personality(const ContinuousSpec& spec, std::size_t n);

/// Simpson weights for n (odd) equally spaced nodes on [a, b].
Vector simpson_weights(double a, double b, std::size_t n);

ContinuousSpec uniform_proximity_spec(double alpha, const Matrix& coupling, int prejudice_variant,
                                      double noise_variance);

}  // namespace opdyn::model
