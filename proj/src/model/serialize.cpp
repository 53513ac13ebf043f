#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "json.hpp"
#include "model/scenario.hpp"

namespace opdyn::model {

using Json = nlohmann::ordered_json;

namespace {

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json matrix_json(const Matrix& m) {
  Json a = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (double x : m.row(i)) row.push_back(x);
    a.push_back(std::move(row));
  }
  return a;
}

std::string field_path(const std::string& where, const std::string& key) {
  return where == "scenario" ? key : where + "." + key;
}

void require_keys(const Json& obj, const std::set<std::string>& allowed, const std::set<std::string>& required,
                  const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where, "expected a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ValidationError(field_path(where, key), "unknown key");
  for (const auto& key : required)
    if (!obj.contains(key)) throw ValidationError(field_path(where, key), "missing key");
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) throw ValidationError(field, "expected a number");
  return j.get<double>();
}

Vector vector_from(const Json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "expected an array of numbers");
  Vector v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(number(x, field));
  return v;
}

Matrix matrix_from(const Json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ValidationError(field, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<double> data;
  for (std::size_t i = 0; i < rows; ++i) {
    const Vector row = vector_from(j[i], field);
    if (i == 0) cols = row.size();
    if (row.size() != cols || cols == 0) throw ValidationError(field, "rows must be non-empty and of equal length");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(rows, cols, std::move(data));
}

bool is_matrix_json(const Json& j) { return j.is_array() && !j.empty() && j[0].is_array(); }

// A single vector applies to every personality; an array of vectors is per personality.
std::vector<Vector> per_personality_vectors(const Json& j, std::size_t m, const std::string& field) {
  if (is_matrix_json(j)) {
    std::vector<Vector> out;
    for (const auto& row : j) out.push_back(vector_from(row, field));
    return out;
  }
  return std::vector<Vector>(m, vector_from(j, field));
}

std::vector<Matrix> per_personality_matrices(const Json& j, std::size_t m, const std::string& field) {
  if (j.is_array() && !j.empty() && is_matrix_json(j[0])) {
    std::vector<Matrix> out;
    for (const auto& mat : j) out.push_back(matrix_from(mat, field));
    return out;
  }
  return std::vector<Matrix>(m, matrix_from(j, field));
}

std::string line_context(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < std::min(byte, text.size()); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::string to_json(const Scenario& s) {
  Json j;
  j["subjects"] = s.subjects;
  Json pers = Json::array();
  for (const auto& p : s.personalities) pers.push_back({{"p", p.p}, {"r", p.r}});
  j["personalities"] = std::move(pers);
  j["coupling"] = matrix_json(s.coupling);
  const bool constant_alpha = !s.stubbornness.empty() &&
                              std::all_of(s.stubbornness.begin(), s.stubbornness.end(),
                                          [&](double a) { return a == s.stubbornness.front(); });
  if (constant_alpha)
    j["stubbornness"] = s.stubbornness.front();
  else
    j["stubbornness"] = vector_json(s.stubbornness);
  Json pre = Json::array();
  for (const auto& u : s.prejudice) pre.push_back(vector_json(u));
  j["prejudice"] = std::move(pre);

  Json inter;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ProximityKernel>) {
          inter = {{"variant", "proximity"}, {"params", Json::object()}};
        } else if constexpr (std::is_same_v<K, CommunityKernel>) {
          inter = {{"variant", "community"}, {"params", {{"zeta1", k.zeta1}, {"zeta2", k.zeta2}}}};
        } else if constexpr (std::is_same_v<K, TableKernel>) {
          inter = {{"variant", "table"}, {"params", {{"values", matrix_json(k.values)}}}};
        } else {
          inter = {{"variant", "product"},
                   {"params", {{"left", vector_json(k.left)}, {"right", vector_json(k.right)}}}};
        }
      },
      s.interaction);
  j["interaction"] = std::move(inter);
  j["noise_variance"] = s.noise_variance;

  const bool all_dirac = std::all_of(s.initial.begin(), s.initial.end(),
                                     [](const InitialLaw& l) { return std::holds_alternative<DiracLaw>(l); });
  Json init;
  if (all_dirac) {
    Json x0 = Json::array();
    for (const auto& l : s.initial) x0.push_back(vector_json(std::get<DiracLaw>(l).x0));
    init = {{"variant", "dirac"}, {"params", {{"x0", std::move(x0)}}}};
  } else {
    Json mean = Json::array(), cov = Json::array();
    for (const auto& l : s.initial) {
      if (const auto* d = std::get_if<DiracLaw>(&l)) {
        mean.push_back(vector_json(d->x0));
        cov.push_back(matrix_json(Matrix(d->x0.size(), d->x0.size())));
      } else {
        const auto& g = std::get<GaussianLaw>(l);
        mean.push_back(vector_json(g.mean));
        cov.push_back(matrix_json(g.cov));
      }
    }
    init = {{"variant", "gaussian"}, {"params", {{"mean", std::move(mean)}, {"cov", std::move(cov)}}}};
  }
  j["initial"] = std::move(init);
  return j.dump(2) + "\n";
}

Scenario from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ValidationError("scenario", "JSON parse error at " + line_context(text, e.byte) + ": " + e.what());
  }
  const std::set<std::string> keys = {"subjects",   "personalities", "coupling",       "stubbornness",
                                      "prejudice",  "interaction",   "noise_variance", "initial"};
  require_keys(j, keys, keys, "scenario");

  Scenario s;
  if (!j["subjects"].is_number_unsigned()) throw ValidationError("subjects", "expected a positive integer");
  s.subjects = j["subjects"].get<std::size_t>();

  if (!j["personalities"].is_array()) throw ValidationError("personalities", "expected an array");
  for (const auto& p : j["personalities"]) {
    require_keys(p, {"p", "r"}, {"p", "r"}, "personalities");
    s.personalities.push_back({number(p["p"], "personalities"), number(p["r"], "personalities")});
  }
  const std::size_t m = s.personalities.size();

  s.coupling = matrix_from(j["coupling"], "coupling");
  if (j["stubbornness"].is_number())
    s.stubbornness = Vector(m, j["stubbornness"].get<double>());
  else
    s.stubbornness = vector_from(j["stubbornness"], "stubbornness");
  s.prejudice = per_personality_vectors(j["prejudice"], m, "prejudice");

  const Json& inter = j["interaction"];
  require_keys(inter, {"variant", "params"}, {"variant"}, "interaction");
  if (!inter["variant"].is_string()) throw ValidationError("interaction", "variant must be a string");
  const std::string variant = inter["variant"].get<std::string>();
  const Json params = inter.contains("params") ? inter["params"] : Json::object();
  if (variant == "proximity") {
    require_keys(params, {}, {}, "interaction.params");
    s.interaction = ProximityKernel{};
  } else if (variant == "community") {
    require_keys(params, {"zeta1", "zeta2"}, {"zeta1", "zeta2"}, "interaction.params");
    s.interaction = CommunityKernel{number(params["zeta1"], "interaction"), number(params["zeta2"], "interaction")};
  } else if (variant == "table") {
    require_keys(params, {"values"}, {"values"}, "interaction.params");
    s.interaction = TableKernel{matrix_from(params["values"], "interaction")};
  } else if (variant == "product") {
    require_keys(params, {"left", "right"}, {"left", "right"}, "interaction.params");
    s.interaction =
        ProductFormKernel{vector_from(params["left"], "interaction"), vector_from(params["right"], "interaction")};
  } else {
    throw ValidationError("interaction", "unknown variant '" + variant + "'");
  }

  if (!j["noise_variance"].is_number()) throw ValidationError("noise_variance", "expected a number");
  s.noise_variance = j["noise_variance"].get<double>();

  const Json& init = j["initial"];
  require_keys(init, {"variant", "params"}, {"variant", "params"}, "initial");
  const std::string iv = init["variant"].is_string() ? init["variant"].get<std::string>() : "";
  if (iv == "dirac") {
    require_keys(init["params"], {"x0"}, {"x0"}, "initial.params");
    for (auto& x : per_personality_vectors(init["params"]["x0"], m, "initial")) s.initial.push_back(DiracLaw{x});
  } else if (iv == "gaussian") {
    require_keys(init["params"], {"mean", "cov"}, {"mean", "cov"}, "initial.params");
    const auto means = per_personality_vectors(init["params"]["mean"], m, "initial");
    const auto covs = per_personality_matrices(init["params"]["cov"], m, "initial");
    if (means.size() != covs.size()) throw ValidationError("initial", "mean and cov counts differ");
    for (std::size_t i = 0; i < means.size(); ++i) s.initial.push_back(GaussianLaw{means[i], covs[i]});
  } else {
    throw ValidationError("initial", "variant must be 'dirac' or 'gaussian'");
  }

  validate(s);
  return s;
}

Scenario load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("scenario", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    s.push_back(hex[out[k] >> 4]);
    s.push_back(hex[out[k] & 15]);
  }
  return s;
}

std::string digest(const Scenario& s) { return sha256_hex(to_json(s)); }

}  // namespace opdyn::model
