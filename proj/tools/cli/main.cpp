#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "opdyn/opdyn.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Carries a C API status out of deeply nested command code to main().
struct Failure : std::runtime_error {
  Failure(opdyn_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  opdyn_status status;
};

void check(opdyn_status s) {
  if (s == OPDYN_OK) return;
  std::string msg = opdyn_last_error();
  throw Failure(s, msg);
}

struct ScenarioDeleter {
  void operator()(opdyn_scenario* s) const { opdyn_scenario_free(s); }
};
struct MixtureDeleter {
  void operator()(opdyn_mixture* m) const { opdyn_mixture_free(m); }
};
struct RunDeleter {
  void operator()(opdyn_run* r) const { opdyn_run_free(r); }
};
using ScenarioPtr = std::unique_ptr<opdyn_scenario, ScenarioDeleter>;
using MixturePtr = std::unique_ptr<opdyn_mixture, MixtureDeleter>;
using RunPtr = std::unique_ptr<opdyn_run, RunDeleter>;

std::string take(char* s) {
  std::string out = s ? s : "";
  opdyn_string_free(s);
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double parse_real(const std::string& text, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != text.size() || !std::isfinite(v)) throw Failure(OPDYN_ERR_VALIDATION, what + ": not a number: '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_real(part, what));
  if (out.empty()) throw Failure(OPDYN_ERR_VALIDATION, what + ": empty list");
  return out;
}

struct Sweep {
  std::string key;
  std::vector<double> values;
};

// key=a:b:step, inclusive of b up to rounding.
Sweep parse_sweep(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw Failure(OPDYN_ERR_VALIDATION, "sweep: expected key=a:b:step");
  Sweep sw;
  sw.key = s.substr(0, eq);
  const auto parts = split(s.substr(eq + 1), ':');
  if (parts.size() != 3) throw Failure(OPDYN_ERR_VALIDATION, "sweep: expected key=a:b:step");
  const double a = parse_real(parts[0], "sweep"), b = parse_real(parts[1], "sweep"), h = parse_real(parts[2], "sweep");
  if (!(h > 0.0) || b < a) throw Failure(OPDYN_ERR_VALIDATION, "sweep: need a <= b and step > 0");
  const auto n = static_cast<long>(std::floor((b - a) / h + 1e-9));
  for (long k = 0; k <= n; ++k) sw.values.push_back(a + static_cast<double>(k) * h);
  return sw;
}

// "x1=a:b:n,x2=a:b:n"
std::vector<opdyn_axis> parse_grid(const std::string& s, std::size_t dims) {
  std::vector<opdyn_axis> axes(dims, opdyn_axis{-3.0, 3.0, 201});
  std::vector<bool> seen(dims, false);
  for (const auto& item : split(s, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || item[0] != 'x') throw Failure(OPDYN_ERR_VALIDATION, "grid: expected xK=a:b:n");
    const std::size_t k = static_cast<std::size_t>(parse_real(item.substr(1, eq - 1), "grid"));
    const auto parts = split(item.substr(eq + 1), ':');
    if (k < 1 || k > dims || parts.size() != 3) throw Failure(OPDYN_ERR_VALIDATION, "grid: bad axis '" + item + "'");
    const double n = parse_real(parts[2], "grid");
    if (n < 2 || n != std::floor(n)) throw Failure(OPDYN_ERR_VALIDATION, "grid: point count must be an integer >= 2");
    axes[k - 1] = {parse_real(parts[0], "grid"), parse_real(parts[1], "grid"), static_cast<std::size_t>(n)};
    if (!(axes[k - 1].hi > axes[k - 1].lo)) throw Failure(OPDYN_ERR_VALIDATION, "grid: need lo < hi");
    seen[k - 1] = true;
  }
  for (std::size_t k = 0; k < dims; ++k)
    if (!seen[k]) throw Failure(OPDYN_ERR_VALIDATION, "grid: missing axis x" + std::to_string(k + 1));
  return axes;
}

double axis_at(const opdyn_axis& a, std::size_t k) {
  const double d = static_cast<double>(a.n - 1);
  return (a.lo * (d - static_cast<double>(k)) + a.hi * static_cast<double>(k)) / d;
}

std::size_t grid_size(const std::vector<opdyn_axis>& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.n;
  return n;
}

// Product-trapezoid weight of one flat grid index.
double cell_weight(const std::vector<opdyn_axis>& axes, std::size_t flat) {
  double w = 1.0;
  for (const auto& a : axes) {
    const std::size_t k = flat % a.n;
    flat /= a.n;
    const double h = (a.hi - a.lo) / static_cast<double>(a.n - 1);
    w *= (k == 0 || k == a.n - 1) ? 0.5 * h : h;
  }
  return w;
}

class Output {
 public:
  Output(std::string command, const std::string& dir) : command_(std::move(command)), dir_(dir), started_(now_iso()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Failure(OPDYN_ERR_VALIDATION, "out: cannot create '" + dir + "': " + ec.message());
  }

  void param(const std::string& k, const std::string& v) { params_[k] = v; }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    f << content;
    if (!f) throw Failure(OPDYN_ERR_NUMERICAL, "cannot write " + (dir_ / name).string());
    outputs_.push_back(name);
  }

  void finish(const opdyn_scenario* s) {
    std::string digest;
    if (s) {
      char* js = nullptr;
      check(opdyn_scenario_to_json(s, &js));
      write("scenario.json", take(js));
      char* d = nullptr;
      check(opdyn_scenario_digest(s, &d));
      digest = take(d);
    }
    Json m;
    m["command"] = command_;
    m["scenario_digest"] = digest;
    m["parameters"] = params_;
    m["version"] = opdyn_version();
    m["started_at"] = started_;
    m["finished_at"] = now_iso();
    m["outputs"] = outputs_;
    std::ofstream f(dir_ / "manifest.json");
    f << m.dump(2) << "\n";
  }

 private:
  std::string command_;
  fs::path dir_;
  std::string started_;
  Json params_ = Json::object();
  std::vector<std::string> outputs_;
};

struct Common {
  std::string scenario_path;
  std::string preset;
  std::vector<std::string> sets;
  std::string out = "out";
};

ScenarioPtr load_scenario(const Common& c, Output& o) {
  if (c.scenario_path.empty() == c.preset.empty())
    throw Failure(OPDYN_ERR_VALIDATION, "exactly one of --scenario or --preset is required");
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Failure(OPDYN_ERR_VALIDATION, "set: expected key=value, got '" + s + "'");
    kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    o.param("set." + kv.back().first, kv.back().second);
  }
  opdyn_scenario* raw = nullptr;
  // Keys the preset does not know are applied to the built scenario as field overrides.
  std::vector<std::pair<std::string, std::string>> fields;
  if (!c.preset.empty()) {
    o.param("preset", c.preset);
    for (;;) {
      std::vector<const char*> keys, values;
      for (const auto& [k, v] : kv) {
        keys.push_back(k.c_str());
        values.push_back(v.c_str());
      }
      const opdyn_status st = opdyn_scenario_preset(c.preset.c_str(), keys.data(), values.data(), kv.size(), &raw);
      if (st == OPDYN_OK) break;
      const std::string field = opdyn_last_error_detail();
      const auto it = std::find_if(kv.begin(), kv.end(), [&](const auto& p) { return p.first == field; });
      if (st != OPDYN_ERR_VALIDATION || it == kv.end()) check(st);
      fields.push_back(*it);
      kv.erase(it);
    }
  } else {
    o.param("scenario", c.scenario_path);
    check(opdyn_scenario_load(c.scenario_path.c_str(), &raw));
    fields = kv;
  }
  ScenarioPtr s(raw);
  for (const auto& [k, v] : fields) {
    opdyn_scenario* next = nullptr;
    check(opdyn_scenario_with(s.get(), k.c_str(), parse_real(v, k), &next));
    s.reset(next);
  }
  return s;
}

ScenarioPtr with_value(const opdyn_scenario* s, const std::string& key, double v) {
  opdyn_scenario* raw = nullptr;
  check(opdyn_scenario_with(s, key.c_str(), v, &raw));
  return ScenarioPtr(raw);
}

std::string grid_header(std::size_t dims) {
  std::string h;
  for (std::size_t k = 0; k < dims; ++k) h += "x" + std::to_string(k + 1) + ",";
  return h + "density";
}

std::string grid_csv(const std::vector<opdyn_axis>& axes, const std::vector<double>& aggregate,
                     const std::vector<double>* per, std::size_t components) {
  std::string out = grid_header(axes.size());
  if (per)
    for (std::size_t i = 0; i < components; ++i) out += ",p" + std::to_string(i);
  out += "\n";
  const std::size_t total = grid_size(axes);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (const auto& a : axes) {
      out += num(axis_at(a, rest % a.n)) + ",";
      rest /= a.n;
    }
    out += num(aggregate[flat]);
    if (per)
      for (std::size_t i = 0; i < components; ++i) out += "," + num((*per)[i * total + flat]);
    out += "\n";
  }
  return out;
}

std::string moments_header(std::size_t dims) {
  std::string h = "t,personality,weight";
  for (std::size_t k = 0; k < dims; ++k) h += ",mean_" + std::to_string(k + 1);
  for (std::size_t a = 0; a < dims; ++a)
    for (std::size_t b = 0; b < dims; ++b) h += ",cov_" + std::to_string(a + 1) + std::to_string(b + 1);
  return h + "\n";
}

std::string moments_rows(const opdyn_mixture* m, const std::string& tlabel) {
  const std::size_t n = opdyn_mixture_dimension(m);
  std::string out;
  std::vector<double> mean(n), cov(n * n);
  for (std::size_t i = 0; i < opdyn_mixture_components(m); ++i) {
    double w = 0.0;
    check(opdyn_mixture_component(m, i, &w, mean.data(), cov.data()));
    out += tlabel + "," + std::to_string(i) + "," + num(w);
    for (double v : mean) out += "," + num(v);
    for (double v : cov) out += "," + num(v);
    out += "\n";
  }
  return out;
}

// Returns the grid to use plus a warning text when the box does not hold the mixture.
std::vector<opdyn_axis> choose_grid(const opdyn_mixture* m, const std::string& grid_flag, std::string& warning) {
  const std::size_t n = opdyn_mixture_dimension(m);
  const bool user = !grid_flag.empty();
  std::vector<opdyn_axis> requested = user ? parse_grid(grid_flag, n) : std::vector<opdyn_axis>(n, {-3.0, 3.0, 201});
  std::vector<opdyn_axis> cover(n);
  int expanded = 0;
  check(opdyn_mixture_cover(m, requested.data(), 5.0, cover.data(), &expanded));
  warning.clear();
  if (!expanded) return requested;
  if (user) {
    warning = "grid does not cover every mean +/- 5 standard deviations";
    return requested;
  }
  warning = "default grid expanded to cover every mean +/- 5 standard deviations";
  return cover;
}

// File-name label: short, but distinct for any sensible time or sweep step.
std::string tag(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  std::string s = buf;
  for (char& c : s)
    if (c == '+') c = 'p';
  return s;
}

Json parse_json(const std::string& s) { return Json::parse(s); }

// ---------------------------------------------------------------------------

int cmd_stability(const Common& c, const std::string& sweep) {
  Output o("stability", c.out);
  auto s = load_scenario(c, o);
  opdyn_classification cls{};
  char* rep = nullptr;
  check(opdyn_stability(s.get(), &cls, &rep));
  const Json report = parse_json(take(rep));
  o.write("stability.json", report.dump(2) + "\n");
  std::cout << "classification: " << report["classification"].get<std::string>() << "\n";
  if (!sweep.empty()) {
    const Sweep sw = parse_sweep(sweep);
    o.param("sweep", sweep);
    std::string csv = sw.key + ",classification,min_real_Xi,min_real_Psi,prop1,prop2\n";
    std::string prev;
    for (double v : sw.values) {
      auto sv = with_value(s.get(), sw.key, v);
      char* r = nullptr;
      check(opdyn_stability(sv.get(), nullptr, &r));
      const Json j = parse_json(take(r));
      const std::string now = j["classification"];
      csv += num(v) + "," + now + "," + num(j["min_real_Xi"].get<double>()) + "," +
             num(j["min_real_Psi"].get<double>()) + "," + j["sufficient_checks"]["prop1"].get<std::string>() + "," +
             j["sufficient_checks"]["prop2"].get<std::string>() + "\n";
      if (!prev.empty() && now != prev) std::cout << "transition " << prev << " -> " << now << " at " << sw.key << " = " << num(v) << "\n";
      prev = now;
    }
    o.write("stability_sweep.csv", csv);
  }
  o.finish(s.get());
  return 0;
}

int cmd_transient(const Common& c, const std::string& times, const std::string& grid, bool per) {
  Output o("transient", c.out);
  auto s = load_scenario(c, o);
  const auto ts = parse_list(times, "times");
  o.param("times", times);
  if (!grid.empty()) o.param("grid", grid);
  std::string moments = moments_header(opdyn_scenario_subjects(s.get()));
  std::string warnings = "t,warning\n";
  bool warned = false;
  for (double t : ts) {
    opdyn_mixture* raw = nullptr;
    check(opdyn_transient(s.get(), t, &raw));
    MixturePtr m(raw);
    std::string warning;
    const auto axes = choose_grid(m.get(), grid, warning);
    if (!warning.empty()) {
      warnings += num(t) + "," + warning + "\n";
      warned = true;
    }
    const std::size_t total = grid_size(axes), mcount = opdyn_mixture_components(m.get());
    std::vector<double> agg(total), pp(per ? mcount * total : 0);
    check(opdyn_mixture_grid(m.get(), axes.data(), agg.data(), per ? pp.data() : nullptr));
    o.write("density_t=" + tag(t) + ".csv", grid_csv(axes, agg, per ? &pp : nullptr, mcount));
    moments += moments_rows(m.get(), num(t));
  }
  o.write("moments.csv", moments);
  if (warned) o.write("warnings.csv", warnings);
  o.finish(s.get());
  return 0;
}

int steady_one(Output& o, const opdyn_scenario* s, const std::string& grid, bool per, const std::string& suffix,
               std::string& moments, std::string& warnings, bool& warned) {
  opdyn_mixture* raw = nullptr;
  char* js = nullptr;
  const opdyn_status st = opdyn_steady(s, &raw, &js);
  if (st == OPDYN_ERR_INSTABILITY) {
    const std::string why = opdyn_last_error(), report = opdyn_last_error_detail();
    Json j;
    j["refused"] = why;
    j["stability"] = report.empty() ? Json() : parse_json(report);
    o.write("steady" + suffix + ".json", j.dump(2) + "\n");
    throw Failure(st, why);
  }
  check(st);
  MixturePtr m(raw);
  o.write("steady" + suffix + ".json", take(js));
  std::string warning;
  const auto axes = choose_grid(m.get(), grid, warning);
  if (!warning.empty()) {
    warnings += (suffix.empty() ? std::string("steady") : suffix.substr(1)) + "," + warning + "\n";
    warned = true;
  }
  const std::size_t total = grid_size(axes), mcount = opdyn_mixture_components(m.get());
  std::vector<double> agg(total), pp(per ? mcount * total : 0);
  check(opdyn_mixture_grid(m.get(), axes.data(), agg.data(), per ? pp.data() : nullptr));
  o.write("density_steady" + suffix + ".csv", grid_csv(axes, agg, per ? &pp : nullptr, mcount));
  moments += moments_rows(m.get(), suffix.empty() ? "inf" : suffix.substr(1));
  return 0;
}

int cmd_steady(const Common& c, const std::string& grid, bool per, const std::string& sweep) {
  Output o("steady", c.out);
  auto s = load_scenario(c, o);
  if (!grid.empty()) o.param("grid", grid);
  std::string moments = moments_header(opdyn_scenario_subjects(s.get()));
  std::string warnings = "case,warning\n";
  bool warned = false;
  int rc = 0;
  try {
    if (sweep.empty()) {
      steady_one(o, s.get(), grid, per, "", moments, warnings, warned);
    } else {
      o.param("sweep", sweep);
      moments.replace(0, 1, "case");
      const Sweep sw = parse_sweep(sweep);
      for (double v : sw.values) {
        auto sv = with_value(s.get(), sw.key, v);
        steady_one(o, sv.get(), grid, per, "_" + sw.key + "=" + tag(v), moments, warnings, warned);
      }
    }
  } catch (const Failure& f) {
    if (f.status != OPDYN_ERR_INSTABILITY) throw;
    std::cerr << "refused: " << f.what() << "\n";
    rc = OPDYN_ERR_INSTABILITY;
  }
  o.write("moments.csv", moments);
  if (warned) o.write("warnings.csv", warnings);
  o.finish(s.get());
  return rc;
}

struct SimFlags {
  std::size_t agents = 500;
  double dt = 1e-2;
  double horizon = -1.0;
  std::uint64_t seed = 1;
  std::string times;
};

RunPtr run_simulation(const opdyn_scenario* s, const SimFlags& f, std::vector<double>& ts, Output& o) {
  ts = f.times.empty() ? std::vector<double>{} : parse_list(f.times, "times");
  double horizon = f.horizon;
  if (horizon < 0.0) {
    if (ts.empty()) throw Failure(OPDYN_ERR_VALIDATION, "horizon: give --horizon or --times");
    horizon = *std::max_element(ts.begin(), ts.end());
  }
  if (ts.empty()) ts.push_back(horizon);
  o.param("agents", std::to_string(f.agents));
  o.param("dt", num(f.dt));
  o.param("horizon", num(horizon));
  o.param("seed", std::to_string(f.seed));
  o.param("times", f.times.empty() ? num(horizon) : f.times);
  opdyn_run* raw = nullptr;
  check(opdyn_simulate(s, f.agents, f.dt, horizon, f.seed, ts.data(), ts.size(), &raw));
  return RunPtr(raw);
}

int cmd_simulate(const Common& c, const SimFlags& f) {
  Output o("simulate", c.out);
  auto s = load_scenario(c, o);
  std::vector<double> ts;
  auto run = run_simulation(s.get(), f, ts, o);
  const std::size_t n = opdyn_scenario_subjects(s.get()), mcount = opdyn_scenario_personalities(s.get());
  std::string moments = "t,personality,count";
  for (std::size_t k = 0; k < n; ++k) moments += ",mean_" + std::to_string(k + 1);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) moments += ",cov_" + std::to_string(a + 1) + std::to_string(b + 1);
  moments += "\n";
  std::vector<double> x(n), cov(n * n);
  for (std::size_t k = 0; k < opdyn_run_snapshots(run.get()); ++k) {
    double t = 0.0;
    std::size_t agents = 0;
    check(opdyn_run_snapshot_info(run.get(), k, &t, nullptr, &agents));
    std::string csv = "agent,personality";
    for (std::size_t d = 0; d < n; ++d) csv += ",x" + std::to_string(d + 1);
    csv += "\n";
    for (std::size_t a = 0; a < agents; ++a) {
      std::size_t p = 0;
      check(opdyn_run_agent(run.get(), k, a, &p, x.data()));
      csv += std::to_string(a) + "," + std::to_string(p);
      for (double v : x) csv += "," + num(v);
      csv += "\n";
    }
    o.write("snapshot_t=" + tag(ts[k]) + ".csv", csv);
    for (std::size_t p = 0; p < mcount; ++p) {
      std::size_t cnt = 0;
      check(opdyn_run_moments(run.get(), k, p, &cnt, x.data(), cov.data()));
      moments += num(t) + "," + std::to_string(p) + "," + std::to_string(cnt);
      for (double v : x) moments += "," + num(v);
      for (double v : cov) moments += "," + num(v);
      moments += "\n";
    }
  }
  o.write("moments.csv", moments);
  o.finish(s.get());
  return 0;
}

int cmd_compare(const Common& c, SimFlags f, bool steady, const std::string& grid, double bandwidth) {
  Output o("compare", c.out);
  auto s = load_scenario(c, o);
  if (f.horizon < 0.0 && f.times.empty()) f.horizon = 20.0;
  std::vector<double> ts;
  auto run = run_simulation(s.get(), f, ts, o);
  const std::size_t last = opdyn_run_snapshots(run.get()) - 1;
  double t = 0.0;
  std::size_t agents = 0;
  check(opdyn_run_snapshot_info(run.get(), last, &t, nullptr, &agents));

  opdyn_mixture* raw = nullptr;
  if (steady)
    check(opdyn_steady(s.get(), &raw, nullptr));
  else
    check(opdyn_transient(s.get(), t, &raw));
  MixturePtr m(raw);
  o.param("against", steady ? "steady" : "transient");

  const std::size_t n = opdyn_mixture_dimension(m.get()), mcount = opdyn_mixture_components(m.get());
  Json rows = Json::array();
  std::vector<double> mf_mean(n), mf_cov(n * n), em_mean(n), em_cov(n * n);
  for (std::size_t i = 0; i < mcount; ++i) {
    double w = 0.0;
    std::size_t cnt = 0;
    check(opdyn_mixture_component(m.get(), i, &w, mf_mean.data(), mf_cov.data()));
    check(opdyn_run_moments(run.get(), last, i, &cnt, em_mean.data(), em_cov.data()));
    double dm = 0.0, dc = 0.0;
    for (std::size_t k = 0; k < n; ++k) dm = std::max(dm, std::abs(mf_mean[k] - em_mean[k]));
    for (std::size_t k = 0; k < n * n; ++k) dc += (mf_cov[k] - em_cov[k]) * (mf_cov[k] - em_cov[k]);
    rows.push_back({{"personality", i},
                    {"weight", w},
                    {"agents", cnt},
                    {"mean_field_mean", mf_mean},
                    {"empirical_mean", em_mean},
                    {"mean_delta_inf", dm},
                    {"mean_field_cov", mf_cov},
                    {"empirical_cov", em_cov},
                    {"cov_delta_frobenius", std::sqrt(dc)}});
  }

  // Scott's rule on the within-personality spread; the pooled sample is multimodal.
  if (!(bandwidth > 0.0)) {
    double var = 0.0, used = 0.0;
    for (std::size_t i = 0; i < mcount; ++i) {
      std::size_t cnt = 0;
      check(opdyn_run_moments(run.get(), last, i, &cnt, em_mean.data(), em_cov.data()));
      if (cnt < 2) continue;
      for (std::size_t k = 0; k < n; ++k) var += static_cast<double>(cnt) * em_cov[k * n + k] / static_cast<double>(n);
      used += static_cast<double>(cnt);
    }
    const double sd = used > 0.0 ? std::sqrt(var / used) : 0.0;
    bandwidth = std::max(sd, 1e-6) * std::pow(static_cast<double>(agents), -1.0 / (static_cast<double>(n) + 4.0));
  }
  // A zero-noise mixture is a set of point masses, which no grid resolves.
  bool degenerate = false;
  for (std::size_t i = 0; i < mcount; ++i) {
    check(opdyn_mixture_component(m.get(), i, nullptr, nullptr, mf_cov.data()));
    double tr = 0.0;
    for (std::size_t k = 0; k < n; ++k) tr += mf_cov[k * n + k];
    degenerate = degenerate || tr < 1e-14;
  }
  std::string warning;
  Json l1 = nullptr;
  if (degenerate) {
    warning = "degenerate covariance: density comparison skipped";
  } else {
    const auto axes = choose_grid(m.get(), grid, warning);
    const std::size_t total = grid_size(axes);
    std::vector<double> mf(total), kde(total);
    check(opdyn_mixture_grid(m.get(), axes.data(), mf.data(), nullptr));
    check(opdyn_run_kde(run.get(), last, axes.data(), bandwidth, kde.data()));
    double sum = 0.0;
    for (std::size_t k = 0; k < total; ++k) sum += cell_weight(axes, k) * std::abs(mf[k] - kde[k]);
    l1 = sum;
  }

  Json j;
  j["time"] = t;
  j["against"] = steady ? "steady" : "transient";
  j["agents"] = agents;
  j["bandwidth"] = bandwidth;
  j["density_l1"] = l1;
  j["personalities"] = rows;
  if (!warning.empty()) j["warning"] = warning;
  o.write("compare.json", j.dump(2) + "\n");
  if (l1.is_null())
    std::cout << warning << "\n";
  else
    std::cout << "density L1 distance: " << num(l1.get<double>()) << "\n";
  o.finish(s.get());
  return 0;
}

int cmd_fredholm(const Common& c, const std::string& mesh, int variant) {
  Output o("fredholm", c.out);
  auto s = load_scenario(c, o);
  char* js = nullptr;
  check(opdyn_fredholm(s.get(), &js));
  const std::string sol = take(js);
  o.write("fredholm.json", sol);
  const Json j = parse_json(sol);
  std::cout << "kappa " << num(j["kappa"].get<double>()) << ", iterations " << j["iterations"].get<long>()
            << ", residual " << num(j["residual"].get<double>()) << "\n";
  if (!mesh.empty()) {
    o.param("mesh_study", mesh);
    o.param("prejudice_variant", std::to_string(variant));
    char* sj = nullptr;
    check(opdyn_scenario_to_json(s.get(), &sj));
    const Json scn = parse_json(take(sj));
    if (!scn["stubbornness"].is_number())
      throw Failure(OPDYN_ERR_VALIDATION, "mesh study: stubbornness must be constant");
    if (scn["interaction"]["variant"] != "proximity")
      throw Failure(OPDYN_ERR_VALIDATION, "mesh study: requires the proximity kernel");
    std::vector<double> coupling;
    for (const auto& row : scn["coupling"])
      for (const auto& v : row) coupling.push_back(v.get<double>());
    std::vector<std::size_t> ns;
    for (double v : parse_list(mesh, "mesh_study")) {
      if (v < 1 || v != std::floor(v)) throw Failure(OPDYN_ERR_VALIDATION, "mesh study: sizes must be positive integers");
      ns.push_back(static_cast<std::size_t>(v));
    }
    char* mj = nullptr;
    check(opdyn_mesh_study_proximity(scn["stubbornness"].get<double>(), coupling.data(), scn["subjects"].get<std::size_t>(),
                                     variant, ns.data(), ns.size(), &mj));
    const Json rows = parse_json(take(mj));
    std::string csv = "n,sup_diff,iterations,kappa\n";
    for (const auto& r : rows)
      csv += std::to_string(r["n"].get<std::size_t>()) + "," + num(r["sup_diff"].get<double>()) + "," +
             std::to_string(r["iterations"].get<long>()) + "," + num(r["kappa"].get<double>()) + "\n";
    o.write("mesh_study.csv", csv);
  }
  o.finish(s.get());
  return 0;
}

int cmd_presets(const std::string& out, const std::string& show, const std::vector<std::string>& sets) {
  if (!show.empty()) {
    std::vector<std::string> k, v;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Failure(OPDYN_ERR_VALIDATION, "set: expected key=value");
      k.push_back(s.substr(0, eq));
      v.push_back(s.substr(eq + 1));
    }
    std::vector<const char*> kp, vp;
    for (std::size_t i = 0; i < k.size(); ++i) {
      kp.push_back(k[i].c_str());
      vp.push_back(v[i].c_str());
    }
    opdyn_scenario* raw = nullptr;
    check(opdyn_scenario_preset(show.c_str(), kp.data(), vp.data(), k.size(), &raw));
    ScenarioPtr s(raw);
    char* js = nullptr;
    check(opdyn_scenario_to_json(s.get(), &js));
    const std::string text = take(js);
    if (out.empty()) {
      std::cout << text;
    } else {
      Output o("presets", out);
      o.param("preset", show);
      for (std::size_t i = 0; i < k.size(); ++i) o.param("set." + k[i], v[i]);
      o.finish(s.get());
    }
    return 0;
  }
  for (std::size_t i = 0; i < opdyn_preset_count(); ++i) std::cout << opdyn_preset_name(i) << "\n";
  return 0;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--scenario", c.scenario_path, "scenario JSON file");
  app->add_option("--preset", c.preset, "built-in preset name");
  app->add_option("--set", c.sets, "override key=value (preset parameter, or numeric scenario field)")->take_all();
  app->add_option("--out", c.out, "output directory")->capture_default_str();
}

void add_sim(CLI::App* app, SimFlags& f) {
  app->add_option("--agents,-U", f.agents, "number of agents")->capture_default_str();
  app->add_option("--dt", f.dt, "Euler-Maruyama step")->capture_default_str();
  app->add_option("--horizon,-T", f.horizon, "final time");
  app->add_option("--seed", f.seed, "random seed")->capture_default_str();
  app->add_option("--times", f.times, "snapshot times t1,t2,...");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opinion dynamics with personalities: mean-field analysis and agent simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(opdyn_version()));

  Common common;
  std::string sweep, times, grid, mesh, show;
  bool per = false, steady = false;
  int variant = 1;
  double bandwidth = 0.0;
  SimFlags sim;

  auto* stab = app.add_subcommand("stability", "classify the mean-field system");
  add_common(stab, common);
  stab->add_option("--sweep", sweep, "key=a:b:step");

  auto* tr = app.add_subcommand("transient", "density grids and moments at given times");
  add_common(tr, common);
  tr->add_option("--times", times, "t1,t2,...")->required();
  tr->add_option("--grid", grid, "x1=a:b:n,x2=a:b:n");
  tr->add_flag("--per-personality", per, "add one density column per personality");

  auto* st = app.add_subcommand("steady", "stationary density and moments");
  add_common(st, common);
  st->add_option("--grid", grid, "x1=a:b:n,x2=a:b:n");
  st->add_flag("--per-personality", per, "add one density column per personality");
  st->add_option("--sweep", sweep, "key=a:b:step");

  auto* simc = app.add_subcommand("simulate", "finite-population agent simulation");
  add_common(simc, common);
  add_sim(simc, sim);

  auto* cmp = app.add_subcommand("compare", "agent simulation against the mean-field solution");
  add_common(cmp, common);
  add_sim(cmp, sim);
  cmp->add_flag("--steady", steady, "compare with the stationary solution instead of the transient");
  cmp->add_option("--grid", grid, "x1=a:b:n,x2=a:b:n");
  cmp->add_option("--bandwidth", bandwidth, "kernel density bandwidth (default: Scott's rule)");

  auto* fr = app.add_subcommand("fredholm", "steady mean field from the integral equation");
  add_common(fr, common);
  fr->add_option("--mesh-study", mesh, "n1,n2,... mesh sizes for the refinement study");
  fr->add_option("--prejudice-variant", variant, "prejudice direction of the proximity law (1 or 2)")
      ->capture_default_str();

  auto* pr = app.add_subcommand("presets", "list presets, or print one with --show");
  std::string preset_out;
  pr->add_option("--show", show, "preset to print");
  pr->add_option("--set", common.sets, "preset parameter key=value")->take_all();
  pr->add_option("--out", preset_out, "write scenario.json and manifest.json here instead of printing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : OPDYN_ERR_VALIDATION;
  }

  try {
    if (stab->parsed()) return cmd_stability(common, sweep);
    if (tr->parsed()) return cmd_transient(common, times, grid, per);
    if (st->parsed()) return cmd_steady(common, grid, per, sweep);
    if (simc->parsed()) return cmd_simulate(common, sim);
    if (cmp->parsed()) return cmd_compare(common, sim, steady, grid, bandwidth);
    if (fr->parsed()) return cmd_fredholm(common, mesh, variant);
    if (pr->parsed()) return cmd_presets(preset_out, show, common.sets);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.what() << "\n";
    const std::string detail = opdyn_last_error_detail();
    if (f.status == OPDYN_ERR_INSTABILITY && !detail.empty()) std::cerr << detail << "\n";
    return f.status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return OPDYN_ERR_INTERNAL;
  }
  return 0;
}
