#include "opdyn/opdyn.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "abm/abm.hpp"
#include "common/error.hpp"
#include "integral/integral.hpp"
#include "meanfield/density.hpp"
#include "meanfield/steady.hpp"
#include "meanfield/transient.hpp"
#include "model/scenario.hpp"
#include "stability/stability.hpp"

using namespace opdyn;
using Json = nlohmann::ordered_json;

struct opdyn_scenario {
  model::Scenario scn;
};

struct opdyn_mixture {
  meanfield::GaussianMixtureState state;
};

struct opdyn_run {
  std::vector<abm::Snapshot> snaps;
};

namespace {

struct LastError {
  std::string message;
  std::string detail;
  long iterations = -1;
};

thread_local LastError last_error;

opdyn_status fail(opdyn_status code, const std::string& msg, std::string detail = {}, long iterations = -1) {
  last_error = {msg, std::move(detail), iterations};
  return code;
}

template <class F>
opdyn_status guarded(F&& f) {
  try {
    last_error = {};
    f();
    return OPDYN_OK;
  } catch (const InstabilityError& e) {
    return fail(OPDYN_ERR_INSTABILITY, e.what(), e.report_json());
  } catch (const ValidationError& e) {
    return fail(OPDYN_ERR_VALIDATION, e.what(), e.field());
  } catch (const NumericalError& e) {
    return fail(OPDYN_ERR_NUMERICAL, e.what(), {}, e.iterations());
  } catch (const std::bad_alloc&) {
    return fail(OPDYN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(OPDYN_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* name) {
  if (!p) throw ValidationError(name, "null pointer");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

double* dup_buffer(const std::vector<double>& v) {
  double* out = static_cast<double*>(std::malloc(std::max<std::size_t>(1, v.size()) * sizeof(double)));
  if (!out) throw std::bad_alloc();
  std::copy(v.begin(), v.end(), out);
  return out;
}

Json to_json(const linalg::Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

std::vector<meanfield::Axis> axes_of(const opdyn_axis* axes, std::size_t n) {
  require(axes, "axes");
  std::vector<meanfield::Axis> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (axes[k].n < 2 || !(axes[k].hi > axes[k].lo)) throw ValidationError("grid", "each axis needs lo < hi and n >= 2");
    out.push_back({axes[k].lo, axes[k].hi, axes[k].n});
  }
  return out;
}

const abm::Snapshot& snapshot_at(const opdyn_run* r, std::size_t k) {
  require(r, "run");
  if (k >= r->snaps.size()) throw ValidationError("snapshot", "index out of range");
  return r->snaps[k];
}

}  // namespace

extern "C" {

const char* opdyn_version(void) { return OPDYN_VERSION; }
const char* opdyn_last_error(void) { return last_error.message.c_str(); }
const char* opdyn_last_error_detail(void) { return last_error.detail.c_str(); }
long opdyn_last_error_iterations(void) { return last_error.iterations; }
void opdyn_string_free(char* s) { std::free(s); }
void opdyn_buffer_free(double* p) { std::free(p); }

size_t opdyn_preset_count(void) { return model::preset_names().size(); }

const char* opdyn_preset_name(size_t index) {
  static const std::vector<std::string> names = model::preset_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

opdyn_status opdyn_scenario_load(const char* path, opdyn_scenario** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new opdyn_scenario{model::load_file(path)};
  });
}

opdyn_status opdyn_scenario_parse(const char* json, opdyn_scenario** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new opdyn_scenario{model::from_json(json)};
  });
}

opdyn_status opdyn_scenario_preset(const char* name, const char* const* keys, const char* const* values, size_t count,
                                   opdyn_scenario** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    model::Params params;
    for (std::size_t k = 0; k < count; ++k) {
      require(keys[k], "keys");
      require(values[k], "values");
      params[keys[k]] = values[k];
    }
    *out = new opdyn_scenario{model::build_preset(name, params)};
  });
}

opdyn_status opdyn_scenario_with(const opdyn_scenario* s, const char* key, double value, opdyn_scenario** out) {
  return guarded([&] {
    require(s, "scenario");
    require(key, "key");
    require(out, "out");
    *out = new opdyn_scenario{model::with_parameter(s->scn, key, value)};
  });
}

opdyn_status opdyn_scenario_to_json(const opdyn_scenario* s, char** out) {
  return guarded([&] {
    require(s, "scenario");
    require(out, "out");
    *out = dup_string(model::to_json(s->scn));
  });
}

opdyn_status opdyn_scenario_digest(const opdyn_scenario* s, char** out) {
  return guarded([&] {
    require(s, "scenario");
    require(out, "out");
    *out = dup_string(model::digest(s->scn));
  });
}

size_t opdyn_scenario_subjects(const opdyn_scenario* s) { return s ? s->scn.subjects : 0; }
size_t opdyn_scenario_personalities(const opdyn_scenario* s) { return s ? s->scn.personality_count() : 0; }
void opdyn_scenario_free(opdyn_scenario* s) { delete s; }

opdyn_status opdyn_stability(const opdyn_scenario* s, opdyn_classification* cls, char** report_json) {
  return guarded([&] {
    require(s, "scenario");
    const auto rep = stability::classify(s->scn);
    if (cls) *cls = static_cast<opdyn_classification>(rep.classification);
    if (report_json) *report_json = dup_string(stability::to_json(rep));
  });
}

opdyn_status opdyn_transient(const opdyn_scenario* s, double t, opdyn_mixture** out) {
  return guarded([&] {
    require(s, "scenario");
    require(out, "out");
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("time", "must be finite and non-negative");
    const meanfield::Transient tr(meanfield::assemble(s->scn));
    *out = new opdyn_mixture{tr.state(t)};
  });
}

opdyn_status opdyn_steady(const opdyn_scenario* s, opdyn_mixture** out, char** steady_json) {
  return guarded([&] {
    require(s, "scenario");
    require(out, "out");
    const auto sys = meanfield::assemble(s->scn);
    const auto ss = meanfield::steady_state(sys, s->scn);
    if (steady_json) {
      Json j;
      j["f"] = ss.f;
      Json w = Json::array();
      for (const auto& m : ss.W) w.push_back(to_json(m));
      j["W"] = w;
      j["beta"] = ss.beta;
      j["eta"] = ss.eta;
      j["w"] = ss.w;
      j["gamma_inf"] = ss.gamma_inf;
      *steady_json = dup_string(j.dump(2) + "\n");
    }
    *out = new opdyn_mixture{meanfield::steady_mixture(sys, ss)};
  });
}

double opdyn_mixture_time(const opdyn_mixture* m) { return m ? m->state.t : 0.0; }
size_t opdyn_mixture_components(const opdyn_mixture* m) { return m ? m->state.weights.size() : 0; }
size_t opdyn_mixture_dimension(const opdyn_mixture* m) {
  return m && !m->state.means.empty() ? m->state.means.front().size() : 0;
}

opdyn_status opdyn_mixture_component(const opdyn_mixture* m, size_t i, double* weight, double* mean, double* cov) {
  return guarded([&] {
    require(m, "mixture");
    if (i >= m->state.weights.size()) throw ValidationError("personality", "index out of range");
    if (weight) *weight = m->state.weights[i];
    if (mean) std::copy(m->state.means[i].begin(), m->state.means[i].end(), mean);
    if (cov) std::copy(m->state.covariances[i].data().begin(), m->state.covariances[i].data().end(), cov);
  });
}

opdyn_status opdyn_mixture_cover(const opdyn_mixture* m, const opdyn_axis* requested, double sigmas, opdyn_axis* out,
                                 int* expanded) {
  return guarded([&] {
    require(m, "mixture");
    require(out, "out");
    const std::size_t n = opdyn_mixture_dimension(m);
    bool ex = false;
    const auto axes = meanfield::covering_axes(m->state, axes_of(requested, n), sigmas, ex);
    for (std::size_t k = 0; k < n; ++k) out[k] = {axes[k].lo, axes[k].hi, axes[k].n};
    if (expanded) *expanded = ex ? 1 : 0;
  });
}

opdyn_status opdyn_mixture_grid(const opdyn_mixture* m, const opdyn_axis* axes, double* aggregate,
                                double* per_personality) {
  return guarded([&] {
    require(m, "mixture");
    const auto g = meanfield::density_grid(m->state, axes_of(axes, opdyn_mixture_dimension(m)));
    if (aggregate) std::copy(g.aggregate.begin(), g.aggregate.end(), aggregate);
    if (per_personality)
      for (std::size_t i = 0; i < g.per_personality.size(); ++i)
        std::copy(g.per_personality[i].begin(), g.per_personality[i].end(), per_personality + i * g.size());
  });
}

void opdyn_mixture_free(opdyn_mixture* m) { delete m; }

opdyn_status opdyn_volterra(const opdyn_scenario* s, double horizon, double dt, size_t* steps, double** times,
                            double** gamma) {
  return guarded([&] {
    require(s, "scenario");
    require(steps, "steps");
    const auto v = integral::volterra_solve(meanfield::assemble(s->scn), horizon, dt);
    *steps = v.times.size();
    if (times) *times = dup_buffer(v.times);
    if (gamma) {
      std::vector<double> flat;
      for (const auto& g : v.gamma) flat.insert(flat.end(), g.begin(), g.end());
      *gamma = dup_buffer(flat);
    }
  });
}

opdyn_status opdyn_fredholm(const opdyn_scenario* s, char** json) {
  return guarded([&] {
    require(s, "scenario");
    require(json, "json");
    const auto sol = integral::fredholm_solve(s->scn);
    Json j;
    j["n"] = sol.n;
    j["kappa"] = sol.kappa;
    j["iterations"] = sol.iterations;
    j["direct_solve"] = sol.direct_solve;
    j["residual"] = sol.residual;
    j["p"] = sol.p;
    j["phi"] = sol.phi;
    j["beta"] = sol.beta;
    j["f"] = sol.f;
    *json = dup_string(j.dump(2) + "\n");
  });
}

opdyn_status opdyn_mesh_study_proximity(double alpha, const double* coupling, size_t subjects, int prejudice_variant,
                                        const size_t* ns, size_t count, char** json) {
  return guarded([&] {
    require(coupling, "coupling");
    require(ns, "ns");
    require(json, "json");
    if (subjects == 0) throw ValidationError("subjects", "must be positive");
    if (prejudice_variant != 1 && prejudice_variant != 2) throw ValidationError("prejudice", "expected 1 or 2");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha", "stubbornness must lie in (0, 1]");
    linalg::Matrix c(subjects, subjects, std::vector<double>(coupling, coupling + subjects * subjects));
    const auto spec = model::uniform_proximity_spec(alpha, c, prejudice_variant, 0.0);
    const auto rows = integral::mesh_refinement_study(spec, std::span<const std::size_t>(ns, count));
    Json out = Json::array();
    for (const auto& r : rows)
      out.push_back({{"n", r.n}, {"sup_diff", r.sup_diff}, {"iterations", r.iterations}, {"kappa", r.kappa}});
    *json = dup_string(out.dump(2) + "\n");
  });
}

opdyn_status opdyn_simulate(const opdyn_scenario* s, size_t agents, double dt, double horizon, uint64_t seed,
                            const double* times, size_t ntimes, opdyn_run** out) {
  return guarded([&] {
    require(s, "scenario");
    require(out, "out");
    if (ntimes) require(times, "times");
    abm::SimulationOptions o;
    o.U = agents;
    o.dt = dt;
    o.horizon = horizon;
    o.seed = seed;
    o.snapshot_times.assign(times, times + ntimes);
    *out = new opdyn_run{abm::simulate(s->scn, o)};
  });
}

size_t opdyn_run_snapshots(const opdyn_run* r) { return r ? r->snaps.size() : 0; }

opdyn_status opdyn_run_snapshot_info(const opdyn_run* r, size_t k, double* t, size_t* step, size_t* agents) {
  return guarded([&] {
    const auto& s = snapshot_at(r, k);
    if (t) *t = s.t;
    if (step) *step = s.step;
    if (agents) *agents = s.opinions.size();
  });
}

opdyn_status opdyn_run_agent(const opdyn_run* r, size_t k, size_t agent, size_t* personality, double* opinion) {
  return guarded([&] {
    const auto& s = snapshot_at(r, k);
    if (agent >= s.opinions.size()) throw ValidationError("agent", "index out of range");
    if (personality) *personality = s.personality[agent];
    if (opinion) std::copy(s.opinions[agent].begin(), s.opinions[agent].end(), opinion);
  });
}

opdyn_status opdyn_run_moments(const opdyn_run* r, size_t k, size_t personality, size_t* count, double* mean,
                               double* cov) {
  return guarded([&] {
    const auto& s = snapshot_at(r, k);
    if (personality >= s.counts.size()) throw ValidationError("personality", "index out of range");
    if (count) *count = s.counts[personality];
    if (mean) std::copy(s.mean[personality].begin(), s.mean[personality].end(), mean);
    if (cov) std::copy(s.covariance[personality].data().begin(), s.covariance[personality].data().end(), cov);
  });
}

opdyn_status opdyn_run_kde(const opdyn_run* r, size_t k, const opdyn_axis* axes, double bandwidth, double* out) {
  return guarded([&] {
    const auto& s = snapshot_at(r, k);
    require(out, "out");
    const std::size_t n = s.opinions.empty() ? 0 : s.opinions.front().size();
    const auto d = abm::empirical_density(s, axes_of(axes, n), bandwidth);
    std::copy(d.begin(), d.end(), out);
  });
}

void opdyn_run_free(opdyn_run* r) { delete r; }

}  // extern "C"
