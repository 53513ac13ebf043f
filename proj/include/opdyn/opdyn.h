#ifndef OPDYN_OPDYN_H
#define OPDYN_OPDYN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define OPDYN_API __declspec(dllexport)
#else
#define OPDYN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns one of these; the values double as CLI exit codes. */
typedef enum opdyn_status {
  OPDYN_OK = 0,
  OPDYN_ERR_VALIDATION = 2,
  OPDYN_ERR_INSTABILITY = 3,
  OPDYN_ERR_NUMERICAL = 4,
  OPDYN_ERR_INTERNAL = 5
} opdyn_status;

typedef enum opdyn_classification { OPDYN_STABLE = 0, OPDYN_TYPE_I = 1, OPDYN_TYPE_II = 2 } opdyn_classification;

typedef struct opdyn_scenario opdyn_scenario;
/* Per-personality Gaussian components of the opinion density at one time. */
typedef struct opdyn_mixture opdyn_mixture;
/* Snapshots from one agent-based simulation. */
typedef struct opdyn_run opdyn_run;

typedef struct opdyn_axis {
  double lo;
  double hi;
  size_t n;
} opdyn_axis;

OPDYN_API const char* opdyn_version(void);

/* Message of the most recent failure on the calling thread. */
OPDYN_API const char* opdyn_last_error(void);
/* Field name for validation errors, the stability report JSON for refusals, otherwise "". */
OPDYN_API const char* opdyn_last_error_detail(void);
/* Iteration or step index attached to a numerical failure, or -1. */
OPDYN_API long opdyn_last_error_iterations(void);

/* Strings and buffers handed out by the library are released with these. */
OPDYN_API void opdyn_string_free(char* s);
OPDYN_API void opdyn_buffer_free(double* p);

OPDYN_API size_t opdyn_preset_count(void);
OPDYN_API const char* opdyn_preset_name(size_t index);

OPDYN_API opdyn_status opdyn_scenario_load(const char* path, opdyn_scenario** out);
OPDYN_API opdyn_status opdyn_scenario_parse(const char* json, opdyn_scenario** out);
OPDYN_API opdyn_status opdyn_scenario_preset(const char* name, const char* const* keys, const char* const* values,
                                             size_t count, opdyn_scenario** out);
/* Copy with one numeric parameter replaced (noise_variance, stubbornness, zeta1, zeta2, coupling.i.j). */
OPDYN_API opdyn_status opdyn_scenario_with(const opdyn_scenario* s, const char* key, double value,
                                           opdyn_scenario** out);
OPDYN_API opdyn_status opdyn_scenario_to_json(const opdyn_scenario* s, char** out);
OPDYN_API opdyn_status opdyn_scenario_digest(const opdyn_scenario* s, char** out);
OPDYN_API size_t opdyn_scenario_subjects(const opdyn_scenario* s);
OPDYN_API size_t opdyn_scenario_personalities(const opdyn_scenario* s);
OPDYN_API void opdyn_scenario_free(opdyn_scenario* s);

OPDYN_API opdyn_status opdyn_stability(const opdyn_scenario* s, opdyn_classification* cls, char** report_json);

OPDYN_API opdyn_status opdyn_transient(const opdyn_scenario* s, double t, opdyn_mixture** out);
/* Refuses with OPDYN_ERR_INSTABILITY unless the scenario is Stable. steady_json may be NULL. */
OPDYN_API opdyn_status opdyn_steady(const opdyn_scenario* s, opdyn_mixture** out, char** steady_json);
OPDYN_API double opdyn_mixture_time(const opdyn_mixture* m);
OPDYN_API size_t opdyn_mixture_components(const opdyn_mixture* m);
OPDYN_API size_t opdyn_mixture_dimension(const opdyn_mixture* m);
/* mean has dimension entries, cov dimension^2 in row-major order; either may be NULL. */
OPDYN_API opdyn_status opdyn_mixture_component(const opdyn_mixture* m, size_t i, double* weight, double* mean,
                                               double* cov);
/* Expands the requested box to hold every mean plus or minus sigmas standard deviations. */
OPDYN_API opdyn_status opdyn_mixture_cover(const opdyn_mixture* m, const opdyn_axis* requested, double sigmas,
                                           opdyn_axis* out, int* expanded);
/* Grid values with the first axis fastest. per_personality (NULL to skip) holds components * size values. */
OPDYN_API opdyn_status opdyn_mixture_grid(const opdyn_mixture* m, const opdyn_axis* axes, double* aggregate,
                                          double* per_personality);
OPDYN_API void opdyn_mixture_free(opdyn_mixture* m);

/* Trapezoidal Volterra solve; *gamma holds steps rows of width personalities * subjects. */
OPDYN_API opdyn_status opdyn_volterra(const opdyn_scenario* s, double horizon, double dt, size_t* steps,
                                      double** times, double** gamma);
OPDYN_API opdyn_status opdyn_fredholm(const opdyn_scenario* s, char** json);
/* Mesh study for the uniform proximity law on [-1, 1]; coupling is subjects x subjects row-major. */
OPDYN_API opdyn_status opdyn_mesh_study_proximity(double alpha, const double* coupling, size_t subjects,
                                                  int prejudice_variant, const size_t* ns, size_t count,
                                                  char** json);

OPDYN_API opdyn_status opdyn_simulate(const opdyn_scenario* s, size_t agents, double dt, double horizon,
                                      uint64_t seed, const double* times, size_t ntimes, opdyn_run** out);
OPDYN_API size_t opdyn_run_snapshots(const opdyn_run* r);
OPDYN_API opdyn_status opdyn_run_snapshot_info(const opdyn_run* r, size_t k, double* t, size_t* step,
                                               size_t* agents);
OPDYN_API opdyn_status opdyn_run_agent(const opdyn_run* r, size_t k, size_t agent, size_t* personality,
                                       double* opinion);
OPDYN_API opdyn_status opdyn_run_moments(const opdyn_run* r, size_t k, size_t personality, size_t* count,
                                         double* mean, double* cov);
OPDYN_API opdyn_status opdyn_run_kde(const opdyn_run* r, size_t k, const opdyn_axis* axes, double bandwidth,
                                     double* out);
OPDYN_API void opdyn_run_free(opdyn_run* r);

#ifdef __cplusplus
}
#endif

#endif
