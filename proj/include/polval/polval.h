// Copyright 2026 The polval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*
 * C interface to the polval library.
 *
 * All state lives behind an opaque polval_run handle. Every function returns
 * a polval_status; on failure polval_last_error() describes the problem for
 * the calling thread. Strings returned through char** out-parameters are
 * heap allocated and must be released with polval_free().
 */
#ifndef POLVAL_POLVAL_H_
#define POLVAL_POLVAL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(POLVAL_BUILDING_LIBRARY)
#define POLVAL_API __declspec(dllexport)
#else
#define POLVAL_API __declspec(dllimport)
#endif
#else
#define POLVAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum polval_status {
  POLVAL_OK = 0,
  POLVAL_ERR_DATA = 1,        /* unreadable or inconsistent input data */
  POLVAL_ERR_CONVERGENCE = 2, /* optimizer did not converge */
  POLVAL_ERR_CONFIG = 3,      /* invalid configuration or argument */
  POLVAL_ERR_DOMAIN = 4,      /* argument outside a function's domain */
  POLVAL_ERR_STATE = 5,       /* operation needs a step that has not run */
  POLVAL_ERR_ESTIMATION = 6,  /* estimation impossible (e.g. corner solutions) */
  POLVAL_ERR_INTERNAL = 7
} polval_status;

typedef struct polval_run polval_run;

POLVAL_API const char* polval_version(void);
POLVAL_API const char* polval_last_error(void);
POLVAL_API const char* polval_status_name(polval_status status);
POLVAL_API void polval_free(char* text);

/* Run configuration. Relative paths in the file resolve against its directory. */
POLVAL_API polval_status polval_run_create(const char* config_path, polval_run** out);
POLVAL_API polval_status polval_run_create_from_json(const char* config_json,
                                                     const char* base_dir, polval_run** out);
POLVAL_API void polval_run_destroy(polval_run* run);

/* Overrides the optimizer, bootstrap, frontier and forest seeds. */
POLVAL_API polval_status polval_run_set_seed(polval_run* run, uint64_t seed);
POLVAL_API polval_status polval_run_fingerprint(const polval_run* run, char** out);
POLVAL_API polval_status polval_run_output_dir(const polval_run* run, char** out);

/* NULL paths fall back to the configured ones. */
POLVAL_API polval_status polval_run_load_households(polval_run* run, const char* path,
                                                    size_t* n_loaded, size_t* n_filtered);
POLVAL_API polval_status polval_run_load_te(polval_run* run, const char* path);
POLVAL_API polval_status polval_run_load_params(polval_run* run, const char* path);
POLVAL_API polval_status polval_run_n_households(const polval_run* run, size_t* out);

/* Reports: JSON and aligned text. Either out-pointer may be NULL. */
POLVAL_API polval_status polval_run_fit_te(polval_run* run, char** json, char** text);
POLVAL_API polval_status polval_run_save_te(const polval_run* run, const char* path);
POLVAL_API polval_status polval_run_characterize(polval_run* run, char** json, char** text);
POLVAL_API polval_status polval_run_infer(polval_run* run, char** json, char** text);
/* replicates <= 0 uses the configured count. */
POLVAL_API polval_status polval_run_bootstrap(polval_run* run, int replicates, char** json,
                                              char** text);
/* params_json NULL uses the fitted preferences; k == 0 uses the configured k. */
POLVAL_API polval_status polval_run_counterfactual(polval_run* run, const char* params_json,
                                                   size_t k, char** json, char** text);
/* weighting: "raw", "welfare" or "survey"; NULL uses the configured one. */
POLVAL_API polval_status polval_run_frontier(polval_run* run, const char* weighting,
                                             size_t k, char** json, char** text,
                                             char** plot_csv);
/* Blocks serving HTTP on host:port. */
POLVAL_API polval_status polval_run_serve(polval_run* run, const char* host, int port);

POLVAL_API polval_status polval_survey(const char* survey_csv_path, uint64_t seed,
                                       int bootstrap_draws, char** json, char** text);

/* options_json keys: n, seed, ranking ("full"|"binary"), binary_share,
 * effect_shape ("linear"|"step"), outcome_noise, log_curvature,
 * survey_respondents. */
POLVAL_API polval_status polval_simulate(const char* options_json, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* POLVAL_POLVAL_H_ */
