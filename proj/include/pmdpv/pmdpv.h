// Copyright 2026 The pmdp-verify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to pmdp-verify. Functions return a status code; on failure the
 * message is available from pmdpv_last_error() on the calling thread. Strings
 * returned through char** are owned by the caller and released with
 * pmdpv_string_free(). */

#ifndef PMDPV_PMDPV_H
#define PMDPV_PMDPV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PMDPV_API __declspec(dllexport)
#elif defined(__GNUC__)
#define PMDPV_API __attribute__((visibility("default")))
#else
#define PMDPV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pmdpv_status {
    PMDPV_OK = 0,
    PMDPV_ERR_ARGUMENT = 1,   /* null handle or bad option value */
    PMDPV_ERR_PARSE = 2,      /* malformed input text */
    PMDPV_ERR_VALIDATION = 3, /* well-formed input violating a model invariant */
    PMDPV_ERR_NUMERIC = 4,    /* non-convergence or degenerate numerics */
    PMDPV_ERR_LIMIT = 5,      /* a configured size or refinement cap was exceeded */
    PMDPV_ERR_IO = 6,         /* file access */
    PMDPV_ERR_INTERNAL = 7
} pmdpv_status;

typedef enum pmdpv_verdict {
    PMDPV_SAT = 0,
    PMDPV_UNSAT = 1,
    PMDPV_UNKNOWN = 2,
    PMDPV_INVALID = 3
} pmdpv_verdict;

typedef enum pmdpv_mode {
    PMDPV_MODE_SYNTH = 0,
    PMDPV_MODE_DP = 1,
    PMDPV_MODE_RANDOM_STATIC = 2,
    PMDPV_MODE_NONE = 3,
    PMDPV_MODE_FIXED = 4 /* simulate only: follow the given strategy */
} pmdpv_mode;

typedef struct pmdpv_model pmdpv_model;
typedef struct pmdpv_region pmdpv_region;

PMDPV_API const char* pmdpv_version(void);
PMDPV_API const char* pmdpv_last_error(void);
PMDPV_API const char* pmdpv_status_name(pmdpv_status s);
PMDPV_API void pmdpv_string_free(char* s);

/* Models */
PMDPV_API pmdpv_status pmdpv_model_load(const char* path, pmdpv_model** out);
PMDPV_API pmdpv_status pmdpv_model_parse(const char* text, pmdpv_model** out);
PMDPV_API void pmdpv_model_free(pmdpv_model* m);
PMDPV_API pmdpv_status pmdpv_model_to_json(const pmdpv_model* m, char** out);
PMDPV_API pmdpv_status pmdpv_model_num_states(const pmdpv_model* m, size_t* out);
PMDPV_API pmdpv_status pmdpv_model_num_params(const pmdpv_model* m, size_t* out);
/* Total number of memoryless strategies, saturating at SIZE_MAX. */
PMDPV_API pmdpv_status pmdpv_model_strategy_count(const pmdpv_model* m, size_t* out);
/* Expanded model plus lineage as JSON. */
PMDPV_API pmdpv_status pmdpv_model_expand(const pmdpv_model* m, char** out);
/* Optimal until probability of the property's path formula at theta, using
 * the quantifier the property's bound selects. */
PMDPV_API pmdpv_status pmdpv_check(const pmdpv_model* m, const char* property, const double* theta, size_t n,
                                  double* probability, int* satisfied);

/* Parameter synthesis */
typedef struct pmdpv_synth_options {
    double tol;
    double budget;
    unsigned threads;
    int minimum_semantics; /* nonzero: minimise over strategies for every bound */
    const char* ties;      /* comma-separated "theta2=theta1", or NULL */
    size_t max_refinements;
} pmdpv_synth_options;

typedef struct pmdpv_synth_stats {
    size_t cells;
    size_t evaluations;
    size_t refinements;
    double final_tol;
    double undecided_fraction;
} pmdpv_synth_stats;

PMDPV_API void pmdpv_synth_options_init(pmdpv_synth_options* o);
PMDPV_API pmdpv_status pmdpv_synthesise(const pmdpv_model* m, const char* property, const pmdpv_synth_options* o,
                                       pmdpv_region** out, pmdpv_synth_stats* stats);

/* Region maps */
PMDPV_API pmdpv_status pmdpv_region_load(const char* path, pmdpv_region** out);
PMDPV_API pmdpv_status pmdpv_region_parse(const char* text, pmdpv_region** out);
PMDPV_API void pmdpv_region_free(pmdpv_region* r);
PMDPV_API pmdpv_status pmdpv_region_to_json(const pmdpv_region* r, char** out);
PMDPV_API pmdpv_status pmdpv_region_dims(const pmdpv_region* r, size_t* out);
PMDPV_API pmdpv_status pmdpv_region_verdict(const pmdpv_region* r, const double* point, size_t n,
                                           pmdpv_verdict* out);
/* Volume of the cells carrying the verdict. */
PMDPV_API pmdpv_status pmdpv_region_volume(const pmdpv_region* r, pmdpv_verdict v, double* out);

/* Simulation */
typedef struct pmdpv_sim_options {
    const double* theta;
    size_t n_theta;
    size_t traces;
    size_t length;
    uint64_t seed;
    pmdpv_mode mode;           /* FIXED, RANDOM_STATIC or NONE */
    const char* strategy_json; /* required for FIXED */
} pmdpv_sim_options;

PMDPV_API void pmdpv_sim_options_init(pmdpv_sim_options* o);
/* Traces as JSON lines. */
PMDPV_API pmdpv_status pmdpv_simulate(const pmdpv_model* m, const pmdpv_sim_options* o, char** out);

/* Inference: posterior hyperparameters {name: [a, b]} from JSON-lines traces.
 * Models that need expansion report the completion sampler's pilot posterior. */
PMDPV_API pmdpv_status pmdpv_infer(const pmdpv_model* m, const char* traces_jsonl, char** out);

/* Confidence */
typedef struct pmdpv_confidence_options {
    size_t samples;
    uint64_t seed;
    unsigned threads;
    int exact;         /* nonzero: integrate the Beta product over the cells */
    const char* ties;  /* ties the map was synthesised with, or NULL */
} pmdpv_confidence_options;

PMDPV_API void pmdpv_confidence_options_init(pmdpv_confidence_options* o);
/* JSON {c, stderr, undecided_mass, samples, rejected}. */
PMDPV_API pmdpv_status pmdpv_confidence(const pmdpv_region* r, const char* posterior_json,
                                       const pmdpv_confidence_options* o, char** out);
/* Posterior mass of [lo, hi] under Beta(a, b). */
PMDPV_API pmdpv_status pmdpv_beta_interval_mass(double a, double b, double lo, double hi, double* out);

/* Experiment design */
typedef struct pmdpv_design_options {
    pmdpv_mode mode; /* SYNTH, DP, RANDOM_STATIC or NONE */
    size_t trace_length;
    size_t mc_samples;
    uint64_t seed;
    unsigned threads;
    double discount;
    size_t max_strategies;
    int exact;        /* synth mode: exact integration instead of Monte Carlo */
    const char* ties; /* ties the map was synthesised with, or NULL */
} pmdpv_design_options;

PMDPV_API void pmdpv_design_options_init(pmdpv_design_options* o);
/* posterior_json may be NULL for the model's priors. */
PMDPV_API pmdpv_status pmdpv_design(const pmdpv_model* m, const pmdpv_region* r, const char* posterior_json,
                                   const pmdpv_design_options* o, char** out);

/* Full verification loop */
typedef struct pmdpv_run_options {
    pmdpv_mode mode; /* SYNTH, DP, RANDOM_STATIC or NONE */
    const double* theta;
    size_t n_theta;
    size_t traces;
    size_t length;
    size_t batch; /* traces per design round, 0 for the whole budget */
    uint64_t seed;
    size_t mc_samples;
    size_t design_mc_samples;
    const char* ties;
} pmdpv_run_options;

PMDPV_API void pmdpv_run_options_init(pmdpv_run_options* o);
PMDPV_API pmdpv_status pmdpv_run(const pmdpv_model* m, const pmdpv_region* r, const pmdpv_run_options* o,
                                char** out);

/* Evaluation grid from an experiment spec file; writes CSV and plot scripts
 * into out_dir and returns a JSON summary. */
typedef struct pmdpv_eval_options {
    unsigned threads;
    int override_seed;
    uint64_t seed;
    size_t mc_samples; /* 0 keeps the experiment file's value */
    size_t trials;     /* 0 keeps the experiment file's value */
} pmdpv_eval_options;

PMDPV_API void pmdpv_eval_options_init(pmdpv_eval_options* o);
PMDPV_API pmdpv_status pmdpv_eval(const char* spec_path, const char* out_dir, const pmdpv_eval_options* o,
                                 char** out);

#ifdef __cplusplus
}
#endif

#endif
