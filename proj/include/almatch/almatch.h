// Copyright 2026 The almatch Authors
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

/* C interface to the almatch engine.
 *
 * Every function returns an almatch_status; on failure the message is
 * available from almatch_last_error() on the calling thread until the next
 * call on that thread. Handles are opaque and owned by the caller.
 */
#ifndef ALMATCH_ALMATCH_H_
#define ALMATCH_ALMATCH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ALMATCH_API __declspec(dllexport)
#else
#define ALMATCH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum almatch_status {
  ALMATCH_OK = 0,
  ALMATCH_E_CONFIG = 1,
  ALMATCH_E_DOMAIN = 2,
  ALMATCH_E_INGESTION = 3,
  ALMATCH_E_FORMAT = 4,
  ALMATCH_E_STATE = 5,
  ALMATCH_E_ORACLE = 6,
  ALMATCH_E_TIMEOUT = 7,
  ALMATCH_E_NUMERIC = 8,
  ALMATCH_E_IO = 9,
  ALMATCH_E_INTERNAL = 10,
  ALMATCH_E_ARGUMENT = 11
} almatch_status;

typedef enum almatch_oracle_kind {
  ALMATCH_ORACLE_SIMULATED = 0,
  /* Serve queries over HTTP (config key oracle.bind) and wait for answers. */
  ALMATCH_ORACLE_HUMAN = 1
} almatch_oracle_kind;

typedef enum almatch_split { ALMATCH_SPLIT_TRAIN = 0, ALMATCH_SPLIT_TEST = 1 } almatch_split;

typedef struct almatch_config almatch_config;

typedef void (*almatch_log_fn)(const char* message, void* user);

typedef struct almatch_run_options {
  almatch_oracle_kind oracle;
  int resume;              /* continue from <out_dir>/checkpoint.bin */
  almatch_log_fn log;      /* progress lines; may be NULL */
  void* log_user;
} almatch_run_options;

typedef struct almatch_run_report {
  double final_accuracy;
  uint64_t labels;
  int64_t steps;
  int stopped; /* almatch_request_stop() ended the run early */
} almatch_run_report;

typedef struct almatch_summary {
  double mean;
  double stddev; /* sample standard deviation; 0 for one seed */
  uint64_t runs;
} almatch_summary;

ALMATCH_API const char* almatch_version(void);
ALMATCH_API const char* almatch_last_error(void);
ALMATCH_API const char* almatch_status_name(almatch_status status);

ALMATCH_API almatch_status almatch_config_new(almatch_config** out);
ALMATCH_API almatch_status almatch_config_load(const char* path, almatch_config** out);
ALMATCH_API almatch_status almatch_config_set(almatch_config* cfg, const char* key,
                                              const char* value);
ALMATCH_API almatch_status almatch_config_validate(const almatch_config* cfg);
/* Writes the canonical key = value listing. `*needed` receives the size
 * including the terminating NUL; pass buf=NULL to query it. */
ALMATCH_API almatch_status almatch_config_to_text(const almatch_config* cfg, char* buf,
                                                  size_t capacity, size_t* needed);
ALMATCH_API void almatch_config_free(almatch_config* cfg);

ALMATCH_API void almatch_run_options_init(almatch_run_options* opts);

/* One run with the config's seed. Metrics and checkpoints go to train.out_dir. */
ALMATCH_API almatch_status almatch_train(const almatch_config* cfg,
                                         const almatch_run_options* opts,
                                         almatch_run_report* report);

/* One run per seed under <out_dir>/seed-<s>/, then <out_dir>/summary.json
 * with the mean and standard deviation of final accuracy. */
ALMATCH_API almatch_status almatch_train_seeds(const almatch_config* cfg, const uint64_t* seeds,
                                               size_t count, const almatch_run_options* opts,
                                               almatch_summary* summary);

/* Asks a running almatch_train to checkpoint and return. Safe from a signal
 * handler. */
ALMATCH_API void almatch_request_stop(void);

/* `data_dir` overrides data.dir stored in the checkpoint; may be NULL. */
ALMATCH_API almatch_status almatch_evaluate_checkpoint(const char* checkpoint,
                                                       const char* data_dir, double* accuracy);
ALMATCH_API almatch_status almatch_export_embeddings(const char* checkpoint, const char* data_dir,
                                                     almatch_split split, const char* out_csv);

ALMATCH_API almatch_status almatch_cosine_lr(int64_t k, int64_t total, double lr0, double* out);
ALMATCH_API almatch_status almatch_margin(const double* probs, size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif /* ALMATCH_ALMATCH_H_ */
