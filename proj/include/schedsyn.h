/* schedsyn: activity-schedule synthesis with variational auto-encoders.
 *
 * Shared-library C interface. Handles are opaque; every function returns a
 * status code and leaves a thread-local message retrievable through
 * schedsyn_last_error() on failure. All randomness is keyed off explicit
 * seeds; identical inputs and seeds reproduce identical outputs.
 */
#ifndef SCHEDSYN_H
#define SCHEDSYN_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum schedsyn_status {
  SCHEDSYN_OK = 0,
  SCHEDSYN_ERR_USAGE = 1,   /* bad arguments, unknown preset, misuse */
  SCHEDSYN_ERR_DATA = 2,    /* malformed or inconsistent input data */
  SCHEDSYN_ERR_NUMERIC = 3, /* training diverged / non-finite loss */
  SCHEDSYN_ERR_IO = 4       /* file system failure */
} schedsyn_status;

typedef struct schedsyn_sample schedsyn_sample; /* a set of day schedules */
typedef struct schedsyn_model schedsyn_model;   /* a trained generator */

/* Message for the most recent failing call on this thread. */
const char* schedsyn_last_error(void);

/* ---- samples ---- */

schedsyn_status schedsyn_sample_load(const char* path, schedsyn_sample** out);
schedsyn_status schedsyn_sample_save(const schedsyn_sample* sample, const char* path);
schedsyn_status schedsyn_sample_size(const schedsyn_sample* sample, uint64_t* out);
/* Decoder draws that produced no activities (counted, never resampled). */
schedsyn_status schedsyn_sample_degenerate(const schedsyn_sample* sample, uint64_t* out);
void schedsyn_sample_free(schedsyn_sample* sample);

/* Travel-diary CSV (pid,day,act,start_min,end_min,trip_min) plus a raw-to-
 * canonical label map CSV -> cleaned home-based sample. */
schedsyn_status schedsyn_ingest(const char* diaries_csv, const char* labelmap_csv,
                                schedsyn_sample** out, uint64_t* dropped_non_home_based,
                                uint64_t* merged, uint64_t* dropped_bad_tiling);

/* Draw from a grammar spec file; NULL spec_path uses the built-in grammar. */
schedsyn_status schedsyn_oracle_draw(const char* spec_path, uint64_t count, uint64_t seed,
                                     schedsyn_sample** out);

/* ---- models ---- */

/* Trains on a seeded 90/10 split of `data` and writes the checkpoint. */
schedsyn_status schedsyn_train(const char* config_path, const schedsyn_sample* data,
                               uint64_t seed, int threads, const char* checkpoint_out);
schedsyn_status schedsyn_model_load(const char* path, schedsyn_model** out);
void schedsyn_model_free(schedsyn_model* model);
schedsyn_status schedsyn_generate(schedsyn_model* model, uint64_t count, uint64_t seed,
                                  schedsyn_sample** out);

/* Encodes and decodes `data` through the configured encoding and writes the
 * round-tripped schedules; a debugging aid for encoding settings. */
schedsyn_status schedsyn_dump_encodings(const char* config_path, const schedsyn_sample* data,
                                        const char* out_path);

/* ---- evaluation and orchestration ---- */

/* Writes report.csv, summary.csv and the two SVG figures into out_dir.
 * `training` is the novelty reference; pass NULL to use `real`. */
schedsyn_status schedsyn_evaluate(const schedsyn_sample* real, const schedsyn_sample* synthetic,
                                  const schedsyn_sample* training, const char* out_dir);

/* Train/generate/evaluate `runs` times; per-run artifacts under
 * out_dir/run<k>/ and the cross-run summary in out_dir/summary.csv. */
schedsyn_status schedsyn_experiment(const char* config_path, const schedsyn_sample* data,
                                    const char* out_dir, int runs, uint64_t seed, int threads);

/* Discrete step-size sweep; steps_csv like "5,10,15,20,30,60,120". */
schedsyn_status schedsyn_sweep(const char* config_path, const schedsyn_sample* data,
                               const char* steps_csv, const char* out_dir, int runs,
                               uint64_t seed, int threads);

#ifdef __cplusplus
}
#endif

#endif /* SCHEDSYN_H */
