#ifndef BLINDSPOT_H
#define BLINDSPOT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// `mode` argument: plug-in blind mass.
#define BS_MODE_PLUGIN 0

// `mode` argument: plug-in blind mass plus the Good-Turing unseen term.
#define BS_MODE_PLUGIN_UNSEEN 1

// `mode` argument: generalized Good-Turing (extension).
#define BS_MODE_GENERALIZED_GT 2

// Result of every `bs_*` call.
typedef enum BsStatus {
  BS_STATUS_OK = 0,
  BS_STATUS_NULL_POINTER = 1,
  BS_STATUS_INVALID_ARGUMENT = 2,
  BS_STATUS_EMPTY_INPUT = 3,
  BS_STATUS_SCHEMA_MISMATCH = 4,
  BS_STATUS_IO = 5,
  BS_STATUS_PARSE = 6,
  BS_STATUS_INVARIANT = 7,
  BS_STATUS_BUFFER_TOO_SMALL = 8,
  BS_STATUS_INVALID_UTF8 = 9,
  BS_STATUS_PANIC = 10,
} BsStatus;

// Opaque count table.
typedef struct BsCountTable BsCountTable;

typedef struct BsWilsonInterval {
  double estimate;
  double lower;
  double upper;
} BsWilsonInterval;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL after a
// successful one. The pointer stays valid until the next `bs_*` call on
// the same thread.
const char *bs_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *bs_version(void);

// Build a single-factor table (factor `state`) from `len` labels and counts.
// Repeated labels are summed; zero counts are ignored.
//
// # Safety
// `labels` and `counts` must point to `len` valid elements, each label a
// NUL-terminated string. `out_table` must be writable.
enum BsStatus bs_count_table_from_counts(const char *const *labels,
                                         const uint64_t *counts,
                                         size_t len,
                                         struct BsCountTable **out_table);

// Load a table from a canonical samples CSV (`factor:<name>` columns).
//
// # Safety
// `path` must be a NUL-terminated string; `out_table` must be writable.
enum BsStatus bs_count_table_from_samples_file(const char *path, struct BsCountTable **out_table);

// Load a table from a `(state columns..., count)` CSV.
//
// # Safety
// `path` must be a NUL-terminated string; `out_table` must be writable.
enum BsStatus bs_count_table_from_counts_file(const char *path, struct BsCountTable **out_table);

// Release a table. NULL is a no-op.
//
// # Safety
// `table` must come from a `bs_count_table_*` constructor and not have
// been freed already.
void bs_count_table_free(struct BsCountTable *table);

// Total sample count `n`.
//
// # Safety
// `table` must be a live handle; `out_n` must be writable.
enum BsStatus bs_count_table_n(const struct BsCountTable *table, uint64_t *out_n);

// Number of distinct observed states.
//
// # Safety
// `table` must be a live handle; `out_k` must be writable.
enum BsStatus bs_count_table_k_eff(const struct BsCountTable *table, uint64_t *out_k);

// Estimated blind-spot mass at threshold `tau` (at least 1).
//
// # Safety
// `table` must be a live handle; `out_mass` must be writable.
enum BsStatus bs_blind_spot_mass(const struct BsCountTable *table,
                                 uint32_t mode_id,
                                 uint64_t tau,
                                 double *out_mass);

// Fill `buf[tau - 1]` with the estimate at each `tau` in `1..=tau_max`.
// Fails with `BufferTooSmall` when `buf_len < tau_max`.
//
// # Safety
// `table` must be a live handle; `buf` must have room for `buf_len` doubles.
enum BsStatus bs_blind_spot_curve(const struct BsCountTable *table,
                                  uint32_t mode_id,
                                  uint64_t tau_max,
                                  double *buf,
                                  size_t buf_len);

// Good-Turing unseen-mass estimate `f1 / n`.
//
// # Safety
// `table` must be a live handle; `out_mass` must be writable.
enum BsStatus bs_good_turing_unseen_mass(const struct BsCountTable *table, double *out_mass);

// Accuracy ceiling `(1 - b) + b * a` for blind mass `b` and blind-region
// accuracy `a`, both in `[0, 1]`.
//
// # Safety
// `out_ceiling` must be writable.
enum BsStatus bs_accuracy_ceiling(double blind_mass,
                                  double assumed_blind_accuracy,
                                  double *out_ceiling);

// Wilson score interval for `successes` out of `trials`.
//
// # Safety
// `out_interval` must be writable.
enum BsStatus bs_wilson_interval(uint64_t successes,
                                 uint64_t trials,
                                 double confidence,
                                 struct BsWilsonInterval *out_interval);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLINDSPOT_H */
