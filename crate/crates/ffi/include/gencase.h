#ifndef GENCASE_H
#define GENCASE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GcStatus {
  GC_STATUS_OK = 0,
  GC_STATUS_NULL_POINTER = 1,
  GC_STATUS_INVALID_ARGUMENT = 2,
  GC_STATUS_UNKNOWN_NAME = 3,
  GC_STATUS_CAP_EXCEEDED = 4,
  GC_STATUS_DOMAIN = 5,
  GC_STATUS_BUFFER_TOO_SMALL = 6,
  GC_STATUS_RUNTIME = 7,
  GC_STATUS_PANIC = 8,
} GcStatus;

/**
 * Candidate function handle.
 */
typedef struct GcCandidate GcCandidate;

/**
 * Inverter program handle.
 */
typedef struct GcInverter GcInverter;

/**
 * A per-input success probability. For exact results `num/den` is the
 * reduced fraction and `half_width` is zero.
 */
typedef struct GcDelta {
  double value;
  double half_width;
  bool exact;
  uint64_t num;
  uint64_t den;
  uint64_t trials;
  uint64_t success;
  uint64_t wrong_answer;
  uint64_t fuel_exhausted;
  double mean_steps;
} GcDelta;

typedef struct GcPlan {
  uint64_t k;
  double epsilon;
} GcPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message (NUL-terminated, possibly
 * truncated) into `buf` and returns its full length in bytes.
 *
 * # Safety
 * `buf` must be valid for `buf_len` bytes, or null when `buf_len` is 0.
 */
size_t gc_last_error(char *buf, size_t buf_len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gc_version(void);

/**
 * Creates a candidate function by registry name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum GcStatus gc_candidate_new(const char *name, struct GcCandidate **out);

/**
 * Releases a candidate handle. Null is ignored.
 *
 * # Safety
 * `f` must come from [`gc_candidate_new`] and not be used afterwards.
 */
void gc_candidate_free(struct GcCandidate *f);

/**
 * Output length `m(n)`.
 *
 * # Safety
 * `f` must be a live handle; `out_len` must be writable.
 */
enum GcStatus gc_candidate_output_len(const struct GcCandidate *f, size_t n, size_t *out_len);

/**
 * Evaluates `f(x)` into `buf` and stores the step count in `steps` (may be null).
 *
 * # Safety
 * `f` must be a live handle, `x` NUL-terminated, `buf` valid for `buf_len` bytes.
 */
enum GcStatus gc_evaluate(const struct GcCandidate *f,
                          const char *x,
                          char *buf,
                          size_t buf_len,
                          uint64_t *steps);

/**
 * Creates an inverter by registry name. Amplifiers named
 * `amplify:<c>:<inner>` verify against `f`, or against `identity` when
 * `f` is null.
 *
 * # Safety
 * `name` must be NUL-terminated, `f` null or a live handle, `out` writable.
 */
enum GcStatus gc_inverter_new(const char *name,
                              const struct GcCandidate *f,
                              struct GcInverter **out);

/**
 * Releases an inverter handle. Null is ignored.
 *
 * # Safety
 * `a` must come from [`gc_inverter_new`] and not be used afterwards.
 */
void gc_inverter_free(struct GcInverter *a);

/**
 * Coin-tape length `t(n)`.
 *
 * # Safety
 * `a` must be a live handle; `out_len` must be writable.
 */
enum GcStatus gc_inverter_coin_len(const struct GcInverter *a, size_t n, size_t *out_len);

/**
 * Exact `δ_{A,f}(x)` by enumerating all `2^{t(n)}` tapes.
 *
 * # Safety
 * Handles must be live, `x` NUL-terminated, `out` writable.
 */
enum GcStatus gc_exact_delta(const struct GcInverter *a,
                             const struct GcCandidate *f,
                             const char *x,
                             uint64_t fuel,
                             size_t tape_cap,
                             struct GcDelta *out);

/**
 * Monte Carlo `δ_{A,f}(x)` over `trials` seeded tapes.
 *
 * # Safety
 * Handles must be live, `x` NUL-terminated, `out` writable.
 */
enum GcStatus gc_estimate_delta(const struct GcInverter *a,
                                const struct GcCandidate *f,
                                const char *x,
                                uint64_t trials,
                                uint64_t fuel,
                                uint64_t seed,
                                double confidence,
                                struct GcDelta *out);

/**
 * Amplifier plan `k = ⌈n^{3c}⌉`, `ε = 2^{-(n+2)/2}`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GcStatus gc_chernoff_plan(size_t n, double c, struct GcPlan *out);

/**
 * Exact density `|R ∩ I_n| / 2^n` of a named reference set, as a reduced
 * fraction and a double. Any of the outputs may be null.
 *
 * # Safety
 * `name` must be NUL-terminated; non-null outputs must be writable.
 */
enum GcStatus gc_reference_density(const char *name,
                                   size_t n,
                                   size_t cap,
                                   uint64_t *num,
                                   uint64_t *den,
                                   double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GENCASE_H */
