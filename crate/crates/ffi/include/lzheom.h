#ifndef LZHEOM_H
#define LZHEOM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum LzStatus {
  LZ_STATUS_OK = 0,
  LZ_STATUS_NULL_POINTER = 1,
  LZ_STATUS_INVALID_UTF8 = 2,
  // malformed configuration text; the message names the line
  LZ_STATUS_CONFIG = 3,
  LZ_STATUS_INVALID_ARGUMENT = 4,
  // non-finite state, unconverged hierarchy or unphysical density matrix
  LZ_STATUS_NUMERICAL = 5,
  LZ_STATUS_IO = 6,
  LZ_STATUS_PANIC = 7,
} LzStatus;

// Outcome of [`lz_oracle_check`].
typedef enum LzVerdict {
  LZ_VERDICT_PASS = 0,
  LZ_VERDICT_FAIL = 1,
  // the pseudomode reference stayed limited by its Fock cutoff
  LZ_VERDICT_INCONCLUSIVE = 2,
} LzVerdict;

// Parsed run configuration.
typedef struct LzConfig LzConfig;

// Sampled fidelity trace of one evolution.
typedef struct LzTrace LzTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null if none. The pointer
// stays valid until the next failing call on this thread.
const char *lz_last_error(void);

// Library version as a static NUL-terminated string.
const char *lz_version(void);

// Parses a `key = value` configuration document.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer.
enum LzStatus lz_config_parse(const char *text, struct LzConfig **out);

// Releases a configuration. Null is ignored.
//
// # Safety
// `cfg` must come from [`lz_config_parse`] and not be freed twice.
void lz_config_free(struct LzConfig *cfg);

// Overrides the coupling strength γ.
//
// # Safety
// `cfg` must be a live configuration handle.
enum LzStatus lz_config_set_gamma(struct LzConfig *cfg, double gamma);

// Overrides the hierarchy depth.
//
// # Safety
// `cfg` must be a live configuration handle.
enum LzStatus lz_config_set_depth(struct LzConfig *cfg, size_t depth);

// Evolves the configuration at its own depth and step.
//
// # Safety
// `cfg` must be a live configuration handle and `out` writable.
enum LzStatus lz_evolve(const struct LzConfig *cfg, struct LzTrace **out);

// Evolves after raising the depth until the fidelity trace changes by less
// than `tol`, up to `max_depth`, and checking the step by halving it.
//
// # Safety
// `cfg` must be a live configuration handle and `out` writable.
enum LzStatus lz_evolve_converged(const struct LzConfig *cfg,
                                  double tol,
                                  size_t max_depth,
                                  struct LzTrace **out);

// Releases a trace. Null is ignored.
//
// # Safety
// `trace` must come from an evolve call and not be freed twice.
void lz_trace_free(struct LzTrace *trace);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `trace` must be null or a live trace handle.
size_t lz_trace_len(const struct LzTrace *trace);

// Sample times; `lz_trace_len` entries, owned by the trace.
//
// # Safety
// `trace` must be null or a live trace handle.
const double *lz_trace_times(const struct LzTrace *trace);

// Survival fidelity at each sample; `lz_trace_len` entries, owned by the
// trace.
//
// # Safety
// `trace` must be null or a live trace handle.
const double *lz_trace_fidelity(const struct LzTrace *trace);

// Fidelity at the last sample, NaN for a null or empty trace.
//
// # Safety
// `trace` must be null or a live trace handle.
double lz_trace_final_fidelity(const struct LzTrace *trace);

// Hierarchy depth the trace was computed at.
//
// # Safety
// `trace` must be null or a live trace handle.
size_t lz_trace_depth_used(const struct LzTrace *trace);

// Copies the reduced density matrix at sample `index` into `out` as eight
// doubles: row-major entries, each as (re, im).
//
// # Safety
// `trace` must be a live trace handle and `out` must hold 8 doubles.
enum LzStatus lz_trace_state(const struct LzTrace *trace, size_t index, double *out);

// Compares the hierarchy against the pseudomode reference with the
// configuration's depth and Fock cutoff. Writes the verdict and the largest
// trace distance between the two reduced states.
//
// # Safety
// `cfg` must be a live configuration handle; `verdict` and `distance` must
// be writable.
enum LzStatus lz_oracle_check(const struct LzConfig *cfg,
                              double tol,
                              enum LzVerdict *verdict,
                              double *distance);

// Infinite-sweep Landau-Zener survival probability `1 − exp(−πX²/2v)`.
double lz_probability(double x, double v);

// Zero-temperature infinite-sweep fidelity with gap `X² + γ`.
double lz_wubs_asymptotic(double x, double gamma, double v);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LZHEOM_H */
