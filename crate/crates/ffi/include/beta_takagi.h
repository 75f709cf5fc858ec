#ifndef BETA_TAKAGI_H
#define BETA_TAKAGI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum BtStatus {
  BT_STATUS_OK = 0,
  BT_STATUS_NULL_POINTER = 1,
  BT_STATUS_INVALID_ARGUMENT = 2,
  BT_STATUS_DOMAIN = 3,
  BT_STATUS_PRECISION = 4,
  BT_STATUS_AMBIGUOUS = 5,
  BT_STATUS_SAMPLING = 6,
  BT_STATUS_BUFFER_TOO_SMALL = 7,
  BT_STATUS_PANIC = 8,
} BtStatus;

// Opaque base handle.
typedef struct BtBase BtBase;

// Opaque invariant-density handle.
typedef struct BtDensity BtDensity;

// Midpoint and radius of a certified enclosure, rounded to `double`.
// The radius is rounded up, so `[value - radius, value + radius]` still
// contains the true quantity up to one ulp of `value`.
typedef struct BtValue {
  double value;
  double radius;
} BtValue;

// Summary of a CLT run.
typedef struct BtCltSummary {
  double mean;
  double v_hat;
  double ks_distance;
} BtCltSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a base from text (`"2"`, `"17/10"`, `"golden"`, …) at the given
// working precision.
//
// # Safety
// `beta` must be a NUL-terminated string and `out` a valid pointer.
enum BtStatus bt_base_new(const char *beta, uint32_t precision_bits, struct BtBase **out);

// Releases a base. Null is ignored.
//
// # Safety
// `base` must come from [`bt_base_new`] and not be used afterwards.
void bt_base_free(struct BtBase *base);

// Writes the first `n` greedy digits of `x` into `buf` (one byte per digit,
// values 0 or 1). `buf_len` must be at least `n`.
//
// # Safety
// Pointers must be valid; `buf` must hold `buf_len` bytes.
enum BtStatus bt_digits(const struct BtBase *base,
                        const char *x,
                        size_t n,
                        uint8_t *buf,
                        size_t buf_len);

// Builds the invariant density. `k = 0` selects the default truncation.
//
// # Safety
// Pointers must be valid.
enum BtStatus bt_density_new(const struct BtBase *base, size_t k, struct BtDensity **out);

// Releases a density. Null is ignored.
//
// # Safety
// `density` must come from [`bt_density_new`] and not be used afterwards.
void bt_density_free(struct BtDensity *density);

// Normalizing constant `F` and the digit mean `M`.
//
// # Safety
// Pointers must be valid.
enum BtStatus bt_density_constants(const struct BtDensity *density,
                                   struct BtValue *f,
                                   struct BtValue *m);

// Normalized density at `x`.
//
// # Safety
// Pointers must be valid.
enum BtStatus bt_density_eval(const struct BtDensity *density, double x, struct BtValue *out);

// Invariant measure of `[a, b]`.
//
// # Safety
// Pointers must be valid.
enum BtStatus bt_interval_measure(const struct BtDensity *density,
                                  double a,
                                  double b,
                                  struct BtValue *out);

// Generalized Takagi value at `x`; `depth = 0` selects the default depth.
//
// # Safety
// Pointers must be valid.
enum BtStatus bt_eval_takagi(const struct BtBase *base,
                             const struct BtDensity *density,
                             const char *x,
                             size_t depth,
                             struct BtValue *out);

// Kolmogorov-Smirnov distance of `len` samples to the standard normal law.
//
// # Safety
// `samples` must point to `len` doubles.
enum BtStatus bt_ks_statistic(const double *samples, size_t len, double *out);

// Runs `m` fast-mode orbits of length `n` and summarizes the normalized
// digit sums. When `sums` is non-null it receives the `m` normalized sums
// (`sums_len >= m`).
//
// # Safety
// Pointers must be valid; `sums` must hold `sums_len` doubles.
enum BtStatus bt_clt_run(const struct BtBase *base,
                         const struct BtDensity *density,
                         size_t n,
                         size_t m,
                         uint64_t seed,
                         struct BtCltSummary *summary,
                         double *sums,
                         size_t sums_len);

// Message for the last failure on this thread, or null. The caller owns
// the returned string.
char *bt_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void bt_string_free(char *s);

// Library version as a static NUL-terminated string.
const char *bt_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BETA_TAKAGI_H */
