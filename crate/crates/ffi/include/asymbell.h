#ifndef ASYMBELL_H
#define ASYMBELL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AsymbellStatus {
  ASYMBELL_STATUS_OK = 0,
  ASYMBELL_STATUS_NULL_POINTER = 1,
  ASYMBELL_STATUS_INVALID_ARGUMENT = 2,
  ASYMBELL_STATUS_DIMENSION = 3,
  ASYMBELL_STATUS_PRECONDITION = 4,
  ASYMBELL_STATUS_RESOURCE = 5,
  ASYMBELL_STATUS_NUMERICAL = 6,
  ASYMBELL_STATUS_PARSE = 7,
  ASYMBELL_STATUS_IO = 8,
  ASYMBELL_STATUS_BUFFER_TOO_SMALL = 9,
  ASYMBELL_STATUS_PANIC = 10,
} AsymbellStatus;

/**
 * Asymmetric Bell functional handle.
 */
typedef struct AsymbellFunctional AsymbellFunctional;

/**
 * Quantum strategy handle.
 */
typedef struct AsymbellStrategy AsymbellStrategy;

typedef struct AsymbellParsevalResult {
  /**
   * Largest `sum_b |Q(b|[y])|` over cosets.
   */
  double claim_lhs;
  /**
   * `n^{3/2}`.
   */
  double claim_rhs;
  double identity_lhs;
  double identity_rhs;
  bool passed;
} AsymbellParsevalResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *asymbell_version(void);

/**
 * Copies the calling thread's last error message into `buf`. An empty
 * string means the last call succeeded. `needed` receives the size
 * including the NUL.
 *
 * # Safety
 * `buf` must be writable for `cap` bytes; `needed` may be null.
 */
enum AsymbellStatus asymbell_last_error(char *buf, size_t cap, size_t *needed);

/**
 * `1/2 - 1/log n`. `log_base_code` is 2 or 0 for the natural logarithm.
 * `degenerate` is set when the rate is 0.
 *
 * # Safety
 * Out pointers must be valid; `degenerate` may be null.
 */
enum AsymbellStatus asymbell_eta_default(uint64_t n,
                                         uint32_t log_base_code,
                                         double *eta,
                                         bool *degenerate);

/**
 * Closed-form winning probability of the explicit KV strategy at `n = 2^l`.
 *
 * # Safety
 * `value` must be valid.
 */
enum AsymbellStatus asymbell_kv_explicit_value(uint32_t l, double eta, double *value);

/**
 * Dense functional; `coeffs[(x * bob_inputs + y) * outputs + a]`.
 *
 * # Safety
 * `coeffs` must hold `len` doubles; `handle` must be valid.
 */
enum AsymbellStatus asymbell_functional_new(size_t alice_inputs,
                                            size_t bob_inputs,
                                            size_t outputs,
                                            const double *coeffs,
                                            size_t len,
                                            struct AsymbellFunctional **handle);

/**
 * The asymmetric KV bias functional at `n = 2^l` with noise `eta`.
 *
 * # Safety
 * `handle` must be valid.
 */
enum AsymbellStatus asymbell_functional_asym_kv(uint32_t l,
                                                double eta,
                                                struct AsymbellFunctional **handle);

/**
 * Parses the JSON functional format.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `handle` must be valid.
 */
enum AsymbellStatus asymbell_functional_from_json(const char *json,
                                                  struct AsymbellFunctional **handle);

/**
 * Writes the canonical JSON form. With a short buffer the call fails with
 * `BufferTooSmall` and `needed` tells the required size.
 *
 * # Safety
 * `handle` must come from this library; `buf` must be writable for `cap` bytes.
 */
enum AsymbellStatus asymbell_functional_to_json(const struct AsymbellFunctional *handle,
                                                char *buf,
                                                size_t cap,
                                                size_t *needed);

/**
 * # Safety
 * Out pointers must be valid.
 */
enum AsymbellStatus asymbell_functional_shape(const struct AsymbellFunctional *handle,
                                              size_t *alice_inputs,
                                              size_t *bob_inputs,
                                              size_t *outputs);

/**
 * # Safety
 * `handle` must come from this library and not be used afterwards. Null is ignored.
 */
void asymbell_functional_free(struct AsymbellFunctional *handle);

/**
 * Classical bound by full enumeration of Alice's maps. Fails with
 * `Resource` when the enumeration is over budget.
 *
 * # Safety
 * `handle` must come from this library; `value` must be valid.
 */
enum AsymbellStatus asymbell_classical_bias_exact(const struct AsymbellFunctional *handle,
                                                  double *value);

/**
 * `<M, E>` for a correlation laid out like the coefficients.
 *
 * # Safety
 * `correlation` must hold `len` doubles; `value` must be valid.
 */
enum AsymbellStatus asymbell_evaluate(const struct AsymbellFunctional *handle,
                                      const double *correlation,
                                      size_t len,
                                      double *value);

/**
 * The explicit KV strategy at `n = 2^l` with Bob's POVMs replaced by the
 * Fourier-transformed observables, ready for the asymmetric KV functional.
 *
 * # Safety
 * `handle` must be valid.
 */
enum AsymbellStatus asymbell_strategy_kv_transformed(uint32_t l, struct AsymbellStrategy **handle);

/**
 * # Safety
 * `handle` must come from this library and not be used afterwards. Null is ignored.
 */
void asymbell_strategy_free(struct AsymbellStrategy *handle);

/**
 * `<M, E>` for the correlation the strategy produces.
 *
 * # Safety
 * Handles must come from this library; `value` must be valid.
 */
enum AsymbellStatus asymbell_evaluate_strategy(const struct AsymbellFunctional *functional,
                                               const struct AsymbellStrategy *strategy,
                                               double *value);

/**
 * Parseval claim for one map `E([y], k)`, indexed `y * n + k` with
 * `n = 2^l`.
 *
 * # Safety
 * `e` must hold `len` doubles; `result` must be valid.
 */
enum AsymbellStatus asymbell_parseval_check(uint32_t l,
                                            const double *e,
                                            size_t len,
                                            struct AsymbellParsevalResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASYMBELL_H */
