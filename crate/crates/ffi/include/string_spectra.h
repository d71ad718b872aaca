#ifndef STRING_SPECTRA_H
#define STRING_SPECTRA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `SS_OK` is zero; every other value is an error.
typedef enum SsStatus {
  SS_OK = 0,
  SS_NULL_POINTER = 1,
  SS_INVALID_UTF8 = 2,
  SS_INVALID_ARGUMENT = 3,
  SS_CONFIG = 4,
  SS_NUMERICAL = 5,
  SS_BUFFER_TOO_SMALL = 6,
  SS_IO = 7,
  SS_CHECKS_FAILED = 8,
  SS_PANIC = 9,
} SsStatus;

// Discretized operator set with a lazily computed spectrum.
typedef struct SsOperator SsOperator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static nul-terminated string.
const char *ss_version(void);

// Copies the last error message of this thread into `buf`.
//
// Writes at most `len` bytes including the terminating nul and returns the
// full message length without the nul, or 0 when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t ss_last_error(char *buf, size_t len);

// Builds an operator on `n` cells.
//
// `rho` and `alpha` are coefficient texts such as `"const 1"` or
// `"poly 1 0.5"`; `bc` is `max`, `min`, `zero0`, `zero1` or `omega:RE,IM`.
// On success `*out` owns a handle to release with `ss_operator_free`.
//
// # Safety
// String arguments must be valid nul-terminated strings; `out` must be writable.
enum SsStatus ss_operator_new(size_t n,
                              const char *rho,
                              const char *alpha,
                              const char *bc,
                              struct SsOperator **out);

// Releases a handle; null is ignored.
//
// # Safety
// `op` must be null or a handle from `ss_operator_new` not yet freed.
void ss_operator_free(struct SsOperator *op);

// Dimension of the Dirac operator, nodes plus cells.
//
// # Safety
// `op` must be a live handle and `dim` writable.
enum SsStatus ss_operator_dim(const struct SsOperator *op, size_t *dim);

// Kernel dimensions of `T`, `T*` and `D`.
//
// # Safety
// `op` must be a live handle; output pointers must be writable.
enum SsStatus ss_kernel_dims(const struct SsOperator *op,
                             size_t *ker_t,
                             size_t *ker_tstar,
                             size_t *ker_d);

// Eigenvalues of `D+B`, sorted by modulus then argument.
//
// Always stores the eigenvalue count in `*len`. Returns `SS_BUFFER_TOO_SMALL`
// without writing when `capacity` is smaller; pass `capacity = 0` to query.
//
// # Safety
// `op` must be a live handle not used concurrently; `re` and `im` must hold
// `capacity` doubles each; `len` must be writable.
enum SsStatus ss_spectrum(struct SsOperator *op,
                          double *re,
                          double *im,
                          size_t capacity,
                          size_t *len);

// Trace coefficient `t_{2n}` by the Neumann recursion.
//
// # Safety
// `op` must be a live handle and `value` writable.
enum SsStatus ss_trace_coefficient(const struct SsOperator *op, size_t n, double *value);

// Runs a verification command with a JSON configuration (`"{}"` for defaults).
//
// On return `*report_json` holds the report, to release with `ss_string_free`,
// or null on error. Returns `SS_CHECKS_FAILED` when the report has failures.
//
// # Safety
// `name` and `config_json` must be valid strings; `report_json` must be writable.
enum SsStatus ss_run_command(const char *name, const char *config_json, char **report_json);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must be null or a string from `ss_run_command` not yet freed.
void ss_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRING_SPECTRA_H */
