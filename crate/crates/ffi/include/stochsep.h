#ifndef STOCHSEP_H
#define STOCHSEP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SepStatus {
  SEP_STATUS_OK = 0,
  SEP_STATUS_NULL_POINTER = 1,
  SEP_STATUS_DOMAIN = 2,
  SEP_STATUS_DIMENSION_MISMATCH = 3,
  SEP_STATUS_UNREACHABLE = 4,
  SEP_STATUS_ILL_CONDITIONED = 5,
  SEP_STATUS_SINGULAR = 6,
  SEP_STATUS_NOT_SEPARABLE = 7,
  SEP_STATUS_NON_CONVERGENCE = 8,
  SEP_STATUS_INCOMPATIBLE = 9,
  SEP_STATUS_PARSE = 10,
  SEP_STATUS_FORMAT = 11,
  SEP_STATUS_IO = 12,
  SEP_STATUS_INVALID_UTF8 = 13,
  SEP_STATUS_PANIC = 14,
} SepStatus;

typedef enum SepDistribution {
  SEP_DISTRIBUTION_BALL = 0,
  SEP_DISTRIBUTION_CUBE = 1,
  SEP_DISTRIBUTION_GAUSSIAN = 2,
} SepDistribution;

typedef enum SepMatrixFormat {
  SEP_MATRIX_FORMAT_CSV = 0,
  SEP_MATRIX_FORMAT_BIN = 1,
} SepMatrixFormat;

typedef enum SepRule {
  SEP_RULE_BROKEN_STICK = 0,
  SEP_RULE_KAISER = 1,
  // Uses the accompanying `k`; `k = 0` keeps every component.
  SEP_RULE_FIXED = 2,
} SepRule;

// A fitted corrector: whitening followed by a predicate cascade.
typedef struct SepCorrector SepCorrector;

// Row-major matrix of finite doubles.
typedef struct SepMatrix SepMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The pointer stays
// valid until the next failing call on the same thread.
const char *sep_last_error(void);

// Library version as a static NUL-terminated string.
const char *sep_version(void);

// Single-point separation bound at fixed `eps`.
//
// # Safety
// `value` must be valid for writes.
enum SepStatus sep_bound_p1(size_t n, double m, double eps, double *value);

// Single-point bound maximised over `eps`; `eps_used` may be null.
//
// # Safety
// `value` must be valid for writes; `eps_used` is null or valid for writes.
enum SepStatus sep_bound_p1_max(size_t n, double m, double *value, double *eps_used);

// All-points separation bound at fixed `eps` (requires `m >= 2`).
//
// # Safety
// `value` must be valid for writes.
enum SepStatus sep_bound_pm(size_t n, double m, double eps, double *value);

// Union bound `1 - M (1 - P1)` maximised over `eps`.
//
// # Safety
// `value` must be valid for writes.
enum SepStatus sep_bound_pm_union(size_t n, double m, double *value);

// Two-neuron bound; pass `eps <= 0` to maximise over `eps`.
//
// # Safety
// `value` must be valid for writes.
enum SepStatus sep_bound_two_neuron(size_t n, double m, double eps, double *value);

// Largest sample size keeping the single-point bound at or above `p`.
//
// # Safety
// `m_max` must be valid for writes; `asymptotic` is null or valid for writes.
enum SepStatus sep_capacity_single(size_t n,
                                   double eps,
                                   double p,
                                   double *m_max,
                                   double *asymptotic);

// Largest sample size keeping the all-points bound at or above `q`.
//
// # Safety
// `m_max` must be valid for writes.
enum SepStatus sep_capacity_all(size_t n, double eps, double q, double *m_max);

// Copies `rows * cols` row-major doubles into a new matrix.
//
// # Safety
// `data` points to `rows * cols` readable doubles; `out` must be valid for writes.
enum SepStatus sep_matrix_new(size_t rows, size_t cols, const double *data, struct SepMatrix **out);

// Draws `m` rows from the chosen distribution on stream `(seed, stream)`.
//
// # Safety
// `out` must be valid for writes.
enum SepStatus sep_matrix_sample(enum SepDistribution dist,
                                 size_t n,
                                 size_t m,
                                 uint64_t seed,
                                 uint64_t stream,
                                 struct SepMatrix **out);

// Uniform sample from the ellipsoid with the given `n` semi-axes.
//
// # Safety
// `axes` points to `n` readable doubles; `out` must be valid for writes.
enum SepStatus sep_matrix_sample_ellipsoid(const double *axes,
                                           size_t n,
                                           size_t m,
                                           uint64_t seed,
                                           uint64_t stream,
                                           struct SepMatrix **out);

// # Safety
// `file` is a NUL-terminated path; `out` must be valid for writes.
enum SepStatus sep_matrix_read(const char *file,
                               enum SepMatrixFormat format,
                               struct SepMatrix **out);

// # Safety
// `m` is a live matrix handle; `file` is a NUL-terminated path.
enum SepStatus sep_matrix_write(const struct SepMatrix *m,
                                const char *file,
                                enum SepMatrixFormat format);

// Row count, or 0 for a null handle.
//
// # Safety
// `m` is null or a live matrix handle.
size_t sep_matrix_rows(const struct SepMatrix *m);

// Column count, or 0 for a null handle.
//
// # Safety
// `m` is null or a live matrix handle.
size_t sep_matrix_cols(const struct SepMatrix *m);

// Borrowed pointer to the row-major data, valid while the handle lives.
//
// # Safety
// `m` is null or a live matrix handle.
const double *sep_matrix_data(const struct SepMatrix *m);

// # Safety
// `m` is null or a handle not yet freed.
void sep_matrix_free(struct SepMatrix *m);

// Separability census. `per_point` is null or has room for one bool per row.
//
// # Safety
// `m` is a live matrix handle; `count` and `f1` must be valid for writes.
enum SepStatus sep_census(const struct SepMatrix *m, size_t *count, double *f1, bool *per_point);

// Spherical cap around the mean of `positives` through `query`.
//
// # Safety
// `positives` is a live handle; `query` points to `len` doubles; `out` valid for writes.
enum SepStatus sep_corrector_spherical_cap(const struct SepMatrix *positives,
                                           const double *query,
                                           size_t len,
                                           struct SepCorrector **out);

// Fisher cap for one query in the whitened space fitted on `positives`.
//
// # Safety
// `positives` is a live handle; `query` points to `len` doubles; `out` valid for writes.
enum SepStatus sep_corrector_fisher_single(const struct SepMatrix *positives,
                                           const double *query,
                                           size_t len,
                                           enum SepRule rule,
                                           size_t k,
                                           bool whiten,
                                           struct SepCorrector **out);

// Pooled-covariance Fisher model flagging every row of `trash`.
//
// # Safety
// `positives` and `trash` are live handles; `out` valid for writes.
enum SepStatus sep_corrector_fisher_multi(const struct SepMatrix *positives,
                                          const struct SepMatrix *trash,
                                          enum SepRule rule,
                                          size_t k,
                                          bool whiten,
                                          struct SepCorrector **out);

// Two-neuron corrector for one query.
//
// # Safety
// `positives` is a live handle; `query` points to `len` doubles; `out` valid for writes.
enum SepStatus sep_corrector_two_neuron(const struct SepMatrix *positives,
                                        const double *query,
                                        size_t len,
                                        enum SepRule rule,
                                        size_t k,
                                        bool whiten,
                                        struct SepCorrector **out);

// OR of `count` correctors sharing one whitening.
//
// # Safety
// `models` points to `count` live corrector handles; `out` valid for writes.
enum SepStatus sep_corrector_assemble(const struct SepCorrector *const *models,
                                      size_t count,
                                      struct SepCorrector **out);

// Flags one vector of length `len`.
//
// # Safety
// `c` is a live handle; `x` points to `len` doubles; `flag` valid for writes.
enum SepStatus sep_corrector_apply(const struct SepCorrector *c,
                                   const double *x,
                                   size_t len,
                                   bool *flag);

// Flags every row of `m` into `flags`, which has room for one bool per row.
//
// # Safety
// `c` and `m` are live handles; `flags` points to `rows(m)` writable bools.
enum SepStatus sep_corrector_apply_matrix(const struct SepCorrector *c,
                                          const struct SepMatrix *m,
                                          bool *flags);

// Input dimension of the corrector, or 0 for a null handle.
//
// # Safety
// `c` is null or a live handle.
size_t sep_corrector_input_dim(const struct SepCorrector *c);

// # Safety
// `file` is a NUL-terminated path; `out` valid for writes.
enum SepStatus sep_corrector_load(const char *file, struct SepCorrector **out);

// # Safety
// `c` is a live handle; `file` is a NUL-terminated path.
enum SepStatus sep_corrector_save(const struct SepCorrector *c, const char *file);

// Serialises the model as JSON into a new string released with [`sep_string_free`].
//
// # Safety
// `c` is a live handle; `out` valid for writes.
enum SepStatus sep_corrector_to_json(const struct SepCorrector *c, char **out);

// # Safety
// `json` is a NUL-terminated UTF-8 string; `out` valid for writes.
enum SepStatus sep_corrector_from_json(const char *json, struct SepCorrector **out);

// # Safety
// `c` is null or a handle not yet freed.
void sep_corrector_free(struct SepCorrector *c);

// # Safety
// `s` is null or a string returned by this library and not yet freed.
void sep_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STOCHSEP_H */
