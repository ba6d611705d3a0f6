#ifndef EMISSION_BOUNDS_H
#define EMISSION_BOUNDS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Ensemble geometries, mirroring the library's shapes.
 */
typedef enum EbShape {
  EB_SHAPE_LATTICE = 0,
  EB_SHAPE_UNIFORM_BOX = 1,
  EB_SHAPE_UNIFORM_BALL = 2,
  EB_SHAPE_UNIFORM_DISK = 3,
  EB_SHAPE_UNIFORM_LINE = 4,
  EB_SHAPE_GAUSSIAN = 5,
} EbShape;

/**
 * Result codes of every fallible call.
 */
typedef enum EbStatus {
  EB_STATUS_OK = 0,
  EB_STATUS_NULL_POINTER = 1,
  EB_STATUS_INVALID_ARGUMENT = 2,
  EB_STATUS_INSUFFICIENT_ATOMS = 3,
  EB_STATUS_QUADRATURE_FAILURE = 4,
  EB_STATUS_EIGENSOLVER_FAILURE = 5,
  EB_STATUS_NOT_POSITIVE_SEMIDEFINITE = 6,
  EB_STATUS_MODE_OUT_OF_RANGE = 7,
  EB_STATUS_INVALID_DATA = 8,
  EB_STATUS_UNSUPPORTED_KERNEL = 9,
  EB_STATUS_CONFIG_ERROR = 10,
  EB_STATUS_ARCHIVE_ERROR = 11,
  EB_STATUS_IO_ERROR = 12,
  EB_STATUS_PANIC = 13,
} EbStatus;

/**
 * Opaque set of atom positions.
 */
typedef struct EbConfiguration EbConfiguration;

/**
 * Opaque dissipative matrix.
 */
typedef struct EbMatrix EbMatrix;

/**
 * Principal eigenpair summary; rates in the units of the matrix.
 */
typedef struct EbPrincipal {
  double gamma_max;
  double l1_sq;
  double lower_bound;
  double upper_bound;
  double residual;
  size_t iterations;
  bool degenerate;
} EbPrincipal;

/**
 * Vector relaxation summary.
 */
typedef struct EbSdp {
  double value;
  double sandwich_lower;
  double sandwich_upper;
  size_t iterations;
  size_t restarts;
  bool converged;
  bool monotone;
} EbSdp;

/**
 * Power-law fit y ≈ β N^α.
 */
typedef struct EbFit {
  double alpha;
  double beta;
  double sigma_alpha;
  double r_squared;
} EbFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buffer` (NUL
 * terminated, truncated to `capacity`) and returns its full length in bytes.
 *
 * # Safety
 * `buffer` must be null or point to `capacity` writable bytes.
 */
size_t eb_last_error_message(char *buffer, size_t capacity);

/**
 * Library version as a static NUL-terminated string.
 */
const char *eb_version(void);

/**
 * Draws `n_total` atoms of the given geometry at spacing d/λ0.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to free
 * with [`eb_configuration_free`].
 */
enum EbStatus eb_configuration_sample(uint8_t dimension,
                                      enum EbShape shape,
                                      size_t n_total,
                                      double spacing_over_wavelength,
                                      uint64_t seed,
                                      struct EbConfiguration **out);

/**
 * Configuration from `n` positions given as consecutive (x, y, z) triples
 * in units of λ0.
 *
 * # Safety
 * `xyz` must point to `3 n` doubles and `out` must be valid.
 */
enum EbStatus eb_configuration_from_positions(const double *xyz,
                                              size_t n,
                                              struct EbConfiguration **out);

/**
 * Number of atoms, or 0 for a null handle.
 *
 * # Safety
 * `config` must be null or a live handle.
 */
size_t eb_configuration_len(const struct EbConfiguration *config);

/**
 * Copies positions as (x, y, z) triples into `xyz`, which must hold
 * `3 * len` doubles.
 *
 * # Safety
 * `config` must be a live handle and `xyz` must hold `capacity` doubles.
 */
enum EbStatus eb_configuration_positions(const struct EbConfiguration *config,
                                         double *xyz,
                                         size_t capacity);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void eb_configuration_free(struct EbConfiguration *config);

/**
 * Builds Γ for a configuration. `kernel_json` is a kernel specification,
 * e.g. `{"variant": {"type": "scalar"}}`.
 *
 * # Safety
 * `config` must be live, `kernel_json` NUL terminated and `out` valid.
 */
enum EbStatus eb_matrix_build(const struct EbConfiguration *config,
                              const char *kernel_json,
                              struct EbMatrix **out);

/**
 * Dicke matrix with every entry equal to `gamma_0`.
 *
 * # Safety
 * `out` must be valid.
 */
enum EbStatus eb_matrix_dicke(size_t n, double gamma_0, struct EbMatrix **out);

/**
 * Matrix dimension, or 0 for a null handle.
 *
 * # Safety
 * `matrix` must be null or live.
 */
size_t eb_matrix_dim(const struct EbMatrix *matrix);

/**
 * True for complex Hermitian (directional) matrices.
 *
 * # Safety
 * `matrix` must be null or live.
 */
bool eb_matrix_is_complex(const struct EbMatrix *matrix);

/**
 * # Safety
 * `matrix` must be null or a handle not yet freed.
 */
void eb_matrix_free(struct EbMatrix *matrix);

/**
 * Writes the matrix in the little-endian binary export format.
 *
 * # Safety
 * `matrix` must be live and `path` NUL terminated.
 */
enum EbStatus eb_matrix_write(const struct EbMatrix *matrix, const char *path);

/**
 * Reads a matrix written by [`eb_matrix_write`].
 *
 * # Safety
 * `path` must be NUL terminated and `out` valid.
 */
enum EbStatus eb_matrix_read(const char *path, struct EbMatrix **out);

/**
 * Principal eigenpair with ‖ψ‖₁² and the rate bounds.
 *
 * # Safety
 * `matrix` must be live and `out` valid.
 */
enum EbStatus eb_principal(const struct EbMatrix *matrix,
                           double tol,
                           size_t max_iter,
                           struct EbPrincipal *out);

/**
 * (Tr Γ^m)^{1/m} for even m ≥ 2.
 *
 * # Safety
 * `matrix` must be live and `out` valid.
 */
enum EbStatus eb_gelfand(const struct EbMatrix *matrix, uint32_t m, double *out);

/**
 * Vector relaxation by block coordinate ascent.
 *
 * # Safety
 * `matrix` must be live and `out` valid.
 */
enum EbStatus eb_solve_sdp(const struct EbMatrix *matrix,
                           double tol,
                           size_t max_iter,
                           size_t restarts,
                           uint64_t seed,
                           struct EbSdp *out);

/**
 * Least-squares fit of ln mean against ln N over `len` points.
 *
 * # Safety
 * `n` and `mean` must point to `len` values and `out` must be valid.
 */
enum EbStatus eb_fit_power_law(const size_t *n, const double *mean, size_t len, struct EbFit *out);

/**
 * Runs the experiment described by the JSON configuration file at `path`,
 * resuming an existing archive when `resume` is true.
 *
 * # Safety
 * `path` must be NUL terminated.
 */
enum EbStatus eb_run(const char *path, bool resume);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMISSION_BOUNDS_H */
