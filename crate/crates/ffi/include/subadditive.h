#ifndef SUBADDITIVE_H
#define SUBADDITIVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/* Edge endpoint standing for the cube boundary in dual solutions. */
#define SA_BOUNDARY SIZE_MAX



typedef enum SaStatus {
  SA_STATUS_OK = 0,
  SA_STATUS_NULL_POINTER = 1,
  SA_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input is larger than the exact solver accepts.
   */
  SA_STATUS_SIZE_LIMIT = 3,
  SA_STATUS_PARSE = 4,
  SA_STATUS_IO = 5,
  SA_STATUS_PANIC = 6,
} SaStatus;

typedef enum SaFunctional {
  SA_FUNCTIONAL_MM = 0,
  SA_FUNCTIONAL_MST = 1,
  SA_FUNCTIONAL_TSP = 2,
} SaFunctional;

typedef enum SaVariant {
  SA_VARIANT_PLAIN = 0,
  SA_VARIANT_DUAL = 1,
} SaVariant;

typedef enum SaMode {
  SA_MODE_EXACT = 0,
  SA_MODE_HEURISTIC = 1,
} SaMode;

/**
 * Opaque point set.
 */
typedef struct SaPointSet SaPointSet;

/**
 * Opaque solution.
 */
typedef struct SaSolution SaSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *sa_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sa_version(void);

/**
 * Creates a point set from `n` points stored row-major in `coords`
 * (`n * dim` doubles). `coords` may be null when `n` is 0.
 *
 * # Safety
 * `coords` must point to `n * dim` readable doubles and `out` must be a
 * valid pointer.
 */
enum SaStatus sa_pointset_new(size_t dim, const double *coords, size_t n, struct SaPointSet **out);

/**
 * Appends one point of `dim` coordinates.
 *
 * # Safety
 * `ps` must come from [`sa_pointset_new`]; `x` must point to `dim` doubles.
 */
enum SaStatus sa_pointset_push(struct SaPointSet *ps, const double *x, size_t dim);

/**
 * Number of points; 0 for a null handle.
 *
 * # Safety
 * `ps` must be null or come from [`sa_pointset_new`].
 */
size_t sa_pointset_len(const struct SaPointSet *ps);

/**
 * # Safety
 * `ps` must be null or come from [`sa_pointset_new`], and not be used again.
 */
void sa_pointset_free(struct SaPointSet *ps);

/**
 * Solves on the cube with lower corner `corner` (`dim` doubles) and side
 * `side`; a null `corner` means the unit cube and ignores `side`. A
 * negative `factor` picks the boundary cost factor from `p`.
 *
 * # Safety
 * `ps` must come from [`sa_pointset_new`]; `corner` must be null or point
 * to as many doubles as the set's dimension; `out` must be valid.
 */
enum SaStatus sa_solve(const struct SaPointSet *ps,
                       enum SaFunctional functional,
                       double p,
                       enum SaVariant variant,
                       enum SaMode mode,
                       const double *corner,
                       double side,
                       double factor,
                       struct SaSolution **out);

/**
 * Objective value; NaN for a null handle.
 *
 * # Safety
 * `sol` must be null or come from [`sa_solve`].
 */
double sa_solution_value(const struct SaSolution *sol);

/**
 * Whether the value is a certified optimum (false for heuristics).
 *
 * # Safety
 * `sol` must be null or come from [`sa_solve`].
 */
bool sa_solution_certified(const struct SaSolution *sol);

/**
 * # Safety
 * `sol` must be null or come from [`sa_solve`].
 */
size_t sa_solution_edge_count(const struct SaSolution *sol);

/**
 * Endpoints of edge `k`; [`SA_BOUNDARY`] marks the boundary.
 *
 * # Safety
 * `sol` must come from [`sa_solve`]; `i` and `j` must be valid pointers.
 */
enum SaStatus sa_solution_edge(const struct SaSolution *sol, size_t k, size_t *i, size_t *j);

/**
 * Boundary attachment count and cost of a dual solution.
 *
 * # Safety
 * `sol` must come from [`sa_solve`]; `count` and `cost` must be valid.
 */
enum SaStatus sa_solution_boundary(const struct SaSolution *sol, size_t *count, double *cost);

/**
 * # Safety
 * `sol` must be null or come from [`sa_solve`], and not be used again.
 */
void sa_solution_free(struct SaSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBADDITIVE_H */
