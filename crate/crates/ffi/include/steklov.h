/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef STEKLOV_H
#define STEKLOV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define STK_OK 0

#define STK_ERR_NULL 1

#define STK_ERR_VALIDATION 2

#define STK_ERR_ARGUMENT 3

#define STK_ERR_RESOURCE 4

#define STK_ERR_PRECONDITION 5

#define STK_ERR_NUMERICAL 6

#define STK_ERR_IO 7

#define STK_ERR_PANIC 8

/**
 * Conforming triangle mesh of a polygon.
 */
typedef struct StkMesh StkMesh;

/**
 * Simple counter-clockwise polygon.
 */
typedef struct StkPolygon StkPolygon;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length without the NUL;
 * 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t stk_last_error(char *buf, uintptr_t len);

/**
 * Builds a polygon from `n` interleaved `x, y` pairs in either orientation.
 *
 * # Safety
 * `xy` must be valid for `2 n` reads and `out` for one write.
 */
int32_t stk_polygon_new(const double *xy, uintptr_t n, struct StkPolygon **out);

/**
 * Regular polygon with `sides` vertices on the circle of the given radius.
 *
 * # Safety
 * `out` must be valid for one write.
 */
int32_t stk_polygon_regular(uintptr_t sides, double circumradius, struct StkPolygon **out);

/**
 * # Safety
 * `poly` must be null or a handle from this library not yet freed.
 */
void stk_polygon_free(struct StkPolygon *poly);

/**
 * Perimeter, area and isoperimetric ratio `|∂Ω| / |Ω|^{1/2}`.
 *
 * # Safety
 * `poly` must be a live handle; each out pointer must be valid for one write.
 */
int32_t stk_polygon_metrics(const struct StkPolygon *poly,
                            double *perimeter,
                            double *area,
                            double *iso_ratio);

/**
 * Sampled boundary distortion `sup |∂Ω ∩ B(x, r)| / r`, a lower estimate.
 *
 * # Safety
 * `poly` must be a live handle and `out` valid for one write.
 */
int32_t stk_polygon_distortion(const struct StkPolygon *poly, double *out);

/**
 * Triangulates with edges no longer than `h_max`, then refines uniformly.
 *
 * # Safety
 * `poly` must be a live handle and `out` valid for one write.
 */
int32_t stk_mesh_build(const struct StkPolygon *poly,
                       double h_max,
                       uintptr_t refinements,
                       struct StkMesh **out);

/**
 * # Safety
 * `mesh` must be null or a handle from this library not yet freed.
 */
void stk_mesh_free(struct StkMesh *mesh);

/**
 * # Safety
 * `mesh` must be a live handle; out pointers valid for one write.
 */
int32_t stk_mesh_size(const struct StkMesh *mesh, uintptr_t *nodes, uintptr_t *triangles);

/**
 * Writes the discrete `σ_{2,1} .. σ_{2,kmax}` (ascending, first is 0) into `values`.
 *
 * # Safety
 * `mesh` must be a live handle and `values` valid for `kmax` writes.
 */
int32_t stk_spectrum_p2(const struct StkMesh *mesh, uintptr_t kmax, double *values);

/**
 * `σ_{p,2}` by projected descent from `starts` seeded starts.
 * `stationary` receives 1 when the projected gradient met the tolerance.
 *
 * # Safety
 * `mesh` must be a live handle; out pointers valid for one write.
 */
int32_t stk_sigma2_p(const struct StkMesh *mesh,
                     double p,
                     uintptr_t starts,
                     uint64_t seed,
                     double *value,
                     double *residual,
                     int32_t *stationary);

/**
 * Certified upper bound for `σ_{p,k}` from packed test functions.
 * A non-positive `resolution` selects the default sub-segment length.
 *
 * # Safety
 * `poly` must be a live handle; out pointers valid for one write.
 */
int32_t stk_certified_bound(const struct StkPolygon *poly,
                            double p,
                            uintptr_t k,
                            double resolution,
                            double *value,
                            double *achieved_c);

/**
 * Closed-form right-hand side for packing constant `c_n`.
 * `supercritical` receives 1 for the `p > 2` branch.
 *
 * # Safety
 * `poly` must be a live handle; out pointers valid for one write.
 */
int32_t stk_theoretical_bound(const struct StkPolygon *poly,
                              double p,
                              uintptr_t k,
                              double c_n,
                              double *value,
                              int32_t *supercritical);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEKLOV_H */
