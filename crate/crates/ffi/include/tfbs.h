#ifndef TFBS_H
#define TFBS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TfbsStatus {
  TFBS_STATUS_OK = 0,
  TFBS_STATUS_NULL_POINTER = 1,
  TFBS_STATUS_INVALID_ARGUMENT = 2,
  TFBS_STATUS_OUT_OF_DOMAIN = 3,
  TFBS_STATUS_TOLERANCE = 4,
  TFBS_STATUS_SOLVER = 5,
  TFBS_STATUS_BUFFER_TOO_SMALL = 6,
  TFBS_STATUS_NO_EXACT_SOLUTION = 7,
  TFBS_STATUS_PANIC = 8,
} TfbsStatus;

/*
 SOE approximation of the Caputo kernel.
 */
typedef struct TfbsSoe TfbsSoe;

/*
 Solution on every time level together with the problem that produced it.
 */
typedef struct TfbsSolution TfbsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or null. Valid until the next failing call
 on the same thread.
 */
const char *tfbs_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *tfbs_version(void);

/*
 Build an SOE approximation valid on `[delta_t, horizon]` with tolerance `epsilon`.

 # Safety
 `out` must be null or valid for writing one pointer.
 */
enum TfbsStatus tfbs_soe_build(double alpha,
                               double epsilon,
                               double delta_t,
                               double horizon,
                               struct TfbsSoe **out);

/*
 Number of exponentials; 0 for a null handle.

 # Safety
 `soe` must be null or a live handle from [`tfbs_soe_build`].
 */
size_t tfbs_soe_len(const struct TfbsSoe *soe);

/*
 Copy nodes and weights into caller buffers of capacity `capacity`.

 # Safety
 `soe` must be a live handle; `nodes` and `weights` must be valid for `capacity` writes.
 */
enum TfbsStatus tfbs_soe_nodes(const struct TfbsSoe *soe,
                               double *nodes,
                               double *weights,
                               size_t capacity);

/*
 Evaluate the exponential sum at `t` (must lie in the certified range).

 # Safety
 `soe` must be a live handle; `value` must be valid for one write.
 */
enum TfbsStatus tfbs_soe_eval(const struct TfbsSoe *soe, double t, double *value);

/*
 Largest sampled deviation from the exact kernel over `samples` geometric points.

 # Safety
 `soe` must be a live handle; `value` must be valid for one write.
 */
enum TfbsStatus tfbs_soe_max_error(const struct TfbsSoe *soe, size_t samples, double *value);

/*
 Release a handle from [`tfbs_soe_build`]; null is ignored.

 # Safety
 `soe` must be null or a handle not yet freed.
 */
void tfbs_soe_free(struct TfbsSoe *soe);

/*
 Solve a built-in problem on a graded mesh `t_k = (k/n)^gamma`.

 `example` is 1 or 2; `variant` selects the coefficient set of example 2
 (0 printed, 1 transformed). `gamma <= 0` means `2/alpha`. `mode` is 0 for the
 fast history, 1 for direct summation.

 # Safety
 `out` must be null or valid for writing one pointer.
 */
enum TfbsStatus tfbs_solve_example(uint32_t example,
                                   uint32_t variant,
                                   double alpha,
                                   size_t n,
                                   size_t m,
                                   double gamma,
                                   uint32_t mode,
                                   double epsilon,
                                   struct TfbsSolution **out);

/*
 Number of time levels `N + 1`; 0 for a null handle.

 # Safety
 `sol` must be null or a live handle.
 */
size_t tfbs_solution_levels(const struct TfbsSolution *sol);

/*
 Interior nodes per level `M - 1`; 0 for a null handle.

 # Safety
 `sol` must be null or a live handle.
 */
size_t tfbs_solution_interior_len(const struct TfbsSolution *sol);

/*
 Time `t_level`.

 # Safety
 `sol` must be a live handle; `t` must be valid for one write.
 */
enum TfbsStatus tfbs_solution_time(const struct TfbsSolution *sol, size_t level, double *t);

/*
 Copy the interior values of one level into `buffer` of capacity `capacity`.

 # Safety
 `sol` must be a live handle; `buffer` must be valid for `capacity` writes.
 */
enum TfbsStatus tfbs_solution_copy_level(const struct TfbsSolution *sol,
                                         size_t level,
                                         double *buffer,
                                         size_t capacity);

/*
 Maximum over levels of the discrete L2 error; only for problems with a known solution.

 # Safety
 `sol` must be a live handle; `value` must be valid for one write.
 */
enum TfbsStatus tfbs_solution_l2_error_max(const struct TfbsSolution *sol, double *value);

/*
 Release a handle from [`tfbs_solve_example`]; null is ignored.

 # Safety
 `sol` must be null or a handle not yet freed.
 */
void tfbs_solution_free(struct TfbsSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TFBS_H */
