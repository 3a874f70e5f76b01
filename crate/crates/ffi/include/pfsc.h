#ifndef PFSC_H
#define PFSC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PfscField {
  PFSC_FIELD_THETA = 0,
  PFSC_FIELD_PHI = 1,
} PfscField;

typedef enum PfscSlot {
  // Distributed heat source, `nt` levels on the nodes.
  PFSC_SLOT_U = 0,
  // Boundary source, `nt` levels on the boundary nodes.
  PFSC_SLOT_V = 1,
  // Phase indicator, `nt + 1` levels on the nodes.
  PFSC_SLOT_ETA = 2,
} PfscSlot;

typedef enum PfscStatus {
  PFSC_STATUS_OK = 0,
  PFSC_STATUS_NULL_POINTER = 1,
  PFSC_STATUS_INVALID_STRING = 2,
  PFSC_STATUS_CONFIG = 3,
  PFSC_STATUS_DOMAIN = 4,
  PFSC_STATUS_SOLVER = 5,
  PFSC_STATUS_OUT_OF_RANGE = 6,
  PFSC_STATUS_IO = 7,
  PFSC_STATUS_PANIC = 8,
} PfscStatus;

typedef struct PfscProblem PfscProblem;

typedef struct PfscSolution PfscSolution;

typedef struct PfscTrajectory PfscTrajectory;

typedef struct PfscSummary {
  double cost;
  double residual;
  size_t iterations;
  bool converged;
} PfscSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or "" after a success.
// Valid until the next `pfsc_*` call on the same thread.
const char *pfsc_last_error(void);

// Builds a problem from a JSON run configuration. `file` fields are not
// supported here; use `pfsc_problem_from_file`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum PfscStatus pfsc_problem_from_json(const char *json, struct PfscProblem **out);

// Builds a problem from a configuration file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum PfscStatus pfsc_problem_from_file(const char *path, struct PfscProblem **out);

// # Safety
// `problem` must come from `pfsc_problem_from_*` or be null.
void pfsc_problem_free(struct PfscProblem *problem);

// Node count, boundary node count and number of time steps `nt`.
//
// # Safety
// All pointers must be valid.
enum PfscStatus pfsc_problem_dims(const struct PfscProblem *problem,
                                  size_t *nodes,
                                  size_t *boundary_nodes,
                                  size_t *nt);

// Solves the state equations for the configured start controls.
//
// # Safety
// `problem` must be a live handle and `out` a valid pointer.
enum PfscStatus pfsc_forward(const struct PfscProblem *problem, struct PfscTrajectory **out);

// Copies one time level of `θ` or `φ` into `buf`, which must hold at least
// the node count.
//
// # Safety
// `traj` must be a live handle and `buf` valid for `len` writes.
enum PfscStatus pfsc_trajectory_level(const struct PfscTrajectory *traj,
                                      enum PfscField field,
                                      size_t level,
                                      double *buf,
                                      size_t len);

// # Safety
// `traj` must come from `pfsc_forward` or be null.
void pfsc_trajectory_free(struct PfscTrajectory *traj);

// Minimizes the exact-`j` cost at the configured `eps` by projected
// gradient, starting from the configured controls.
//
// # Safety
// `problem` must be a live handle and `out` a valid pointer.
enum PfscStatus pfsc_optimize(const struct PfscProblem *problem, struct PfscSolution **out);

// # Safety
// `sol` must be a live handle and `out` a valid pointer.
enum PfscStatus pfsc_solution_summary(const struct PfscSolution *sol, struct PfscSummary *out);

// Copies one level of an optimal control into `buf`.
//
// # Safety
// `sol` must be a live handle and `buf` valid for `len` writes.
enum PfscStatus pfsc_solution_control(const struct PfscSolution *sol,
                                      enum PfscSlot slot,
                                      size_t level,
                                      double *buf,
                                      size_t len);

// # Safety
// `sol` must come from `pfsc_optimize` or be null.
void pfsc_solution_free(struct PfscSolution *sol);

// Runs a CLI subcommand (`forward`, `gradcheck`, `optimize`, `continue`,
// `sweep`) on a config file and writes its artifacts to `out_dir`.
//
// # Safety
// All strings must be NUL-terminated.
enum PfscStatus pfsc_run(const char *command, const char *config_path, const char *out_dir);

// Moreau envelope `j_σ(r)` of `j(r) = |r − θ_c|`.
//
// # Safety
// `out` must be a valid pointer.
enum PfscStatus pfsc_moreau_j(double theta_c, double r, double sigma, double *out);

// Resolvent `(I + σ∂j)⁻¹(r)`.
//
// # Safety
// `out` must be a valid pointer.
enum PfscStatus pfsc_resolvent(double theta_c, double r, double sigma, double *out);

// Fenchel-Young gap `j(r) + j*(w) − r·w`.
//
// # Safety
// `out` must be a valid pointer.
enum PfscStatus pfsc_fenchel_gap(double theta_c, double r, double w, double *out);

// `β(r) = r − 1/r` for `r > 0`.
//
// # Safety
// `out` must be a valid pointer.
enum PfscStatus pfsc_beta(double r, double *out);

// # Safety
// `out` must be a valid pointer.
enum PfscStatus pfsc_beta_inverse(double w, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PFSC_H */
