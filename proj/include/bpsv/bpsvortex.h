/* C interface to the bpsv vortex solvers.
 *
 * Every call returns a bpsv_status; on failure bpsv_last_error() holds a
 * message for the calling thread. Handles are opaque and owned by the caller.
 * Strings returned through char** are freed with bpsv_string_free.
 */
#ifndef BPSVORTEX_H
#define BPSVORTEX_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define BPSV_API __declspec(dllexport)
#else
#define BPSV_API __attribute__((visibility("default")))
#endif

typedef enum {
    BPSV_OK = 0,
    BPSV_E_DOMAIN = 1,
    BPSV_E_SHAPE = 2,
    BPSV_E_SOLVABILITY = 3,
    BPSV_E_GATE = 4,
    BPSV_E_NOT_CONVERGED = 5,
    BPSV_E_DIVERGED = 6,
    BPSV_E_UNDERFLOW = 7,
    BPSV_E_WRONG_DOMAIN = 8,
    BPSV_E_IO = 9,
    BPSV_E_PARSE = 10,
    BPSV_E_INVALID_ARGUMENT = 11,
    BPSV_E_INTERNAL = 99
} bpsv_status;

typedef struct bpsv_config bpsv_config;
typedef struct bpsv_problem bpsv_problem;
typedef struct bpsv_result bpsv_result;

typedef struct {
    double tol;          /* gradient L2 norm */
    double residual_tol; /* PDE residual */
    int max_outer;
    int max_cg;
    double max_step;
    int force;           /* torus: solve even if the existence gate fails */
} bpsv_solver_options;

typedef enum {
    BPSV_FIELD_EXP_U = 0,
    BPSV_FIELD_U = 1,
    BPSV_FIELD_W = 2,
    BPSV_FIELD_V = 3,
    BPSV_FIELD_Q_ABS = 4,
    BPSV_FIELD_F = 5
} bpsv_field;

typedef struct {
    int l;
    int periodic;
    int nx, ny;          /* stored nodes (interior nodes on the plane) */
    double x0, y0, hx, hy;
    int iterations;
    double grad_norm;
    double residual;
    double residual_max;
    int converged;
} bpsv_result_info;

typedef struct {
    int converged;
    int iterations;
    double grad_norm;
    double residual;
    double flux_err_max; /* relative to 4 pi max(1, N_j) */
    double K_err_max;    /* relative; NaN on the plane */
    double decay_rate;   /* NaN when no decay window is configured */
    int checks_passed;
    char failures[256];  /* comma-separated names of failing checks */
} bpsv_run_summary;

BPSV_API const char* bpsv_version(void);
BPSV_API const char* bpsv_last_error(void);
BPSV_API const char* bpsv_status_name(bpsv_status status);
BPSV_API void bpsv_string_free(char* s);
BPSV_API void bpsv_solver_options_default(bpsv_solver_options* options);

/* ---- coupling ---- */
/* Fills l*l row-major buffers; any pointer may be NULL. */
BPSV_API bpsv_status bpsv_coupling(int l, double* A, double* L, double* L_inv, double* A_inv, double* eigenvalues);

/* ---- problems ----
 * counts[j] points for component j; xy holds all points component by
 * component as x0, y0, x1, y1, ...
 */
BPSV_API bpsv_status bpsv_problem_create_torus(int l, double Lx, double Ly, int nx, int ny, const int* counts,
                                               const double* xy, bpsv_problem** out);
BPSV_API bpsv_status bpsv_problem_create_plane(int l, double R, int nx, int ny, double mu, const int* counts,
                                               const double* xy, bpsv_problem** out);
BPSV_API void bpsv_problem_destroy(bpsv_problem* problem);

/* Torus only. admissible = all K_j > 0; K and margins hold l values each (may be NULL). */
BPSV_API bpsv_status bpsv_problem_gate(const bpsv_problem* problem, int* admissible, double* threshold, double* K,
                                       double* margins);
/* Plane only: the background constant actually used after escalation. */
BPSV_API bpsv_status bpsv_problem_mu(const bpsv_problem* problem, double* mu);
BPSV_API bpsv_status bpsv_problem_energy(const bpsv_problem* problem, const double* w, size_t len, double* energy);
BPSV_API bpsv_status bpsv_problem_gradient(const bpsv_problem* problem, const double* w, size_t len, double* grad);

/* Starts from w = 0, or from w0 (l * nodes values) when non-NULL. On
 * BPSV_E_NOT_CONVERGED *out still receives the partial result. */
BPSV_API bpsv_status bpsv_solve(const bpsv_problem* problem, const bpsv_solver_options* options, const double* w0,
                                bpsv_result** out);
BPSV_API void bpsv_result_destroy(bpsv_result* result);
BPSV_API bpsv_status bpsv_result_info_get(const bpsv_result* result, bpsv_result_info* info);
/* Copies component `component` (0-based) of a field into buf (nx*ny values). */
BPSV_API bpsv_status bpsv_result_field(const bpsv_result* result, bpsv_field field, int component, double* buf,
                                       size_t len);
BPSV_API bpsv_status bpsv_result_max_u_distance(const bpsv_result* a, const bpsv_result* b, double* distance);

/* ---- diagnostics ---- */
BPSV_API bpsv_status bpsv_check_flux(const bpsv_result* result, double* flux);
BPSV_API bpsv_status bpsv_check_K_identity(const bpsv_problem* problem, const bpsv_result* result, double* residuals);
BPSV_API bpsv_status bpsv_check_uniqueness(const bpsv_problem* problem, int trials, uint64_t seed,
                                           const bpsv_solver_options* options, double* delta);
BPSV_API bpsv_status bpsv_decay_rate(const bpsv_result* result, double r1, double r2, double* rate, double* grad_rate);
/* All components share the n points xy; domain taken from `like`. */
BPSV_API bpsv_status bpsv_check_symmetric(const bpsv_problem* like, int n, const double* xy,
                                          const bpsv_solver_options* options, double* inter_component,
                                          double* scalar_profile);

/* ---- writers ---- */
BPSV_API bpsv_status bpsv_result_write_fields(const bpsv_result* result, const char* dir);
BPSV_API bpsv_status bpsv_result_write_history(const bpsv_result* result, const char* path);

/* ---- batch runs (JSON config documents) ---- */
/* base_dir resolves relative "vortices_file" paths; may be NULL. */
BPSV_API bpsv_status bpsv_config_parse(const char* json_text, const char* base_dir, bpsv_config** out);
BPSV_API void bpsv_config_destroy(bpsv_config* config);
BPSV_API bpsv_status bpsv_config_clone(const bpsv_config* config, bpsv_config** out);
BPSV_API bpsv_status bpsv_config_set_seed(bpsv_config* config, uint64_t seed);
BPSV_API bpsv_status bpsv_config_set_force(bpsv_config* config, int force);
/* name: "nx", "R" (spacing kept fixed) or "mu". */
BPSV_API bpsv_status bpsv_config_set_parameter(bpsv_config* config, const char* name, double value);
/* Output directory named in the config (caller frees). */
BPSV_API bpsv_status bpsv_config_output(const bpsv_config* config, char** out);
/* Gate report text; torus configs only. */
BPSV_API bpsv_status bpsv_config_check(const bpsv_config* config, int* admissible, char** report);
/* Solve + diagnostics; writes artifacts to out_dir unless it is NULL or "". */
BPSV_API bpsv_status bpsv_config_run(const bpsv_config* config, const char* out_dir, bpsv_run_summary* summary);

#ifdef __cplusplus
}
#endif

#endif
