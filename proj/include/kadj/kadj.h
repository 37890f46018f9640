/* C API for the kadj library: matrix-free differentiable Krylov methods.
 *
 * Conventions
 *   - Every fallible function returns a kadj_status; 0 (KADJ_OK) means
 *     success. On failure a thread-local message is set, readable via
 *     kadj_last_error_message(), and all output buffers are unspecified.
 *   - Matrices cross the boundary in row-major order, dimensions first.
 *   - `theta` may be NULL anywhere it appears: the operator's default
 *     parameters are used.
 *   - Handles are opaque; each kadj_*_create / kadj_*_run has a matching
 *     kadj_*_destroy. Destroy functions accept NULL.
 */
#ifndef KADJ_H
#define KADJ_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(KADJ_BUILD_SHARED)
#define KADJ_API __declspec(dllexport)
#else
#define KADJ_API __declspec(dllimport)
#endif
#else
#define KADJ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int64_t kadj_index;

typedef enum kadj_status {
  KADJ_OK = 0,
  KADJ_ERR_INVALID_ARGUMENT = 1,
  KADJ_ERR_DIMENSION = 2,
  KADJ_ERR_DOMAIN = 3,
  KADJ_ERR_BREAKDOWN = 4,
  KADJ_ERR_PARSE = 5,
  KADJ_ERR_NOT_SPD = 6,
  KADJ_ERR_NUMERICAL = 7,
  KADJ_ERR_OVERFLOW = 8,
  KADJ_ERR_CONTRACT = 9,
  KADJ_ERR_IO = 10,
  KADJ_ERR_UNKNOWN = 11
} kadj_status;

/* Scalar functions applied to operator spectra. KADJ_FN_EXP uses the `t`
 * argument of the routine that accepts it (f(x) = exp(t x)); the others
 * ignore `t`. */
typedef enum kadj_fn {
  KADJ_FN_EXP = 0,
  KADJ_FN_LOG = 1,
  KADJ_FN_SQRT = 2,
  KADJ_FN_INV_SQRT = 3,
  KADJ_FN_INVERSE = 4,
  KADJ_FN_IDENTITY = 5
} kadj_fn;

typedef enum kadj_probe_kind {
  KADJ_PROBE_RADEMACHER = 0,
  KADJ_PROBE_GAUSSIAN = 1
} kadj_probe_kind;

typedef struct kadj_operator kadj_operator;
typedef struct kadj_lanczos kadj_lanczos;
typedef struct kadj_arnoldi kadj_arnoldi;
typedef struct kadj_funm kadj_funm;
typedef struct kadj_pchol kadj_pchol;
typedef struct kadj_precond kadj_precond;

/* ---- library ----------------------------------------------------------- */

KADJ_API const char* kadj_version(void);
/* Message of the most recent failure on this thread ("" if none). The
 * pointer stays valid until the next failing call on the same thread. */
KADJ_API const char* kadj_last_error_message(void);

/* ---- operators --------------------------------------------------------- */

KADJ_API kadj_status kadj_dense_create(kadj_index dim, const double* row_major,
                                       kadj_operator** out);
KADJ_API kadj_status kadj_hilbert_create(kadj_index n, kadj_operator** out);
/* Wave block operator on an n×n grid; omega has length n², theta = omega. */
KADJ_API kadj_status kadj_wave_create(kadj_index n, const double* omega,
                                      double dt_scale, kadj_operator** out);
/* RBF kernel Gram operator on m points in d dimensions (X is m×d,
 * row-major); log_params = (log l, log s, log sigma) or NULL for zeros. */
KADJ_API kadj_status kadj_rbf_create(kadj_index m, kadj_index d,
                                     const double* X, kadj_index block_rows,
                                     const double* log_params,
                                     kadj_operator** out);
/* Sparse operator from a Matrix Market coordinate file. */
KADJ_API kadj_status kadj_csr_from_file(const char* path, kadj_operator** out);
KADJ_API void kadj_operator_destroy(kadj_operator* op);

KADJ_API kadj_index kadj_operator_dim(const kadj_operator* op);
KADJ_API kadj_index kadj_operator_param_count(const kadj_operator* op);
KADJ_API int kadj_operator_is_symmetric(const kadj_operator* op);
KADJ_API int kadj_operator_has_diag(const kadj_operator* op);
KADJ_API kadj_status kadj_operator_default_params(const kadj_operator* op,
                                                  double* theta_out);

KADJ_API kadj_status kadj_operator_apply(const kadj_operator* op,
                                         const double* theta, const double* v,
                                         double* out);
KADJ_API kadj_status kadj_operator_apply_transpose(const kadj_operator* op,
                                                   const double* theta,
                                                   const double* v,
                                                   double* out);
KADJ_API kadj_status kadj_operator_vjp_params(const kadj_operator* op,
                                              const double* theta,
                                              const double* v,
                                              const double* wbar, double* out);
KADJ_API kadj_status kadj_operator_diag(const kadj_operator* op,
                                        const double* theta, double* out);

/* matvec_count = apply_count + transpose_count. */
KADJ_API uint64_t kadj_operator_matvec_count(const kadj_operator* op);
KADJ_API uint64_t kadj_operator_apply_count(const kadj_operator* op);
KADJ_API uint64_t kadj_operator_transpose_count(const kadj_operator* op);
KADJ_API uint64_t kadj_operator_vjp_count(const kadj_operator* op);

/* ---- Lanczos ------------------------------------------------------------ */

/* K steps of Lanczos on symmetric A(theta) from v (length dim). */
KADJ_API kadj_status kadj_lanczos_run(const kadj_operator* op,
                                      const double* theta, const double* v,
                                      kadj_index K, int reorthogonalize,
                                      kadj_lanczos** out);
KADJ_API void kadj_lanczos_destroy(kadj_lanczos* h);
KADJ_API kadj_index kadj_lanczos_steps(const kadj_lanczos* h);
KADJ_API kadj_index kadj_lanczos_breakdown_step(const kadj_lanczos* h);
/* X is dim×(steps+1) row-major, a and b have length steps. Any output may
 * be NULL to skip it. */
KADJ_API kadj_status kadj_lanczos_get(const kadj_lanczos* h, double* X,
                                      double* a, double* b);
/* Gradients of rho(X, a, b) given its cotangents (NULL = zero). grad_theta
 * and grad_v may each be NULL when not wanted. */
KADJ_API kadj_status kadj_lanczos_adjoint(const kadj_operator* op,
                                          const kadj_lanczos* h,
                                          const double* Xbar,
                                          const double* abar,
                                          const double* bbar,
                                          double* grad_theta, double* grad_v);
/* Same, additionally reporting the max scaled stationarity residual of the
 * adjoint system. */
KADJ_API kadj_status kadj_lanczos_adjoint_checked(
    const kadj_operator* op, const kadj_lanczos* h, const double* Xbar,
    const double* abar, const double* bbar, double* grad_theta,
    double* grad_v, double* residual);

/* ---- Arnoldi ------------------------------------------------------------ */

KADJ_API kadj_status kadj_arnoldi_run(const kadj_operator* op,
                                      const double* theta, const double* v,
                                      kadj_index K, int reorthogonalize,
                                      kadj_arnoldi** out);
KADJ_API void kadj_arnoldi_destroy(kadj_arnoldi* h);
KADJ_API kadj_index kadj_arnoldi_steps(const kadj_arnoldi* h);
KADJ_API kadj_index kadj_arnoldi_breakdown_step(const kadj_arnoldi* h);
/* Q is dim×steps row-major, H steps×steps row-major, r length dim. */
KADJ_API kadj_status kadj_arnoldi_get(const kadj_arnoldi* h, double* Q,
                                      double* H, double* r, double* c);
KADJ_API kadj_status kadj_arnoldi_adjoint(const kadj_operator* op,
                                          const kadj_arnoldi* h,
                                          const double* Qbar,
                                          const double* Hbar,
                                          const double* rbar, double cbar,
                                          int reproject, double* grad_theta,
                                          double* grad_v);
KADJ_API kadj_status kadj_arnoldi_adjoint_checked(
    const kadj_operator* op, const kadj_arnoldi* h, const double* Qbar,
    const double* Hbar, const double* rbar, double cbar, int reproject,
    double* grad_theta, double* grad_v, double* residual);

/* ---- matrix-function actions ------------------------------------------- */

/* y = f(A(theta)) v by K Lanczos steps (symmetric operators). The handle
 * retains what the pullback needs. */
KADJ_API kadj_status kadj_funm_lanczos(const kadj_operator* op,
                                       const double* theta, const double* v,
                                       kadj_index K, kadj_fn fn, double t,
                                       int reorthogonalize, kadj_funm** out);
/* y = exp(t A(theta)) v by K Arnoldi steps (any operator). */
KADJ_API kadj_status kadj_funm_arnoldi_exp(const kadj_operator* op,
                                           const double* theta,
                                           const double* v, kadj_index K,
                                           double t, int reorthogonalize,
                                           kadj_funm** out);
/* rho = vᵀ f(A(theta)) v by K Lanczos steps; value_len() is 1. */
KADJ_API kadj_status kadj_quadratic_form(const kadj_operator* op,
                                         const double* theta, const double* v,
                                         kadj_index K, kadj_fn fn, double t,
                                         int reorthogonalize, kadj_funm** out);
KADJ_API void kadj_funm_destroy(kadj_funm* h);
/* Length of the result (operator dim, or 1 for the quadratic form). */
KADJ_API kadj_index kadj_funm_value_len(const kadj_funm* h);
KADJ_API kadj_status kadj_funm_value(const kadj_funm* h, double* y);
/* Krylov steps actually taken (== requested K unless breakdown truncated). */
KADJ_API kadj_index kadj_funm_steps(const kadj_funm* h);
/* 1-based step at which the iteration broke down, or 0 if it ran to K. */
KADJ_API kadj_index kadj_funm_breakdown_step(const kadj_funm* h);
/* Gradients of <ybar, result>; ybar has length value_len. */
KADJ_API kadj_status kadj_funm_pullback(const kadj_operator* op,
                                        const kadj_funm* h, const double* ybar,
                                        double* grad_theta, double* grad_v);

/* ---- stochastic estimators ---------------------------------------------- */

KADJ_API kadj_status kadj_probe_vector(uint64_t seed, uint64_t index,
                                       kadj_index dim, kadj_probe_kind kind,
                                       double* out);
KADJ_API kadj_status kadj_hutchinson_trace(const kadj_operator* op,
                                           const double* theta, kadj_index K,
                                           kadj_index L, uint64_t seed,
                                           kadj_fn fn, double t,
                                           kadj_probe_kind kind,
                                           double* estimate,
                                           double* std_error);
KADJ_API kadj_status kadj_logdet(const kadj_operator* op, const double* theta,
                                 kadj_index K, kadj_index L, uint64_t seed,
                                 double* estimate, double* std_error);
KADJ_API kadj_status kadj_logdet_pullback(const kadj_operator* op,
                                          const double* theta, kadj_index K,
                                          kadj_index L, uint64_t seed,
                                          double* grad_theta);
KADJ_API kadj_status kadj_diagonal_estimate(const kadj_operator* op,
                                            const double* theta, kadj_index L,
                                            uint64_t seed, double* out);
/* y ≈ A(theta)^{-1/2} z for the Gaussian probe z = probe(seed, index);
 * probe_out may be NULL. */
KADJ_API kadj_status kadj_sample_inv_sqrt(const kadj_operator* op,
                                          const double* theta, kadj_index K,
                                          uint64_t seed, uint64_t index,
                                          double* y, double* probe_out);

/* ---- solvers ------------------------------------------------------------ */

KADJ_API kadj_status kadj_pivoted_cholesky(const kadj_operator* op,
                                           const double* theta,
                                           kadj_index max_rank, double rel_tol,
                                           kadj_pchol** out);
KADJ_API void kadj_pchol_destroy(kadj_pchol* h);
KADJ_API kadj_index kadj_pchol_rank(const kadj_pchol* h);
/* L is dim×rank row-major; pivots has length rank. Either may be NULL. */
KADJ_API kadj_status kadj_pchol_get(const kadj_pchol* h, double* L,
                                    kadj_index* pivots);

KADJ_API kadj_status kadj_woodbury_create(const kadj_pchol* pc, double sigma2,
                                          kadj_precond** out);
KADJ_API void kadj_precond_destroy(kadj_precond* h);
KADJ_API kadj_status kadj_precond_apply(const kadj_precond* h, const double* b,
                                        double* out);

/* Conjugate gradients from x0 = 0; precond may be NULL (plain CG);
 * max_iter = 0 means the system dimension. Non-convergence sets
 * *converged = 0 and still returns KADJ_OK. iterations, residual_norm and
 * converged may each be NULL. */
KADJ_API kadj_status kadj_pcg(const kadj_operator* op, const double* theta,
                              const double* b, double tol_abs,
                              kadj_index max_iter, const kadj_precond* precond,
                              double* x, kadj_index* iterations,
                              double* residual_norm, int* converged);
KADJ_API kadj_status kadj_pcg_pullback(const kadj_operator* op,
                                       const double* theta, const double* x,
                                       const double* xbar, double tol_abs,
                                       kadj_index max_iter,
                                       const kadj_precond* precond,
                                       double* grad_theta, double* grad_b);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KADJ_H */
