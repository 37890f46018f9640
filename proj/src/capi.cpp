// C ABI shim over the C++ core: argument marshaling, exception-to-status
// mapping, and opaque handle ownership. No algorithm logic lives here.
#include "kadj/kadj.h"

#include <cstring>
#include <new>
#include <string>

#include "kadj/arnoldi.hpp"
#include "kadj/funm_action.hpp"
#include "kadj/lanczos.hpp"
#include "kadj/matrix_market.hpp"
#include "kadj/solvers.hpp"
#include "kadj/stochastic.hpp"

namespace {

thread_local std::string g_last_error;

using kadj::Index;
using kadj::Matrix;
using kadj::Vector;

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajor>;
using MatMap = Eigen::Map<RowMajor>;
using ConstVecMap = Eigen::Map<const Vector>;
using VecMap = Eigen::Map<Vector>;

kadj_status to_status(const std::exception& e) {
  g_last_error = e.what();
  if (dynamic_cast<const kadj::DimensionError*>(&e)) return KADJ_ERR_DIMENSION;
  if (dynamic_cast<const kadj::DomainError*>(&e)) return KADJ_ERR_DOMAIN;
  if (dynamic_cast<const kadj::BreakdownError*>(&e)) return KADJ_ERR_BREAKDOWN;
  if (dynamic_cast<const kadj::ParseError*>(&e)) return KADJ_ERR_PARSE;
  if (dynamic_cast<const kadj::NotSpdError*>(&e)) return KADJ_ERR_NOT_SPD;
  if (dynamic_cast<const kadj::NumericalError*>(&e)) return KADJ_ERR_NUMERICAL;
  if (dynamic_cast<const kadj::OverflowError*>(&e)) return KADJ_ERR_OVERFLOW;
  if (dynamic_cast<const kadj::ContractError*>(&e)) return KADJ_ERR_CONTRACT;
  if (dynamic_cast<const kadj::IoError*>(&e)) return KADJ_ERR_IO;
  if (dynamic_cast<const std::bad_alloc*>(&e)) return KADJ_ERR_UNKNOWN;
  return KADJ_ERR_UNKNOWN;
}

template <typename F>
kadj_status guarded(F&& f) {
  try {
    f();
    return KADJ_OK;
  } catch (const std::exception& e) {
    return to_status(e);
  } catch (...) {
    g_last_error = "unknown failure";
    return KADJ_ERR_UNKNOWN;
  }
}

kadj_status invalid(const char* what) {
  g_last_error = what;
  return KADJ_ERR_INVALID_ARGUMENT;
}

kadj::ScalarFunction to_fn(kadj_fn fn, double t) {
  switch (fn) {
    case KADJ_FN_EXP: return kadj::ScalarFunction::exp_t(t);
    case KADJ_FN_LOG: return kadj::ScalarFunction::log();
    case KADJ_FN_SQRT: return kadj::ScalarFunction::sqrt();
    case KADJ_FN_INV_SQRT: return kadj::ScalarFunction::inv_sqrt();
    case KADJ_FN_INVERSE: return kadj::ScalarFunction::inverse();
    case KADJ_FN_IDENTITY: return kadj::ScalarFunction::identity();
  }
  throw kadj::DomainError("unknown scalar-function id");
}

}  // namespace

struct kadj_operator {
  std::unique_ptr<kadj::MatVecOperator> op;
};
struct kadj_lanczos {
  kadj::LanczosFactorization f;
};
struct kadj_arnoldi {
  kadj::ArnoldiFactorization f;
};
struct kadj_funm {
  enum Kind { kLanczos, kArnoldiExp, kQuadForm } kind;
  kadj_fn fn_id = KADJ_FN_IDENTITY;
  double t = 0.0;
  kadj::FunmLanczosResult fl;
  kadj::FunmArnoldiExpResult fa;
  kadj::QuadraticFormResult qf;
};
struct kadj_pchol {
  kadj::PivotedCholesky pc;
};
struct kadj_precond {
  std::unique_ptr<kadj::Preconditioner> p;
  kadj::Index dim = 0;
};

namespace {

Vector theta_vec(const kadj_operator* op, const double* theta) {
  if (theta == nullptr) return op->op->default_params();
  return ConstVecMap(theta, op->op->param_count());
}

kadj::LanczosOptions lanczos_opts(int reorth) {
  kadj::LanczosOptions o;
  o.reorthogonalize = reorth != 0;
  return o;
}

kadj::ArnoldiOptions arnoldi_opts(int reorth) {
  kadj::ArnoldiOptions o;
  o.reorthogonalize = reorth != 0;
  return o;
}

kadj::LanczosCotangents lanczos_cot(const kadj_lanczos* h, const double* Xbar,
                                    const double* abar, const double* bbar) {
  const Index N = h->f.X.rows();
  const Index S = h->f.steps;
  kadj::LanczosCotangents c;
  if (Xbar) c.Xbar = ConstMatMap(Xbar, N, S + 1);
  if (abar) c.abar = ConstVecMap(abar, S);
  if (bbar) c.bbar = ConstVecMap(bbar, S);
  return c;
}

kadj::ArnoldiCotangents arnoldi_cot(const kadj_arnoldi* h, const double* Qbar,
                                    const double* Hbar, const double* rbar,
                                    double cbar) {
  const Index N = h->f.Q.rows();
  const Index S = h->f.steps;
  kadj::ArnoldiCotangents c;
  if (Qbar) c.Qbar = ConstMatMap(Qbar, N, S);
  if (Hbar) c.Hbar = ConstMatMap(Hbar, S, S);
  if (rbar) c.rbar = ConstVecMap(rbar, N);
  c.cbar = cbar;
  return c;
}

void write_grads(const kadj_operator* op, const Vector& gt, const Vector& gv,
                 double* grad_theta, double* grad_v) {
  if (grad_theta) VecMap(grad_theta, op->op->param_count()) = gt;
  if (grad_v) VecMap(grad_v, op->op->dim()) = gv;
}

}  // namespace

extern "C" {

const char* kadj_version(void) { return "1.0.0"; }

const char* kadj_last_error_message(void) { return g_last_error.c_str(); }

/* ---- operators --------------------------------------------------------- */

kadj_status kadj_dense_create(kadj_index dim, const double* row_major,
                              kadj_operator** out) {
  if (!row_major || !out) return invalid("null argument");
  return guarded([&] {
    const Matrix M = ConstMatMap(row_major, dim, dim);
    *out = new kadj_operator{kadj::make_dense_operator(M)};
  });
}

kadj_status kadj_hilbert_create(kadj_index n, kadj_operator** out) {
  if (!out) return invalid("null argument");
  return guarded([&] { *out = new kadj_operator{kadj::make_hilbert_operator(n)}; });
}

kadj_status kadj_wave_create(kadj_index n, const double* omega,
                             double dt_scale, kadj_operator** out) {
  if (!omega || !out) return invalid("null argument");
  return guarded([&] {
    *out = new kadj_operator{
        kadj::make_wave_operator(n, ConstVecMap(omega, n * n), dt_scale)};
  });
}

kadj_status kadj_rbf_create(kadj_index m, kadj_index d, const double* X,
                            kadj_index block_rows, const double* log_params,
                            kadj_operator** out) {
  if (!X || !out) return invalid("null argument");
  return guarded([&] {
    const Vector lp = log_params ? Vector(ConstVecMap(log_params, 3))
                                 : Vector(Vector::Zero(3));
    *out = new kadj_operator{
        kadj::make_rbf_kernel_operator(ConstMatMap(X, m, d), block_rows, lp)};
  });
}

kadj_status kadj_csr_from_file(const char* path, kadj_operator** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] {
    *out = new kadj_operator{
        kadj::make_csr_operator(kadj::read_matrix_market(path))};
  });
}

void kadj_operator_destroy(kadj_operator* op) { delete op; }

kadj_index kadj_operator_dim(const kadj_operator* op) {
  return op ? op->op->dim() : 0;
}
kadj_index kadj_operator_param_count(const kadj_operator* op) {
  return op ? op->op->param_count() : 0;
}
int kadj_operator_is_symmetric(const kadj_operator* op) {
  return op && op->op->is_symmetric() ? 1 : 0;
}
int kadj_operator_has_diag(const kadj_operator* op) {
  return op && op->op->has_diag() ? 1 : 0;
}

kadj_status kadj_operator_default_params(const kadj_operator* op,
                                         double* theta_out) {
  if (!op || !theta_out) return invalid("null argument");
  return guarded([&] {
    VecMap(theta_out, op->op->param_count()) = op->op->default_params();
  });
}

kadj_status kadj_operator_apply(const kadj_operator* op, const double* theta,
                                const double* v, double* out) {
  if (!op || !v || !out) return invalid("null argument");
  return guarded([&] {
    VecMap(out, op->op->dim()) =
        op->op->apply(theta_vec(op, theta), ConstVecMap(v, op->op->dim()));
  });
}

kadj_status kadj_operator_apply_transpose(const kadj_operator* op,
                                          const double* theta, const double* v,
                                          double* out) {
  if (!op || !v || !out) return invalid("null argument");
  return guarded([&] {
    VecMap(out, op->op->dim()) = op->op->apply_transpose(
        theta_vec(op, theta), ConstVecMap(v, op->op->dim()));
  });
}

kadj_status kadj_operator_vjp_params(const kadj_operator* op,
                                     const double* theta, const double* v,
                                     const double* wbar, double* out) {
  if (!op || !v || !wbar || !out) return invalid("null argument");
  return guarded([&] {
    VecMap(out, op->op->param_count()) =
        op->op->vjp_params(theta_vec(op, theta), ConstVecMap(v, op->op->dim()),
                           ConstVecMap(wbar, op->op->dim()));
  });
}

kadj_status kadj_operator_diag(const kadj_operator* op, const double* theta,
                               double* out) {
  if (!op || !out) return invalid("null argument");
  return guarded([&] {
    VecMap(out, op->op->dim()) = op->op->diag(theta_vec(op, theta));
  });
}

uint64_t kadj_operator_matvec_count(const kadj_operator* op) {
  return op ? op->op->matvec_count() : 0;
}
uint64_t kadj_operator_apply_count(const kadj_operator* op) {
  return op ? op->op->apply_count() : 0;
}
uint64_t kadj_operator_transpose_count(const kadj_operator* op) {
  return op ? op->op->transpose_count() : 0;
}
uint64_t kadj_operator_vjp_count(const kadj_operator* op) {
  return op ? op->op->vjp_count() : 0;
}

/* ---- Lanczos ------------------------------------------------------------ */

kadj_status kadj_lanczos_run(const kadj_operator* op, const double* theta,
                             const double* v, kadj_index K,
                             int reorthogonalize, kadj_lanczos** out) {
  if (!op || !v || !out) return invalid("null argument");
  return guarded([&] {
    *out = new kadj_lanczos{
        kadj::lanczos(*op->op, theta_vec(op, theta),
                      ConstVecMap(v, op->op->dim()), K,
                      lanczos_opts(reorthogonalize))};
  });
}

void kadj_lanczos_destroy(kadj_lanczos* h) { delete h; }

kadj_index kadj_lanczos_steps(const kadj_lanczos* h) {
  return h ? h->f.steps : 0;
}
kadj_index kadj_lanczos_breakdown_step(const kadj_lanczos* h) {
  return h ? h->f.breakdown_step : 0;
}

kadj_status kadj_lanczos_get(const kadj_lanczos* h, double* X, double* a,
                             double* b) {
  if (!h) return invalid("null argument");
  return guarded([&] {
    const Index N = h->f.X.rows();
    const Index S = h->f.steps;
    if (X) MatMap(X, N, S + 1) = h->f.X;
    if (a) VecMap(a, S) = h->f.a;
    if (b) VecMap(b, S) = h->f.b;
  });
}

kadj_status kadj_lanczos_adjoint(const kadj_operator* op,
                                 const kadj_lanczos* h, const double* Xbar,
                                 const double* abar, const double* bbar,
                                 double* grad_theta, double* grad_v) {
  if (!op || !h) return invalid("null argument");
  return guarded([&] {
    const auto res =
        kadj::lanczos_adjoint(*op->op, h->f, lanczos_cot(h, Xbar, abar, bbar));
    write_grads(op, res.grad_theta, res.grad_v, grad_theta, grad_v);
  });
}

kadj_status kadj_lanczos_adjoint_checked(const kadj_operator* op,
                                         const kadj_lanczos* h,
                                         const double* Xbar, const double* abar,
                                         const double* bbar,
                                         double* grad_theta, double* grad_v,
                                         double* residual) {
  if (!op || !h || !residual) return invalid("null argument");
  return guarded([&] {
    const auto cot = lanczos_cot(h, Xbar, abar, bbar);
    kadj::LanczosAdjointOptions o;
    o.keep_state = true;
    const auto res = kadj::lanczos_adjoint(*op->op, h->f, cot, o);
    *residual = kadj::lanczos_adjoint_residual(*op->op, h->f, cot, *res.state);
    write_grads(op, res.grad_theta, res.grad_v, grad_theta, grad_v);
  });
}

/* ---- Arnoldi ------------------------------------------------------------ */

kadj_status kadj_arnoldi_run(const kadj_operator* op, const double* theta,
                             const double* v, kadj_index K,
                             int reorthogonalize, kadj_arnoldi** out) {
  if (!op || !v || !out) return invalid("null argument");
  return guarded([&] {
    *out = new kadj_arnoldi{
        kadj::arnoldi(*op->op, theta_vec(op, theta),
                      ConstVecMap(v, op->op->dim()), K,
                      arnoldi_opts(reorthogonalize))};
  });
}

void kadj_arnoldi_destroy(kadj_arnoldi* h) { delete h; }

kadj_index kadj_arnoldi_steps(const kadj_arnoldi* h) {
  return h ? h->f.steps : 0;
}
kadj_index kadj_arnoldi_breakdown_step(const kadj_arnoldi* h) {
  return h ? h->f.breakdown_step : 0;
}

kadj_status kadj_arnoldi_get(const kadj_arnoldi* h, double* Q, double* H,
                             double* r, double* c) {
  if (!h) return invalid("null argument");
  return guarded([&] {
    const Index N = h->f.Q.rows();
    const Index S = h->f.steps;
    if (Q) MatMap(Q, N, S) = h->f.Q;
    if (H) MatMap(H, S, S) = h->f.H;
    if (r) VecMap(r, N) = h->f.r;
    if (c) *c = h->f.c;
  });
}

kadj_status kadj_arnoldi_adjoint(const kadj_operator* op,
                                 const kadj_arnoldi* h, const double* Qbar,
                                 const double* Hbar, const double* rbar,
                                 double cbar, int reproject,
                                 double* grad_theta, double* grad_v) {
  if (!op || !h) return invalid("null argument");
  return guarded([&] {
    kadj::ArnoldiAdjointOptions o;
    o.reproject = reproject != 0;
    const auto res = kadj::arnoldi_adjoint(
        *op->op, h->f, arnoldi_cot(h, Qbar, Hbar, rbar, cbar), o);
    write_grads(op, res.grad_theta, res.grad_v, grad_theta, grad_v);
  });
}

kadj_status kadj_arnoldi_adjoint_checked(const kadj_operator* op,
                                         const kadj_arnoldi* h,
                                         const double* Qbar, const double* Hbar,
                                         const double* rbar, double cbar,
                                         int reproject, double* grad_theta,
                                         double* grad_v, double* residual) {
  if (!op || !h || !residual) return invalid("null argument");
  return guarded([&] {
    const auto cot = arnoldi_cot(h, Qbar, Hbar, rbar, cbar);
    kadj::ArnoldiAdjointOptions o;
    o.reproject = reproject != 0;
    o.keep_state = true;
    const auto res = kadj::arnoldi_adjoint(*op->op, h->f, cot, o);
    *residual = kadj::arnoldi_adjoint_residual(*op->op, h->f, cot, *res.state);
    write_grads(op, res.grad_theta, res.grad_v, grad_theta, grad_v);
  });
}

/* ---- matrix-function actions ------------------------------------------- */

kadj_status kadj_funm_lanczos(const kadj_operator* op, const double* theta,
                              const double* v, kadj_index K, kadj_fn fn,
                              double t, int reorthogonalize, kadj_funm** out) {
  if (!op || !v || !out) return invalid("null argument");
  return guarded([&] {
    auto h = std::make_unique<kadj_funm>();
    h->kind = kadj_funm::kLanczos;
    h->fn_id = fn;
    h->t = t;
    h->fl = kadj::funm_lanczos(*op->op, theta_vec(op, theta),
                               ConstVecMap(v, op->op->dim()), K, to_fn(fn, t),
                               lanczos_opts(reorthogonalize));
    *out = h.release();
  });
}

kadj_status kadj_funm_arnoldi_exp(const kadj_operator* op, const double* theta,
                                  const double* v, kadj_index K, double t,
                                  int reorthogonalize, kadj_funm** out) {
  if (!op || !v || !out) return invalid("null argument");
  return guarded([&] {
    auto h = std::make_unique<kadj_funm>();
    h->kind = kadj_funm::kArnoldiExp;
    h->t = t;
    h->fa = kadj::funm_arnoldi_exp(*op->op, theta_vec(op, theta),
                                   ConstVecMap(v, op->op->dim()), K, t,
                                   arnoldi_opts(reorthogonalize));
    *out = h.release();
  });
}

kadj_status kadj_quadratic_form(const kadj_operator* op, const double* theta,
                                const double* v, kadj_index K, kadj_fn fn,
                                double t, int reorthogonalize,
                                kadj_funm** out) {
  if (!op || !v || !out) return invalid("null argument");
  return guarded([&] {
    auto h = std::make_unique<kadj_funm>();
    h->kind = kadj_funm::kQuadForm;
    h->fn_id = fn;
    h->t = t;
    h->qf = kadj::quadratic_form_funm(*op->op, theta_vec(op, theta),
                                      ConstVecMap(v, op->op->dim()), K,
                                      to_fn(fn, t),
                                      lanczos_opts(reorthogonalize));
    *out = h.release();
  });
}

void kadj_funm_destroy(kadj_funm* h) { delete h; }

kadj_index kadj_funm_value_len(const kadj_funm* h) {
  if (!h) return 0;
  switch (h->kind) {
    case kadj_funm::kLanczos: return h->fl.y.size();
    case kadj_funm::kArnoldiExp: return h->fa.y.size();
    case kadj_funm::kQuadForm: return 1;
  }
  return 0;
}

kadj_index kadj_funm_steps(const kadj_funm* h) {
  if (!h) return 0;
  switch (h->kind) {
    case kadj_funm::kLanczos: return h->fl.fact.steps;
    case kadj_funm::kArnoldiExp: return h->fa.fact.steps;
    case kadj_funm::kQuadForm: return h->qf.fact.steps;
  }
  return 0;
}

kadj_index kadj_funm_breakdown_step(const kadj_funm* h) {
  if (!h) return 0;
  switch (h->kind) {
    case kadj_funm::kLanczos: return h->fl.fact.breakdown_step;
    case kadj_funm::kArnoldiExp: return h->fa.fact.breakdown_step;
    case kadj_funm::kQuadForm: return h->qf.fact.breakdown_step;
  }
  return 0;
}

kadj_status kadj_funm_value(const kadj_funm* h, double* y) {
  if (!h || !y) return invalid("null argument");
  return guarded([&] {
    switch (h->kind) {
      case kadj_funm::kLanczos: VecMap(y, h->fl.y.size()) = h->fl.y; break;
      case kadj_funm::kArnoldiExp: VecMap(y, h->fa.y.size()) = h->fa.y; break;
      case kadj_funm::kQuadForm: y[0] = h->qf.value; break;
    }
  });
}

kadj_status kadj_funm_pullback(const kadj_operator* op, const kadj_funm* h,
                               const double* ybar, double* grad_theta,
                               double* grad_v) {
  if (!op || !h || !ybar) return invalid("null argument");
  return guarded([&] {
    kadj::FunmPullbackResult res;
    switch (h->kind) {
      case kadj_funm::kLanczos:
        res = kadj::funm_lanczos_pullback(*op->op, h->fl, to_fn(h->fn_id, h->t),
                                          ConstVecMap(ybar, h->fl.y.size()));
        break;
      case kadj_funm::kArnoldiExp:
        res = kadj::funm_arnoldi_exp_pullback(
            *op->op, h->fa, ConstVecMap(ybar, h->fa.y.size()));
        break;
      case kadj_funm::kQuadForm:
        res = kadj::quadratic_form_funm_pullback(
            *op->op, h->qf, to_fn(h->fn_id, h->t), ybar[0]);
        break;
    }
    write_grads(op, res.grad_theta, res.grad_v, grad_theta, grad_v);
  });
}

/* ---- stochastic estimators ---------------------------------------------- */

kadj_status kadj_probe_vector(uint64_t seed, uint64_t index, kadj_index dim,
                              kadj_probe_kind kind, double* out) {
  if (!out) return invalid("null argument");
  return guarded([&] {
    VecMap(out, dim) = kadj::probe_vector(
        seed, index, dim,
        kind == KADJ_PROBE_GAUSSIAN ? kadj::ProbeKind::Gaussian
                                    : kadj::ProbeKind::Rademacher);
  });
}

kadj_status kadj_hutchinson_trace(const kadj_operator* op, const double* theta,
                                  kadj_index K, kadj_index L, uint64_t seed,
                                  kadj_fn fn, double t, kadj_probe_kind kind,
                                  double* estimate, double* std_error) {
  if (!op || !estimate) return invalid("null argument");
  return guarded([&] {
    const auto e = kadj::hutchinson_trace_funm(
        *op->op, theta_vec(op, theta), K, L, seed, to_fn(fn, t),
        kind == KADJ_PROBE_GAUSSIAN ? kadj::ProbeKind::Gaussian
                                    : kadj::ProbeKind::Rademacher);
    *estimate = e.estimate;
    if (std_error) *std_error = e.std_error;
  });
}

kadj_status kadj_logdet(const kadj_operator* op, const double* theta,
                        kadj_index K, kadj_index L, uint64_t seed,
                        double* estimate, double* std_error) {
  if (!op || !estimate) return invalid("null argument");
  return guarded([&] {
    const auto e = kadj::logdet_estimate(*op->op, theta_vec(op, theta), K, L,
                                         seed);
    *estimate = e.estimate;
    if (std_error) *std_error = e.std_error;
  });
}

kadj_status kadj_logdet_pullback(const kadj_operator* op, const double* theta,
                                 kadj_index K, kadj_index L, uint64_t seed,
                                 double* grad_theta) {
  if (!op || !grad_theta) return invalid("null argument");
  return guarded([&] {
    VecMap(grad_theta, op->op->param_count()) =
        kadj::logdet_pullback(*op->op, theta_vec(op, theta), K, L, seed);
  });
}

kadj_status kadj_diagonal_estimate(const kadj_operator* op,
                                   const double* theta, kadj_index L,
                                   uint64_t seed, double* out) {
  if (!op || !out) return invalid("null argument");
  return guarded([&] {
    VecMap(out, op->op->dim()) =
        kadj::diagonal_estimate(*op->op, theta_vec(op, theta), L, seed);
  });
}

kadj_status kadj_sample_inv_sqrt(const kadj_operator* op, const double* theta,
                                 kadj_index K, uint64_t seed, uint64_t index,
                                 double* y, double* probe_out) {
  if (!op || !y) return invalid("null argument");
  return guarded([&] {
    const auto s = kadj::sample_inv_sqrt_seeded(*op->op, theta_vec(op, theta),
                                                K, seed, index);
    VecMap(y, op->op->dim()) = s.y;
    if (probe_out) VecMap(probe_out, op->op->dim()) = s.probe;
  });
}

/* ---- solvers ------------------------------------------------------------ */

kadj_status kadj_pivoted_cholesky(const kadj_operator* op, const double* theta,
                                  kadj_index max_rank, double rel_tol,
                                  kadj_pchol** out) {
  if (!op || !out) return invalid("null argument");
  return guarded([&] {
    *out = new kadj_pchol{
        kadj::pivoted_cholesky(*op->op, theta_vec(op, theta), max_rank,
                               rel_tol)};
  });
}

void kadj_pchol_destroy(kadj_pchol* h) { delete h; }

kadj_index kadj_pchol_rank(const kadj_pchol* h) { return h ? h->pc.rank : 0; }

kadj_status kadj_pchol_get(const kadj_pchol* h, double* L,
                           kadj_index* pivots) {
  if (!h) return invalid("null argument");
  return guarded([&] {
    if (L) MatMap(L, h->pc.L.rows(), h->pc.rank) = h->pc.L;
    if (pivots)
      for (Index i = 0; i < h->pc.rank; ++i)
        pivots[i] = h->pc.pivots[static_cast<std::size_t>(i)];
  });
}

kadj_status kadj_woodbury_create(const kadj_pchol* pc, double sigma2,
                                 kadj_precond** out) {
  if (!pc || !out) return invalid("null argument");
  return guarded([&] {
    *out = new kadj_precond{kadj::make_woodbury_preconditioner(pc->pc, sigma2),
                            pc->pc.L.rows()};
  });
}

void kadj_precond_destroy(kadj_precond* h) { delete h; }

kadj_status kadj_precond_apply(const kadj_precond* h, const double* b,
                               double* out) {
  if (!h || !b || !out) return invalid("null argument");
  return guarded([&] {
    VecMap(out, h->dim) = h->p->apply(ConstVecMap(b, h->dim));
  });
}

kadj_status kadj_pcg(const kadj_operator* op, const double* theta,
                     const double* b, double tol_abs, kadj_index max_iter,
                     const kadj_precond* precond, double* x,
                     kadj_index* iterations, double* residual_norm,
                     int* converged) {
  if (!op || !b || !x) return invalid("null argument");
  return guarded([&] {
    kadj::PcgOptions o;
    o.tol_abs = tol_abs;
    o.max_iter = max_iter;
    o.precond = precond ? precond->p.get() : nullptr;
    const auto res = kadj::pcg_solve(*op->op, theta_vec(op, theta),
                                     ConstVecMap(b, op->op->dim()), o);
    VecMap(x, op->op->dim()) = res.x;
    if (iterations) *iterations = res.iterations;
    if (residual_norm) *residual_norm = res.residual_norm;
    if (converged) *converged = res.converged ? 1 : 0;
  });
}

kadj_status kadj_pcg_pullback(const kadj_operator* op, const double* theta,
                              const double* x, const double* xbar,
                              double tol_abs, kadj_index max_iter,
                              const kadj_precond* precond, double* grad_theta,
                              double* grad_b) {
  if (!op || !x || !xbar) return invalid("null argument");
  return guarded([&] {
    kadj::PcgOptions o;
    o.tol_abs = tol_abs;
    o.max_iter = max_iter;
    o.precond = precond ? precond->p.get() : nullptr;
    const auto res =
        kadj::pcg_pullback(*op->op, theta_vec(op, theta),
                           ConstVecMap(x, op->op->dim()),
                           ConstVecMap(xbar, op->op->dim()), o);
    write_grads(op, res.grad_theta, res.grad_b, grad_theta, grad_b);
  });
}

} /* extern "C" */
