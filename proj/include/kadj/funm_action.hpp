// Matrix-function actions y = f(A(θ)) v through Krylov projection, with
// exact pullbacks through the factorization adjoints.
//
// Each forward routine returns the approximation together with the saved
// factorization; the matching pullback consumes ȳ (or ρ̄) and produces
// ∇_θ and ∇_v of the computed approximation — the derivative of what was
// actually evaluated, not of the idealized infinite-K limit.
#pragma once

#include "kadj/arnoldi.hpp"
#include "kadj/dense_funm.hpp"
#include "kadj/lanczos.hpp"

namespace kadj {

// ---- symmetric f(A)v via Lanczos -----------------------------------------

struct FunmLanczosResult {
  Vector y;                   // ‖v‖₂ · X_{1..K} f(T) e₁
  LanczosFactorization fact;
  SymFunmE1 small_;           // spectral data of T, reused by the pullback
  Vector y_small;             // f(T) e₁
};

FunmLanczosResult funm_lanczos(const MatVecOperator& op, const Vector& theta,
                               const Vector& v, Index K,
                               const ScalarFunction& fn,
                               const LanczosOptions& opts = {});

struct FunmPullbackResult {
  Vector grad_theta;
  Vector grad_v;
};

FunmPullbackResult funm_lanczos_pullback(const MatVecOperator& op,
                                         const FunmLanczosResult& fwd,
                                         const ScalarFunction& fn,
                                         const Vector& ybar);

// ---- general exp(tA)v via Arnoldi -----------------------------------------

struct FunmArnoldiExpResult {
  Vector y;                   // ‖v‖₂ · Q exp(tH) e₁
  ArnoldiFactorization fact;
  double t = 0.0;
  Vector y_small;             // exp(tH) e₁
};

FunmArnoldiExpResult funm_arnoldi_exp(const MatVecOperator& op,
                                      const Vector& theta, const Vector& v,
                                      Index K, double t,
                                      const ArnoldiOptions& opts = {});

FunmPullbackResult funm_arnoldi_exp_pullback(const MatVecOperator& op,
                                             const FunmArnoldiExpResult& fwd,
                                             const Vector& ybar);

// ---- quadratic form vᵀ f(A) v via Lanczos ----------------------------------

struct QuadraticFormResult {
  double value = 0.0;         // ‖v‖₂² · (f(T) e₁)₁
  LanczosFactorization fact;
  SymFunmE1 small_;
  Vector y_small;
};

QuadraticFormResult quadratic_form_funm(const MatVecOperator& op,
                                        const Vector& theta, const Vector& v,
                                        Index K, const ScalarFunction& fn,
                                        const LanczosOptions& opts = {});

FunmPullbackResult quadratic_form_funm_pullback(const MatVecOperator& op,
                                                const QuadraticFormResult& fwd,
                                                const ScalarFunction& fn,
                                                double rho_bar);

}  // namespace kadj
