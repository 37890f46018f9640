#include "kadj/funm_action.hpp"

namespace kadj {

namespace {

// T uses the in-band couplings b₁..b_{S−1}; b_S couples to the residual
// direction and does not enter the projected matrix.
Vector inner_band(const LanczosFactorization& f) {
  return f.b.head(f.steps - 1);
}

// Lift the cotangents of tri(a, b₁..b_{S−1}) to full-length band
// cotangents for the factorization adjoint (b_S receives zero).
LanczosCotangents band_cotangents(const SymFunmE1Pullback& pb, Index S) {
  LanczosCotangents cot;
  cot.abar = pb.abar;
  cot.bbar = Vector::Zero(S);
  cot.bbar.head(S - 1) = pb.bbar;
  return cot;
}

// Breakdown before K means an exact invariant subspace was found, so the
// truncated result is already exact: accept it and let the factorization's
// steps / breakdown_step fields report the early stop instead of throwing.
LanczosOptions truncating(LanczosOptions o) {
  o.on_breakdown_throw = false;
  return o;
}

ArnoldiOptions truncating(ArnoldiOptions o) {
  o.on_breakdown_throw = false;
  return o;
}

}  // namespace

FunmLanczosResult funm_lanczos(const MatVecOperator& op, const Vector& theta,
                               const Vector& v, Index K,
                               const ScalarFunction& fn,
                               const LanczosOptions& opts) {
  FunmLanczosResult r;
  r.fact = lanczos(op, theta, v, K, truncating(opts));
  r.small_ = funm_sym_e1(r.fact.a, inner_band(r.fact), fn);
  r.y_small = r.small_.y;
  r.y = v.norm() * (r.fact.X.leftCols(r.fact.steps) * r.y_small);
  return r;
}

FunmPullbackResult funm_lanczos_pullback(const MatVecOperator& op,
                                         const FunmLanczosResult& fwd,
                                         const ScalarFunction& fn,
                                         const Vector& ybar) {
  const Index S = fwd.fact.steps;
  if (ybar.size() != op.dim())
    throw DimensionError("cotangent has wrong length");
  const double vnorm = fwd.fact.v.norm();

  // y = ‖v‖ · X f(T) e₁ splits into three channels: the basis X, the bands
  // of T, and the explicit ‖v‖ prefactor.
  LanczosCotangents cot = band_cotangents(
      funm_sym_e1_pullback(fwd.small_, fn,
                           vnorm * (fwd.fact.X.leftCols(S).transpose() * ybar)),
      S);
  cot.Xbar = Matrix::Zero(op.dim(), S + 1);
  for (Index k = 0; k < S; ++k)
    cot.Xbar.col(k) = (vnorm * fwd.y_small[k]) * ybar;

  const LanczosAdjointResult adj = lanczos_adjoint(op, fwd.fact, cot);
  FunmPullbackResult out;
  out.grad_theta = adj.grad_theta;
  out.grad_v =
      adj.grad_v + (ybar.dot(fwd.y) / (vnorm * vnorm)) * fwd.fact.v;
  return out;
}

FunmArnoldiExpResult funm_arnoldi_exp(const MatVecOperator& op,
                                      const Vector& theta, const Vector& v,
                                      Index K, double t,
                                      const ArnoldiOptions& opts) {
  FunmArnoldiExpResult r;
  r.fact = arnoldi(op, theta, v, K, truncating(opts));
  r.t = t;
  r.y_small = expm_e1(r.fact.H, t);
  r.y = (1.0 / r.fact.c) * (r.fact.Q * r.y_small);
  return r;
}

FunmPullbackResult funm_arnoldi_exp_pullback(const MatVecOperator& op,
                                             const FunmArnoldiExpResult& fwd,
                                             const Vector& ybar) {
  if (ybar.size() != op.dim())
    throw DimensionError("cotangent has wrong length");
  const double c = fwd.fact.c;

  // y = c⁻¹ Q exp(tH) e₁: all v-dependence flows through the
  // factorization outputs Q and c, so no direct term is needed.
  ArnoldiCotangents cot;
  cot.Qbar = (1.0 / c) * (ybar * fwd.y_small.transpose());
  cot.Hbar = expm_e1_pullback(fwd.fact.H, fwd.t,
                              (1.0 / c) * (fwd.fact.Q.transpose() * ybar));
  cot.cbar = -(1.0 / (c * c)) * ybar.dot(fwd.fact.Q * fwd.y_small);

  const ArnoldiAdjointResult adj = arnoldi_adjoint(op, fwd.fact, cot);
  return {adj.grad_theta, adj.grad_v};
}

QuadraticFormResult quadratic_form_funm(const MatVecOperator& op,
                                        const Vector& theta, const Vector& v,
                                        Index K, const ScalarFunction& fn,
                                        const LanczosOptions& opts) {
  QuadraticFormResult r;
  r.fact = lanczos(op, theta, v, K, truncating(opts));
  r.small_ = funm_sym_e1(r.fact.a, inner_band(r.fact), fn);
  r.y_small = r.small_.y;
  r.value = v.squaredNorm() * r.y_small[0];
  return r;
}

FunmPullbackResult quadratic_form_funm_pullback(const MatVecOperator& op,
                                                const QuadraticFormResult& fwd,
                                                const ScalarFunction& fn,
                                                double rho_bar) {
  const Index S = fwd.fact.steps;
  const double vsq = fwd.fact.v.squaredNorm();

  // ρ = ‖v‖² (f(T) e₁)₁: the basis carries no cotangent, only the bands
  // and the explicit ‖v‖² prefactor do.
  Vector ybar_small = Vector::Zero(S);
  ybar_small[0] = rho_bar * vsq;
  const LanczosCotangents cot =
      band_cotangents(funm_sym_e1_pullback(fwd.small_, fn, ybar_small), S);

  const LanczosAdjointResult adj = lanczos_adjoint(op, fwd.fact, cot);
  FunmPullbackResult out;
  out.grad_theta = adj.grad_theta;
  out.grad_v = adj.grad_v + (2.0 * rho_bar * fwd.y_small[0]) * fwd.fact.v;
  return out;
}

}  // namespace kadj
