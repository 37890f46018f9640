#include "kadj/arnoldi.hpp"

#include <cmath>

namespace kadj {

namespace {

double block_inf(const Matrix& M) {
  return M.size() ? M.cwiseAbs().maxCoeff() : 0.0;
}
double block_inf(const Vector& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

ArnoldiFactorization arnoldi(const MatVecOperator& op, const Vector& theta,
                             const Vector& v, Index K,
                             const ArnoldiOptions& opts) {
  const Index N = op.dim();
  if (K < 1 || K > N)
    throw DimensionError("step count must satisfy 1 <= K <= dim");
  const double vnorm = v.norm();
  if (vnorm == 0.0) throw DomainError("starting vector must be nonzero");

  ArnoldiFactorization f;
  f.v = v;
  f.theta = theta;
  f.c = 1.0 / vnorm;
  f.Q = Matrix::Zero(N, K);
  f.H = Matrix::Zero(K, K);
  f.Q.col(0) = f.c * v;

  double normA = 0.0;
  Vector w;
  for (Index k = 0; k < K; ++k) {
    w = op.apply(theta, f.Q.col(k));
    if (k == 0) normA = w.norm();
    // Modified Gram–Schmidt, then an optional second sweep; both passes
    // accumulate into the same Hessenberg column.
    for (Index i = 0; i <= k; ++i) {
      const double h = f.Q.col(i).dot(w);
      f.H(i, k) += h;
      w -= h * f.Q.col(i);
    }
    if (opts.reorthogonalize) {
      for (Index i = 0; i <= k; ++i) {
        const double h = f.Q.col(i).dot(w);
        f.H(i, k) += h;
        w -= h * f.Q.col(i);
      }
    }
    f.steps = k + 1;
    if (k + 1 == K) break;  // leftover w becomes the residual

    const double sub = w.norm();
    if (sub <= opts.breakdown_scale * normA && k + 1 < N) {
      if (opts.on_breakdown_throw)
        throw BreakdownError("subdiagonal vanished (invariant subspace)",
                             k + 1);
      f.breakdown_step = k + 1;
      f.Q.conservativeResize(N, f.steps);
      f.H.conservativeResize(f.steps, f.steps);
      break;
    }
    f.H(k + 1, k) = sub;
    f.Q.col(k + 1) = w / sub;
  }
  f.r = w;  // A Q = Q H + r e_Sᵀ with Qᵀ r ≈ 0
  return f;
}

namespace {

struct Blocks {
  bool has_Q, has_H, has_r;
};

Blocks check_cotangents(const MatVecOperator& op,
                        const ArnoldiFactorization& fwd,
                        const ArnoldiCotangents& cot) {
  const Index N = op.dim();
  const Index S = fwd.steps;
  if (fwd.Q.rows() != N || fwd.Q.cols() != S || fwd.H.rows() != S)
    throw DimensionError("factorization does not match the operator");
  Blocks b{cot.Qbar.size() > 0, cot.Hbar.size() > 0, cot.rbar.size() > 0};
  if (b.has_Q && (cot.Qbar.rows() != N || cot.Qbar.cols() != S))
    throw DimensionError("basis cotangent has wrong shape");
  if (b.has_H && (cot.Hbar.rows() != S || cot.Hbar.cols() != S))
    throw DimensionError("Hessenberg cotangent has wrong shape");
  if (b.has_r && cot.rbar.size() != N)
    throw DimensionError("residual cotangent has wrong length");
  return b;
}

}  // namespace

ArnoldiAdjointResult arnoldi_adjoint(const MatVecOperator& op,
                                     const ArnoldiFactorization& fwd,
                                     const ArnoldiCotangents& cot,
                                     const ArnoldiAdjointOptions& opts) {
  const Blocks hb = check_cotangents(op, fwd, cot);
  const Index N = op.dim();
  const Index S = fwd.steps;
  const Matrix& Q = fwd.Q;
  const Matrix& H = fwd.H;

  // Entries of H̄ below the first subdiagonal refer to structural zeros of
  // the Hessenberg matrix — constant outputs with no sensitivity — so they
  // are dropped. This makes a dense cotangent (e.g. from a matrix-function
  // pullback) equivalent to its Hessenberg-pattern projection.
  Matrix Hbar;
  if (hb.has_H) {
    Hbar = cot.Hbar;
    for (Index j = 0; j + 2 < S; ++j)
      Hbar.col(j).tail(S - j - 2).setZero();
  }

  // Multipliers of the residual-orthogonality constraints, then the last
  // multiplier column: γ = H̄ e_S − Qᵀ r̄,  Λ e_S = r̄ + Q γ.
  Vector gamma = hb.has_H ? Vector(Hbar.col(S - 1)) : Vector(Vector::Zero(S));
  if (hb.has_r) gamma.noalias() -= Q.transpose() * cot.rbar;

  Matrix Lambda(N, S);
  Lambda.col(S - 1) = Q * gamma;
  if (hb.has_r) Lambda.col(S - 1) += cot.rbar;

  // Orthonormality-multiplier data, assembled once from the stationarity
  // with respect to H substituted in twice: QᵀΛ against Hᵀ becomes H̄, and
  // QᵀAᵀΛ = (HᵀQᵀ + e_SrᵀΛ)Λ becomes HᵀH̄ plus a residual term that only
  // touches the seed column. Everything here is cotangent/factorization
  // data, so the multiplier columns never feed back into it.
  Matrix T = Matrix::Zero(S, S);
  if (hb.has_Q) T.noalias() = Q.transpose() * cot.Qbar;
  if (hb.has_H) {
    T.noalias() -= Hbar * H.transpose();
    T.noalias() += H.transpose() * Hbar;
  }

  Matrix Gsym = Matrix::Zero(S, S);  // symmetric orthonormality multipliers

  Vector grad_theta = Vector::Zero(op.param_count());
  Vector u(N), g(S), psi(N), lambda(N);

  for (Index k = S - 1; k >= 0; --k) {
    u = op.apply_transpose(fwd.theta, Lambda.col(k));
    grad_theta += op.vjp_params(fwd.theta, Q.col(k), Lambda.col(k));

    // Γ column: rows i ≤ k solve this column's projected stationarity,
    // −(QᵀQ̄ − H̄Hᵀ + QᵀAᵀΛ)e_k with both Λ-terms replaced through the
    // H-stationarity as in T above; rows i > k mirror the symmetric
    // multiplier from previously processed columns. The seed column keeps
    // the one genuinely dynamic piece, rᵀλ_{S−1} from QᵀAᵀ = HᵀQᵀ + e_Srᵀ.
    for (Index i = 0; i <= k; ++i) g[i] = -T(i, k);
    if (k == S - 1) g[S - 1] -= fwd.r.dot(Lambda.col(S - 1));
    for (Index i = k + 1; i < S; ++i) g[i] = Gsym(k, i);
    if (k == 0) g[0] -= fwd.c * cot.cbar;
    Gsym.col(k) = g;

    psi.noalias() = Q * g;
    psi += gamma[k] * fwd.r;
    if (hb.has_Q) psi += cot.Qbar.col(k);

    if (k >= 1) {
      const double sub = H(k, k - 1);
      // Stored subdiagonals are healthy by construction (the forward pass
      // truncates before storing a vanished one); this only rejects a
      // hand-assembled degenerate factorization.
      if (std::abs(sub) < 1e-300)
        throw BreakdownError("vanished subdiagonal in the adjoint sweep", k);
      lambda = u + psi;
      lambda.noalias() -=
          Lambda.middleCols(k, S - k) * H.row(k).segment(k, S - k).transpose();
      Lambda.col(k - 1) = lambda / sub;
      if (opts.reproject) {
        // Re-enforce ⟨q_i, λ_{k-1}⟩ = H̄_{i,k-1} on the determined rows
        // i ≤ k — the reverse-sweep analogue of re-orthogonalization.
        // Without it, the error the division by a small subdiagonal
        // injects into these components re-enters every later column
        // through AᵀΛ and ΛHᵀ and compounds across the sweep.
        Vector d = -(Q.leftCols(k + 1).transpose() * Lambda.col(k - 1));
        if (hb.has_H) d += Hbar.col(k - 1).head(k + 1);
        Lambda.col(k - 1) += Q.leftCols(k + 1) * d;
      }
    } else {
      lambda = -u - psi;
      lambda.noalias() += Lambda * H.row(0).transpose();
    }
  }

  ArnoldiAdjointResult out;
  out.grad_theta = std::move(grad_theta);
  out.grad_v = -fwd.c * lambda;
  if (opts.keep_state) {
    ArnoldiAdjointState st;
    st.Lambda = std::move(Lambda);
    st.lambda = std::move(lambda);
    st.Gamma = std::move(Gsym);
    st.gamma = std::move(gamma);
    out.state = std::move(st);
  }
  return out;
}

double arnoldi_adjoint_residual(const MatVecOperator& op,
                                const ArnoldiFactorization& fwd,
                                const ArnoldiCotangents& cot,
                                const ArnoldiAdjointState& state) {
  const Blocks hb = check_cotangents(op, fwd, cot);
  const Index N = op.dim();
  const Index S = fwd.steps;
  const Matrix& Q = fwd.Q;
  if (state.Lambda.rows() != N || state.Lambda.cols() != S)
    throw DimensionError("adjoint state does not match the factorization");

  double worst = 0.0;
  auto track = [&](double r) { worst = std::max(worst, r); };

  // Stationarity w.r.t. Q:
  //   Q̄ + AᵀΛ − ΛHᵀ + λe₁ᵀ + QG + rγᵀ = 0.
  {
    Matrix Z = -state.Lambda * fwd.H.transpose();
    for (Index k = 0; k < S; ++k)
      Z.col(k) += op.apply_transpose(fwd.theta, state.Lambda.col(k));
    Z.col(0) += state.lambda;
    Z.noalias() += Q * state.Gamma;
    Z.noalias() += fwd.r * state.gamma.transpose();
    if (hb.has_Q) Z += cot.Qbar;
    track(block_inf(Z));
  }
  // Stationarity w.r.t. H on the rows that carry multipliers (i ≤ j+1):
  //   H̄ − QᵀΛ = 0 there; rows below the first subdiagonal are absorbed by
  //   the free multipliers of the structural zeros and are not conditions.
  {
    Matrix D = -(Q.transpose() * state.Lambda);
    if (hb.has_H) D += cot.Hbar;
    for (Index j = 0; j < S; ++j)
      for (Index i = 0; i <= std::min(j + 1, S - 1); ++i)
        track(std::abs(D(i, j)));
  }
  // Stationarity w.r.t. r and c.
  {
    Vector Zr = -state.Lambda.col(S - 1) + Q * state.gamma;
    if (hb.has_r) Zr += cot.rbar;
    track(block_inf(Zr));
    const double Zc = cot.cbar - fwd.v.dot(state.lambda);
    track(std::abs(Zc));
  }

  const double cot_scale =
      std::max({hb.has_Q ? block_inf(cot.Qbar) : 0.0,
                hb.has_H ? block_inf(cot.Hbar) : 0.0,
                hb.has_r ? block_inf(cot.rbar) : 0.0, std::abs(cot.cbar)});
  const double sol_scale =
      std::max({block_inf(state.Lambda), block_inf(state.lambda),
                block_inf(state.Gamma), block_inf(state.gamma)});
  return worst / (1.0 + std::max(cot_scale, sol_scale));
}

}  // namespace kadj
