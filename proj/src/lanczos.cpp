#include "kadj/lanczos.hpp"

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

LanczosFactorization lanczos(const MatVecOperator& op, const Vector& theta,
                             const Vector& v, Index K,
                             const LanczosOptions& opts) {
  const Index N = op.dim();
  if (!op.is_symmetric())
    throw ContractError("Lanczos requires a symmetric operator");
  if (K < 1 || K > N)
    throw DimensionError("step count must satisfy 1 <= K <= dim");
  const double vnorm = v.norm();
  if (vnorm == 0.0) throw DomainError("starting vector must be nonzero");

  LanczosFactorization f;
  f.v = v;
  f.theta = theta;
  f.X = Matrix::Zero(N, K + 1);
  f.a = Vector::Zero(K);
  f.b = Vector::Zero(K);
  f.X.col(0) = v / vnorm;

  double normA = 0.0;
  for (Index k = 0; k < K; ++k) {
    Vector w = op.apply(theta, f.X.col(k));
    if (k == 0) normA = w.norm();
    f.a[k] = f.X.col(k).dot(w);
    w -= f.a[k] * f.X.col(k);
    if (k > 0) w -= f.b[k - 1] * f.X.col(k - 1);
    if (opts.reorthogonalize)
      w -= f.X.leftCols(k + 1) * (f.X.leftCols(k + 1).transpose() * w);
    f.b[k] = w.norm();
    f.steps = k + 1;

    const bool vanished = f.b[k] <= opts.breakdown_scale * normA;
    if (vanished && k + 1 < N) {
      // The Krylov space closed before exhausting the full space.
      if (opts.on_breakdown_throw)
        throw BreakdownError("off-diagonal vanished (invariant subspace)",
                             k + 1);
      f.breakdown_step = k + 1;
      f.X.conservativeResize(N, f.steps + 1);
      f.a.conservativeResize(f.steps);
      f.b.conservativeResize(f.steps);
      return f;
    }
    if (k + 1 == N) {
      // Full space spanned: the measured b[N-1] is rounding-level residual
      // and the next basis vector does not exist. Not a breakdown.
      f.X.col(k + 1).setZero();
    } else {
      f.X.col(k + 1) = w / f.b[k];
    }
  }
  return f;
}

namespace {

struct AdjointWork {
  Vector grad_theta;
  Vector zeta;
  Vector lambda_next;  // λ_{k+1} entering step k
  Vector lambda;       // λ_k
  Vector xi;
};

// Shared reverse sweep. Runs the multiplier recursion from step S down to
// 1, accumulating ∇_θ on the fly; optionally records the multipliers.
void reverse_sweep(const MatVecOperator& op, const LanczosFactorization& fwd,
                   const LanczosCotangents& cot,
                   const LanczosAdjointOptions& opts, AdjointWork& w,
                   LanczosAdjointState* state) {
  const Index N = op.dim();
  const Index S = fwd.steps;
  if (fwd.X.rows() != N || fwd.X.cols() != S + 1 || fwd.a.size() != S)
    throw DimensionError("factorization does not match the operator");
  const bool has_X = cot.Xbar.size() > 0;
  const bool has_a = cot.abar.size() > 0;
  const bool has_b = cot.bbar.size() > 0;
  if (has_X && (cot.Xbar.rows() != N || cot.Xbar.cols() != S + 1))
    throw DimensionError("basis cotangent has wrong shape");
  if (has_a && cot.abar.size() != S)
    throw DimensionError("diagonal cotangent has wrong length");
  if (has_b && cot.bbar.size() != S)
    throw DimensionError("off-diagonal cotangent has wrong length");

  const double cot_inf =
      std::max({has_X ? block_inf(cot.Xbar) : 0.0,
                has_a ? block_inf(cot.abar) : 0.0,
                has_b ? block_inf(cot.bbar) : 0.0});

  w.grad_theta = Vector::Zero(op.param_count());
  w.zeta = has_X ? Vector(-cot.Xbar.col(S)) : Vector(Vector::Zero(N));
  w.lambda_next = Vector::Zero(N);

  if (state) {
    state->Lambda = Matrix::Zero(N, S);
    state->mu = Vector::Zero(S);
    state->nu = Vector::Zero(S);
  }

  for (Index k = S - 1; k >= 0; --k) {
    const auto xk = fwd.X.col(k);
    const auto xk1 = fwd.X.col(k + 1);
    const double bk = fwd.b[k];

    // The forward pass stores an exactly-zero trailing basis column when
    // the Krylov space is exhausted (k+1 = N, or a lenient truncation); at
    // such a step b_k is rounding noise and the ζ/b division is undefined.
    // A cotangent flowing into the nonexistent x_{k+1} has no gradient.
    if ((xk1.array() == 0.0).all()) {
      if (block_inf(w.zeta) > opts.breakdown_scale * (1.0 + cot_inf))
        throw BreakdownError(
            "adjoint system is singular: cotangent reaches a vanished "
            "off-diagonal",
            k + 1);
      w.xi = Vector::Zero(N);
    } else {
      w.xi = w.zeta / bk;
    }

    const double mu_t = (has_b ? cot.bbar[k] : 0.0) - w.lambda_next.dot(xk) +
                        xk1.dot(w.xi);
    const double nu_t = (has_a ? cot.abar[k] : 0.0) + xk.dot(w.xi);
    w.lambda = -w.xi + mu_t * xk1 + nu_t * xk;

    w.grad_theta += op.vjp_params(fwd.theta, xk, w.lambda);

    // ζ_k = −X̄_k − Aᵀλ_k + a_k λ_k + b_k λ_{k+1} − b_k ν̃_k x_{k+1}
    w.zeta = -op.apply_transpose(fwd.theta, w.lambda);
    if (has_X) w.zeta -= cot.Xbar.col(k);
    w.zeta += fwd.a[k] * w.lambda + bk * w.lambda_next - (bk * nu_t) * xk1;

    if (state) {
      state->Lambda.col(k) = w.lambda;
      state->mu[k] = bk * mu_t;
      state->nu[k] = bk * nu_t;
    }
    std::swap(w.lambda_next, w.lambda);
  }
}

}  // namespace

LanczosAdjointResult lanczos_adjoint(const MatVecOperator& op,
                                     const LanczosFactorization& fwd,
                                     const LanczosCotangents& cot,
                                     const LanczosAdjointOptions& opts) {
  LanczosAdjointResult out;
  AdjointWork w;
  LanczosAdjointState state;
  reverse_sweep(op, fwd, cot, opts, w, opts.keep_state ? &state : nullptr);

  // Normalization-constraint multiplier (λ₀ = −ζ₁ in the stationarity
  // convention) and the gradient w.r.t. the unnormalized input vector:
  // only the component orthogonal to x₁ survives, scaled by 1/‖v‖.
  const Vector lambda0 = -w.zeta;
  const auto x1 = fwd.X.col(0);
  out.grad_v = (lambda0 - lambda0.dot(x1) * x1) / fwd.v.norm();
  out.grad_theta = std::move(w.grad_theta);
  if (opts.keep_state) {
    state.lambda0 = lambda0;
    out.state = std::move(state);
  }
  return out;
}

double lanczos_adjoint_residual(const MatVecOperator& op,
                                const LanczosFactorization& fwd,
                                const LanczosCotangents& cot,
                                const LanczosAdjointState& state) {
  const Index N = op.dim();
  const Index S = fwd.steps;
  if (state.Lambda.rows() != N || state.Lambda.cols() != S)
    throw DimensionError("adjoint state does not match the factorization");
  const bool has_X = cot.Xbar.size() > 0;
  const bool has_a = cot.abar.size() > 0;
  const bool has_b = cot.bbar.size() > 0;

  auto xbar_col = [&](Index k) -> Vector {
    return has_X ? Vector(cot.Xbar.col(k)) : Vector(Vector::Zero(N));
  };
  auto lam = [&](Index k) -> Vector {  // 1-based λ_k with λ₀, λ_{S+1} handled
    if (k == 0) return state.lambda0;
    if (k > S) return Vector::Zero(N);
    return state.Lambda.col(k - 1);
  };
  auto mu = [&](Index k) { return k >= 1 ? state.mu[k - 1] : 0.0; };
  auto nu = [&](Index k) { return k >= 1 ? state.nu[k - 1] : 0.0; };
  auto x = [&](Index k) -> Vector {  // 1-based x_k, x₀ = 0
    return k >= 1 ? Vector(fwd.X.col(k - 1)) : Vector(Vector::Zero(N));
  };
  auto b = [&](Index k) { return k >= 1 ? fwd.b[k - 1] : 1.0; };  // b₀ = 1

  double worst = 0.0;
  auto track = [&](double r) { worst = std::max(worst, r); };

  // Stationarity w.r.t. the trailing basis vector x_{S+1}.
  {
    Vector Z = -b(S) * lam(S) + xbar_col(S) + mu(S) * x(S + 1) + nu(S) * x(S);
    track(block_inf(Z));
  }
  // Stationarity w.r.t. x_k, a_k, b_k for k = S..1.
  for (Index k = S; k >= 1; --k) {
    Vector Z = -b(k) * lam(k + 1) - b(k - 1) * lam(k - 1) + xbar_col(k - 1) +
               mu(k - 1) * x(k) + nu(k) * x(k + 1) + nu(k - 1) * x(k - 1);
    Z += op.apply_transpose(fwd.theta, lam(k)) - fwd.a[k - 1] * lam(k);
    track(block_inf(Z));

    const double Za = (has_a ? cot.abar[k - 1] : 0.0) - lam(k).dot(x(k));
    track(std::abs(Za));

    const double Zb = (has_b ? cot.bbar[k - 1] : 0.0) - lam(k + 1).dot(x(k)) -
                      lam(k).dot(x(k + 1));
    // b_S is not a differentiable output once the space is exhausted; its
    // cotangent is defined to be zero there and the identity is skipped.
    const bool exhausted_tail =
        (k == S) && (fwd.X.col(S).cwiseAbs().maxCoeff() == 0.0);
    if (!exhausted_tail) track(std::abs(Zb));
  }

  const double cot_scale =
      std::max({has_X ? block_inf(cot.Xbar) : 0.0,
                has_a ? block_inf(cot.abar) : 0.0,
                has_b ? block_inf(cot.bbar) : 0.0});
  const double sol_scale =
      std::max({block_inf(state.Lambda), block_inf(state.lambda0),
                block_inf(state.mu), block_inf(state.nu)});
  return worst / (1.0 + std::max(cot_scale, sol_scale));
}

}  // namespace kadj
