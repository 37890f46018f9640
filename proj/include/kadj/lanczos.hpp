// Lanczos tridiagonalization and its exact reverse-mode adjoint.
//
// Forward: given a symmetric operator A(θ) and v ≠ 0, K steps produce
// orthonormal x₁..x_{K+1} (x₁ = v/‖v‖₂), diagonal a₁..a_K and positive
// off-diagonal b₁..b_K with
//
//   A x_k = b_{k−1} x_{k−1} + a_k x_k + b_k x_{k+1},   b₀ x₀ := 0.
//
// Adjoint: given cotangents (X̄, ā, b̄) of any scalar ρ(X, a, b), a single
// reverse sweep reconstructs the exact gradients ∇_θ ρ and ∇_v ρ using one
// transpose product and one parameter pullback per step. The sweep runs in
// O(N + |θ|) extra memory when keep_state is false; keep_state retains the
// full multiplier history for the stationarity-residual diagnostics.
#pragma once

#include <memory>
#include <optional>

#include "kadj/operator.hpp"

namespace kadj {

struct LanczosOptions {
  // Re-orthogonalize each new basis vector against all previous ones with a
  // second Gram–Schmidt pass. Strongly recommended; without it the basis
  // loses orthogonality at machine speed and downstream gradients degrade.
  bool reorthogonalize = true;
  // b_k below breakdown_scale·‖A x₁‖₂ at a step k < N stops the iteration:
  // throw (on_breakdown_throw) or truncate and record breakdown_step. At
  // k = N the subspace is exhausted, the tiny b_N is kept, and x_{N+1} = 0;
  // that is a successful completion, not a breakdown.
  double breakdown_scale = 1e-14;
  bool on_breakdown_throw = true;
};

struct LanczosFactorization {
  Matrix X;   // N×(S+1) orthonormal columns x₁..x_{S+1} (x_{S+1} = 0 if S = N)
  Vector a;   // length S
  Vector b;   // length S
  Vector v;   // the input vector (unnormalized)
  Vector theta;
  // Number of completed steps S (= requested K unless truncated early).
  Index steps = 0;
  // 0 when no breakdown occurred; otherwise the step at which b vanished
  // (only possible with on_breakdown_throw = false).
  Index breakdown_step = 0;
};

LanczosFactorization lanczos(const MatVecOperator& op, const Vector& theta,
                             const Vector& v, Index K,
                             const LanczosOptions& opts = {});

// Cotangents of ρ(X, a, b). Any member may be empty (treated as zero);
// non-empty members must match the factorization's shapes.
struct LanczosCotangents {
  Matrix Xbar;  // N×(S+1) or empty
  Vector abar;  // length S or empty
  Vector bbar;  // length S or empty
};

struct LanczosAdjointOptions {
  // Retain the multiplier history (Λ, μ, ν, λ₀) for residual diagnostics.
  // Costs O(N·K) memory instead of O(N + |θ|).
  bool keep_state = false;
  // Guard for the ζ/b divisions of the reverse recursion: when b_k is at
  // breakdown scale, ζ must vanish with it or the adjoint system is
  // singular (BreakdownError).
  double breakdown_scale = 1e-14;
};

struct LanczosAdjointState {
  Matrix Lambda;   // N×S multipliers λ₁..λ_S
  Vector lambda0;  // multiplier of the normalization constraint
  Vector mu;       // length S
  Vector nu;       // length S
};

struct LanczosAdjointResult {
  Vector grad_theta;  // ∇_θ ρ
  Vector grad_v;      // ∇_v ρ
  std::optional<LanczosAdjointState> state;  // present iff keep_state
};

LanczosAdjointResult lanczos_adjoint(const MatVecOperator& op,
                                     const LanczosFactorization& fwd,
                                     const LanczosCotangents& cot,
                                     const LanczosAdjointOptions& opts = {});

// Maximum scaled stationarity residual of the adjoint system: evaluates the
// gradient of the Lagrangian with respect to every x_k, a_k, b_k at the
// computed multipliers and returns max ‖residual‖∞ / (1 + ‖cotangent‖∞).
// Requires a state produced with keep_state = true.
double lanczos_adjoint_residual(const MatVecOperator& op,
                                const LanczosFactorization& fwd,
                                const LanczosCotangents& cot,
                                const LanczosAdjointState& state);

}  // namespace kadj
