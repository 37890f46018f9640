// Arnoldi Hessenberg factorization and its exact reverse-mode adjoint.
//
// Forward: given any square operator A(θ) and v ≠ 0, K steps of modified
// Gram–Schmidt produce Q (N×K, orthonormal, Q e₁ = c·v with c = 1/‖v‖₂),
// upper-Hessenberg H (K×K) and residual r with
//
//   A Q = Q H + r e_Kᵀ,   Qᵀ r = 0.
//
// Adjoint: given cotangents (Q̄, H̄, r̄, c̄) of a scalar ρ(Q, H, r, c), a
// reverse column sweep reconstructs ∇_θ ρ and ∇_v ρ exactly, using one
// transpose product and one parameter pullback per step. The multipliers Λ
// have the same footprint as Q, so the sweep is O(N·K) memory.
#pragma once

#include <optional>

#include "kadj/operator.hpp"

namespace kadj {

struct ArnoldiOptions {
  // Second Gram–Schmidt projection pass per column (recommended).
  bool reorthogonalize = true;
  // Subdiagonal H_{k+1,k} below breakdown_scale·‖A x₁‖₂ at a step k < N:
  // throw or truncate. At k = N the exhausted subspace keeps the measured
  // value and r = 0 without error.
  double breakdown_scale = 1e-14;
  bool on_breakdown_throw = true;
};

struct ArnoldiFactorization {
  Matrix Q;   // N×S
  Matrix H;   // S×S upper Hessenberg
  Vector r;   // residual (zero when S = N)
  double c = 0.0;
  Vector v;
  Vector theta;
  Index steps = 0;          // completed steps S
  Index breakdown_step = 0; // see LanczosFactorization
};

ArnoldiFactorization arnoldi(const MatVecOperator& op, const Vector& theta,
                             const Vector& v, Index K,
                             const ArnoldiOptions& opts = {});

// Cotangents of ρ(Q, H, r, c); empty members are zero.
struct ArnoldiCotangents {
  Matrix Qbar;   // N×S or empty
  Matrix Hbar;   // S×S or empty
  Vector rbar;   // length N or empty
  double cbar = 0.0;
};

struct ArnoldiAdjointOptions {
  bool keep_state = false;
  // Re-enforce the Hessenberg-rows consistency conditions ⟨q_i, λ_m⟩ =
  // H̄_{i,m} on each reconstructed multiplier column. The analogue of
  // forward re-orthogonalization for the reverse sweep; off by default
  // only for diagnostics.
  bool reproject = true;
  double breakdown_scale = 1e-14;
};

struct ArnoldiAdjointState {
  Matrix Lambda;  // N×S
  Vector lambda;  // multiplier of the Q e₁ = c v constraint
  Matrix Gamma;   // S×S orthonormality multipliers (symmetric)
  Vector gamma;   // length S, multipliers of Qᵀ r = 0
};

struct ArnoldiAdjointResult {
  Vector grad_theta;
  Vector grad_v;
  std::optional<ArnoldiAdjointState> state;
};

ArnoldiAdjointResult arnoldi_adjoint(const MatVecOperator& op,
                                     const ArnoldiFactorization& fwd,
                                     const ArnoldiCotangents& cot,
                                     const ArnoldiAdjointOptions& opts = {});

// Maximum scaled stationarity residual over the Q, H, r and c blocks of the
// adjoint system (Σ-block rows i > j+1 excluded: those multipliers are
// never solved for). Requires keep_state = true.
double arnoldi_adjoint_residual(const MatVecOperator& op,
                                const ArnoldiFactorization& fwd,
                                const ArnoldiCotangents& cot,
                                const ArnoldiAdjointState& state);

}  // namespace kadj
