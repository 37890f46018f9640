// Linear solvers: preconditioned conjugate gradients with an
// implicit-differentiation pullback, and a pivoted-Cholesky low-rank
// preconditioner applied through the Woodbury identity.
#pragma once

#include <functional>
#include <memory>

#include "kadj/operator.hpp"

namespace kadj {

// Rank-revealing partial Cholesky A ≈ L Lᵀ (L is N×R) built greedily from
// the largest remaining diagonal entry (lowest index on ties), probing one
// operator column per accepted pivot via a unit-vector product. Requires
// has_diag(); throws NotSpdError when a residual diagonal entry is
// significantly negative, stops early when the residual diagonal is
// exhausted (exact rank < R).
struct PivotedCholesky {
  Matrix L;                    // N×R_actual
  std::vector<Index> pivots;   // accepted pivot indices, in order
  Index rank = 0;              // R_actual
  Vector diag_residual;        // diag(A) − diag(L Lᵀ), entries ≥ −1e-10
};

PivotedCholesky pivoted_cholesky(const MatVecOperator& op, const Vector& theta,
                                 Index max_rank, double rel_tol = 0.0);

// Preconditioner interface: y ≈ A⁻¹ b.
class Preconditioner {
public:
  virtual ~Preconditioner() = default;
  virtual Vector apply(const Vector& b) const = 0;
};

// (L Lᵀ + σ² I)⁻¹ through the Woodbury identity; the R×R capacitance
// σ² I + Lᵀ L is factored once at construction. σ² must be positive.
std::unique_ptr<Preconditioner> make_woodbury_preconditioner(
    const PivotedCholesky& pc, double sigma2);

struct PcgOptions {
  double tol_abs = 1.0;        // stop when ‖b − A x‖₂ ≤ tol_abs (absolute)
  Index max_iter = 0;          // 0 → dimension of the system
  const Preconditioner* precond = nullptr;  // null → plain CG
};

struct PcgResult {
  Vector x;
  Index iterations = 0;
  double residual_norm = 0.0;  // final ‖b − A x‖₂ (recomputed, not recurred)
  bool converged = false;
};

// Conjugate gradients on symmetric positive definite A(θ) x = b, starting
// from x₀ = 0. Non-convergence within max_iter is reported, not thrown.
PcgResult pcg_solve(const MatVecOperator& op, const Vector& theta,
                    const Vector& b, const PcgOptions& opts = {});

struct PcgPullbackResult {
  Vector grad_theta;  // −vjp_params(θ, x, λ) with A λ = x̄
  Vector grad_b;      // λ
  PcgResult adjoint_solve;  // diagnostics of the inner solve
};

// Implicit-differentiation pullback of x(θ, b) = A(θ)⁻¹ b: solves the
// (symmetric) adjoint system A λ = x̄ with the same solver and options.
PcgPullbackResult pcg_pullback(const MatVecOperator& op, const Vector& theta,
                               const Vector& x, const Vector& xbar,
                               const PcgOptions& opts = {});

}  // namespace kadj
