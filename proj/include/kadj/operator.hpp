// Matrix-free parametrized linear operators.
//
// A MatVecOperator represents a square matrix A(θ) that is only accessible
// through matrix-vector products, transpose products, and a parameter
// pullback. Concrete operators (dense, Hilbert, wave stencil, RBF kernel
// Gram, CSR sparse) are constructed through the factory functions below.
//
// Parameters are not stored inside the operator: every product takes the
// parameter vector θ explicitly, so the same operator can be evaluated at
// many parameter values (finite differences, optimization steps) without
// rebuilding it. `default_params()` returns the construction-time values.
//
// Thread safety: operators are immutable after construction; all products
// may be invoked concurrently. The usage counters are atomic.
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

#include <Eigen/Dense>

#include "kadj/errors.hpp"

namespace kadj {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

class MatVecOperator {
public:
  virtual ~MatVecOperator() = default;

  MatVecOperator(const MatVecOperator&) = delete;
  MatVecOperator& operator=(const MatVecOperator&) = delete;

  Index dim() const { return dim_; }
  Index param_count() const { return default_params_.size(); }
  bool is_symmetric() const { return symmetric_; }
  bool has_diag() const { return has_diag_; }
  const Vector& default_params() const { return default_params_; }

  // y = A(θ) v. Increments the matvec counter by exactly one.
  Vector apply(const Vector& theta, const Vector& v) const;

  // y = A(θ)ᵀ v. Increments the matvec counter by exactly one.
  Vector apply_transpose(const Vector& theta, const Vector& v) const;

  // Gradient of θ ↦ ⟨w̄, A(θ) v⟩. Has its own counter.
  Vector vjp_params(const Vector& theta, const Vector& v,
                    const Vector& wbar) const;

  // Exact diagonal of A(θ); throws ContractError when has_diag() is false.
  Vector diag(const Vector& theta) const;

  // Counters. matvec_count() counts apply and apply_transpose equally.
  std::uint64_t matvec_count() const {
    return apply_count() + transpose_count();
  }
  std::uint64_t apply_count() const {
    return applies_.load(std::memory_order_relaxed);
  }
  std::uint64_t transpose_count() const {
    return transposes_.load(std::memory_order_relaxed);
  }
  std::uint64_t vjp_count() const {
    return vjps_.load(std::memory_order_relaxed);
  }

protected:
  MatVecOperator(Index dim, Vector default_params, bool symmetric,
                 bool has_diag)
      : dim_(dim),
        default_params_(std::move(default_params)),
        symmetric_(symmetric),
        has_diag_(has_diag) {
    if (dim_ < 1) throw DimensionError("operator dimension must be positive");
  }

  virtual void apply_impl(const Vector& theta, const Vector& v,
                          Vector& out) const = 0;
  // Default forwards to apply_impl, which is only valid for symmetric
  // operators; non-symmetric subclasses must override.
  virtual void apply_transpose_impl(const Vector& theta, const Vector& v,
                                    Vector& out) const;
  virtual void vjp_params_impl(const Vector& theta, const Vector& v,
                               const Vector& wbar, Vector& out) const = 0;
  virtual void diag_impl(const Vector& theta, Vector& out) const;

private:
  void check_theta(const Vector& theta) const;
  void check_vec(const Vector& v, const char* name) const;

  Index dim_;
  Vector default_params_;
  bool symmetric_;
  bool has_diag_;
  mutable std::atomic<std::uint64_t> applies_{0};
  mutable std::atomic<std::uint64_t> transposes_{0};
  mutable std::atomic<std::uint64_t> vjps_{0};
};

// Dense operator. θ is the row-major flattening of the matrix itself
// (vjp_params(θ, v, w̄) = row-major flattening of w̄ vᵀ); M supplies the
// dimension, the default parameters, and the symmetry flag (exact M == Mᵀ).
std::unique_ptr<MatVecOperator> make_dense_operator(const Matrix& M);

// Hilbert-type matrix A_ij = 1/(i+j+1) with 1-based i, j (top-left entry
// 1/3). No free parameters.
std::unique_ptr<MatVecOperator> make_hilbert_operator(Index n);

// First-order wave-equation block operator of dimension 2n² over an
// equidistant n×n grid with spacing 1/(n−1):
//
//   A(ω) = dt_scale · [[0, I], [diag(ω²)·M, 0]],
//
// where M is the 5-point Laplacian with homogeneous Neumann (mirror)
// boundaries, applied as a stencil (never materialized). θ = ω (length n²).
std::unique_ptr<MatVecOperator> make_wave_operator(Index n, const Vector& omega,
                                                   double dt_scale);

// Square-exponential kernel Gram operator on M points (rows of X):
//
//   A(θ) = [s²·exp(−‖x_i−x_j‖²/(2ℓ²))]_{ij} + σ²·I,
//   θ = (log ℓ, log s, log σ),
//
// evaluated row-block-wise (block_rows rows at a time) without storing the
// Gram matrix. diag(θ) = s² + σ² exactly. initial_log_params becomes
// default_params() (zeros if omitted).
std::unique_ptr<MatVecOperator> make_rbf_kernel_operator(
    const Matrix& X, Index block_rows,
    const Vector& initial_log_params = Vector::Zero(3));

}  // namespace kadj
