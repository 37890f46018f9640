// Dense matrix functions on small projected matrices.
//
// These kernels act on the K×K tridiagonal / Hessenberg matrices produced
// by the Krylov factorizations; K is small (tens), so dense eigensolvers
// and Padé evaluation are appropriate here.
#pragma once

#include <functional>
#include <string>

#include "kadj/operator.hpp"

namespace kadj {

// Scalar function with derivative, applied to eigenvalues of a symmetric
// matrix. `domain_check` may throw DomainError for invalid eigenvalues
// (e.g. log of a non-positive value); null means all reals are accepted.
struct ScalarFunction {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<void(double)> domain_check;  // optional

  static ScalarFunction exp_t(double t);     // x ↦ exp(t·x)
  static ScalarFunction log();               // requires x > 0
  static ScalarFunction sqrt();              // requires x >= 0
  static ScalarFunction inv_sqrt();          // requires x > 0
  static ScalarFunction inverse();           // requires x != 0
  static ScalarFunction identity();
};

// Result of y = f(T) e₁ for symmetric tridiagonal T = tri(a, b), together
// with everything needed for the pullback (spectral decomposition of T).
struct SymFunmE1 {
  Vector y;        // f(T) e₁, length K
  Vector eigs;     // eigenvalues w of T, ascending
  Matrix vecs;     // orthonormal eigenvectors V, T = V diag(w) Vᵀ
};

// Computes f(T) e₁ via the spectral decomposition of the symmetric
// tridiagonal matrix with diagonal a (length K) and off-diagonal b
// (length K−1). Throws DomainError when an eigenvalue violates f's domain.
SymFunmE1 funm_sym_e1(const Vector& a, const Vector& b,
                      const ScalarFunction& fn);

// Pullback of funm_sym_e1: given ȳ, returns the cotangents of the bands.
// Uses the Daleckii–Krein divided-difference kernel
//   L_ij = (f(w_i) − f(w_j)) / (w_i − w_j),  L_ii = f'(w_i),
// with the confluent limit f'((w_i+w_j)/2) when |w_i − w_j| is below
// 1e-10·(1+|w_i|). The full cotangent of T is M = V (L ∘ (Vᵀ ȳ e₁ᵀ V)) Vᵀ;
// the bands are ā_k = M_kk and b̄_k = M_{k,k+1} + M_{k+1,k}.
struct SymFunmE1Pullback {
  Vector abar;  // length K
  Vector bbar;  // length K−1
};
SymFunmE1Pullback funm_sym_e1_pullback(const SymFunmE1& fwd,
                                       const ScalarFunction& fn,
                                       const Vector& ybar);

// f(S) for a symmetric dense matrix via its spectral decomposition.
Matrix funm_sym_full(const Matrix& S, const ScalarFunction& fn);

// exp(t·H) e₁ for a small dense (generally non-symmetric) matrix H, using
// scaling-and-squaring with the degree-13 Padé approximant.
Vector expm_e1(const Matrix& H, double t);

// Full exp(M) by the same Padé scheme (used for the pullback's block trick).
Matrix expm(const Matrix& M);

// Pullback of H ↦ exp(t·H) e₁: given ȳ, returns H̄ as the top-right K×K
// block of exp(t·[[Hᵀ, ȳ e₁ᵀ], [0, Hᵀ]]).
Matrix expm_e1_pullback(const Matrix& H, double t, const Vector& ybar);

}  // namespace kadj
