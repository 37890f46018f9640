#include "kadj/dense_funm.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace kadj {

ScalarFunction ScalarFunction::exp_t(double t) {
  return {"exp", [t](double x) { return std::exp(t * x); },
          [t](double x) { return t * std::exp(t * x); }, nullptr};
}

ScalarFunction ScalarFunction::log() {
  return {"log", [](double x) { return std::log(x); },
          [](double x) { return 1.0 / x; }, [](double x) {
            if (x <= 0.0)
              throw DomainError("log requires a positive spectrum; got "
                                "eigenvalue " +
                                std::to_string(x));
          }};
}

ScalarFunction ScalarFunction::sqrt() {
  return {"sqrt", [](double x) { return std::sqrt(x); },
          [](double x) { return 0.5 / std::sqrt(x); }, [](double x) {
            if (x < 0.0)
              throw DomainError(
                  "sqrt requires a nonnegative spectrum; got eigenvalue " +
                  std::to_string(x));
          }};
}

ScalarFunction ScalarFunction::inv_sqrt() {
  return {"inv_sqrt", [](double x) { return 1.0 / std::sqrt(x); },
          [](double x) { return -0.5 / (x * std::sqrt(x)); },
          [](double x) {
            if (x <= 0.0)
              throw DomainError(
                  "inverse sqrt requires a positive spectrum; got "
                  "eigenvalue " +
                  std::to_string(x));
          }};
}

ScalarFunction ScalarFunction::inverse() {
  return {"inverse", [](double x) { return 1.0 / x; },
          [](double x) { return -1.0 / (x * x); }, [](double x) {
            if (x == 0.0)
              throw DomainError("inverse requires a nonsingular spectrum");
          }};
}

ScalarFunction ScalarFunction::identity() {
  return {"identity", [](double x) { return x; }, [](double) { return 1.0; },
          nullptr};
}

namespace {

Matrix tridiag(const Vector& a, const Vector& b) {
  const Index K = a.size();
  Matrix T = Matrix::Zero(K, K);
  T.diagonal() = a;
  if (K > 1) {
    T.diagonal(1) = b.head(K - 1);
    T.diagonal(-1) = b.head(K - 1);
  }
  return T;
}

void check_domain(const ScalarFunction& fn, const Vector& eigs) {
  if (!fn.domain_check) return;
  for (Index i = 0; i < eigs.size(); ++i) fn.domain_check(eigs[i]);
}

}  // namespace

SymFunmE1 funm_sym_e1(const Vector& a, const Vector& b,
                      const ScalarFunction& fn) {
  const Index K = a.size();
  if (K < 1) throw DimensionError("empty tridiagonal matrix");
  if (b.size() != K - 1 && !(K == 1 && b.size() == 0))
    throw DimensionError("off-diagonal band must have length K-1");

  Eigen::SelfAdjointEigenSolver<Matrix> es(tridiag(a, b));
  if (es.info() != Eigen::Success)
    throw NumericalError("symmetric eigendecomposition failed");

  SymFunmE1 r;
  r.eigs = es.eigenvalues();
  r.vecs = es.eigenvectors();
  check_domain(fn, r.eigs);

  Vector fe(K);
  for (Index i = 0; i < K; ++i) fe[i] = fn.f(r.eigs[i]);
  r.y = r.vecs * fe.cwiseProduct(r.vecs.row(0).transpose());
  return r;
}

SymFunmE1Pullback funm_sym_e1_pullback(const SymFunmE1& fwd,
                                       const ScalarFunction& fn,
                                       const Vector& ybar) {
  const Index K = fwd.y.size();
  if (ybar.size() != K) throw DimensionError("cotangent has wrong length");
  const Vector& w = fwd.eigs;
  const Matrix& V = fwd.vecs;

  // Divided-difference kernel with the confluent limit near coincidence.
  Matrix L(K, K);
  for (Index i = 0; i < K; ++i) {
    for (Index j = 0; j < K; ++j) {
      const double gap = w[i] - w[j];
      if (std::abs(gap) < 1e-10 * (1.0 + std::abs(w[i])))
        L(i, j) = fn.df(0.5 * (w[i] + w[j]));
      else
        L(i, j) = (fn.f(w[i]) - fn.f(w[j])) / gap;
    }
  }

  // T̄ = V (L ∘ (Vᵀ ȳ e₁ᵀ V)) Vᵀ, then read the bands off T̄.
  const Vector u = V.transpose() * ybar;           // Vᵀ ȳ
  const Vector e1V = V.row(0).transpose();         // Vᵀ e₁
  const Matrix M = V * L.cwiseProduct(u * e1V.transpose()) * V.transpose();

  SymFunmE1Pullback out;
  out.abar = M.diagonal();
  out.bbar = Vector(K > 0 ? K - 1 : 0);
  for (Index k = 0; k + 1 < K; ++k) out.bbar[k] = M(k, k + 1) + M(k + 1, k);
  return out;
}

Matrix funm_sym_full(const Matrix& S, const ScalarFunction& fn) {
  if (S.rows() != S.cols()) throw DimensionError("square matrix required");
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.info() != Eigen::Success)
    throw NumericalError("symmetric eigendecomposition failed");
  check_domain(fn, es.eigenvalues());
  Vector fe(S.rows());
  for (Index i = 0; i < S.rows(); ++i) fe[i] = fn.f(es.eigenvalues()[i]);
  return es.eigenvectors() * fe.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

// Degree-13 Padé approximant of exp with scaling and squaring; the standard
// coefficients and the θ₁₃ = 5.37 scaling threshold.
Matrix expm_pade13(const Matrix& A) {
  static const double c[] = {64764752532480000.0, 32382376266240000.0,
                             7771770303897600.0,  1187353796428800.0,
                             129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,
                             1323241920.0,        40840800.0,
                             960960.0,            16380.0,
                             182.0,               1.0};
  const Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A2 * A4;
  const Matrix U =
      A * (A6 * (c[13] * A6 + c[11] * A4 + c[9] * A2) + c[7] * A6 +
           c[5] * A4 + c[3] * A2 + c[1] * I);
  const Matrix W = A6 * (c[12] * A6 + c[10] * A4 + c[8] * A2) + c[6] * A6 +
                   c[4] * A4 + c[2] * A2 + c[0] * I;
  return (W - U).partialPivLu().solve(W + U);
}

}  // namespace

Matrix expm(const Matrix& M) {
  if (M.rows() != M.cols()) throw DimensionError("square matrix required");
  const double norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm1)) throw OverflowError("non-finite matrix entries");
  int s = 0;
  if (norm1 > 5.37) s = static_cast<int>(std::ceil(std::log2(norm1 / 5.37)));
  Matrix E = expm_pade13(M / std::pow(2.0, s));
  for (int i = 0; i < s; ++i) E = E * E;
  return E;
}

Vector expm_e1(const Matrix& H, double t) {
  Matrix E = expm(t * H);
  return E.col(0);
}

Matrix expm_e1_pullback(const Matrix& H, double t, const Vector& ybar) {
  const Index K = H.rows();
  if (ybar.size() != K) throw DimensionError("cotangent has wrong length");
  // Block trick:  exp(t·[[Hᵀ, ȳ e₁ᵀ], [0, Hᵀ]]) has H̄ in the top-right
  // block (the t inside the augmented matrix provides the chain-rule
  // factor; no further scaling).
  Matrix aug = Matrix::Zero(2 * K, 2 * K);
  aug.topLeftCorner(K, K) = H.transpose();
  aug.bottomRightCorner(K, K) = H.transpose();
  aug.block(0, K, K, K).col(0) = ybar;  // ȳ e₁ᵀ occupies the first column
  const Matrix E = expm(t * aug);
  return E.topRightCorner(K, K);
}

}  // namespace kadj
