#include "kadj/solvers.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace kadj {

PivotedCholesky pivoted_cholesky(const MatVecOperator& op, const Vector& theta,
                                 Index max_rank, double rel_tol) {
  const Index N = op.dim();
  if (!op.is_symmetric())
    throw ContractError("pivoted Cholesky requires a symmetric operator");
  if (!op.has_diag())
    throw ContractError("pivoted Cholesky requires an exact diagonal");
  if (max_rank < 1 || max_rank > N)
    throw DimensionError("rank must satisfy 1 <= rank <= dim");

  Vector d = op.diag(theta);  // residual diagonal of A − L Lᵀ
  const double d0max = d.maxCoeff();
  // A significantly negative residual diagonal entry certifies the operator
  // is not positive semidefinite, even if it never becomes the pivot.
  const double neg_tol = -1e-10 * std::max(1.0, d0max);
  auto check_nonnegative = [&] {
    Index q = 0;
    const double mn = d.minCoeff(&q);
    if (mn < neg_tol)
      throw NotSpdError("negative residual diagonal " + std::to_string(mn) +
                        " at index " + std::to_string(q));
  };
  check_nonnegative();
  PivotedCholesky pc;
  pc.L = Matrix::Zero(N, max_rank);
  pc.pivots.reserve(static_cast<std::size_t>(max_rank));

  Vector unit = Vector::Zero(N);
  for (Index r = 0; r < max_rank; ++r) {
    Index p = 0;
    d.maxCoeff(&p);  // Eigen reports the first (lowest-index) maximizer
    if (d[p] <= rel_tol * d0max || d[p] <= 0.0) break;  // rank exhausted

    unit[p] = 1.0;
    Vector col = op.apply(theta, unit);  // column p of A
    unit[p] = 0.0;

    const double piv = std::sqrt(d[p]);
    Vector l = col;
    if (r > 0)
      l.noalias() -= pc.L.leftCols(r) * pc.L.row(p).head(r).transpose();
    l /= piv;
    l[p] = piv;  // exact by construction; avoids the roundoff of the update

    pc.L.col(r) = l;
    pc.pivots.push_back(p);
    d -= l.cwiseProduct(l);
    d[p] = 0.0;
    check_nonnegative();
    ++pc.rank;
  }
  pc.L.conservativeResize(N, pc.rank);
  pc.diag_residual = d;  // diag(A) − diag(L Lᵀ), pivot entries exactly zero
  return pc;
}

namespace {

class WoodburyPreconditioner final : public Preconditioner {
public:
  WoodburyPreconditioner(Matrix L, double sigma2)
      : L_(std::move(L)), sigma2_(sigma2) {
    if (sigma2 <= 0.0)
      throw DomainError("Woodbury preconditioner needs sigma2 > 0");
    Matrix cap = L_.transpose() * L_;
    cap.diagonal().array() += sigma2_;
    llt_.compute(cap);
    if (llt_.info() != Eigen::Success)
      throw NumericalError("capacitance factorization failed");
  }

  // (L Lᵀ + σ² I)⁻¹ b = (b − L (σ² I + Lᵀ L)⁻¹ Lᵀ b) / σ².
  Vector apply(const Vector& b) const override {
    if (b.size() != L_.rows())
      throw DimensionError("preconditioner input has wrong length");
    return (b - L_ * llt_.solve(L_.transpose() * b)) / sigma2_;
  }

private:
  Matrix L_;
  double sigma2_;
  Eigen::LLT<Matrix> llt_;
};

}  // namespace

std::unique_ptr<Preconditioner> make_woodbury_preconditioner(
    const PivotedCholesky& pc, double sigma2) {
  return std::make_unique<WoodburyPreconditioner>(pc.L, sigma2);
}

PcgResult pcg_solve(const MatVecOperator& op, const Vector& theta,
                    const Vector& b, const PcgOptions& opts) {
  const Index N = op.dim();
  if (!op.is_symmetric())
    throw ContractError("conjugate gradients requires a symmetric operator");
  if (b.size() != N) throw DimensionError("right-hand side has wrong length");
  const Index max_iter = opts.max_iter > 0 ? opts.max_iter : N;

  PcgResult res;
  res.x = Vector::Zero(N);
  Vector r = b;
  double rnorm = r.norm();
  if (rnorm <= opts.tol_abs) {
    res.converged = true;
    res.residual_norm = rnorm;
    return res;
  }

  Vector z = opts.precond ? opts.precond->apply(r) : r;
  Vector p = z;
  double rz = r.dot(z);
  Vector Ap(N);

  for (Index it = 1; it <= max_iter; ++it) {
    Ap = op.apply(theta, p);
    const double pAp = p.dot(Ap);
    if (pAp <= 0.0)
      throw NotSpdError("search direction with nonpositive curvature");
    const double alpha = rz / pAp;
    res.x += alpha * p;
    r -= alpha * Ap;
    res.iterations = it;
    rnorm = r.norm();
    if (rnorm <= opts.tol_abs) {
      res.converged = true;
      break;
    }
    z = opts.precond ? opts.precond->apply(r) : r;
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }

  // Report the true residual, not the recurred one.
  res.residual_norm = (b - op.apply(theta, res.x)).norm();
  return res;
}

PcgPullbackResult pcg_pullback(const MatVecOperator& op, const Vector& theta,
                               const Vector& x, const Vector& xbar,
                               const PcgOptions& opts) {
  if (x.size() != op.dim() || xbar.size() != op.dim())
    throw DimensionError("solution or cotangent has wrong length");
  // Implicit differentiation of A(θ) x = b: with A λ = x̄,
  //   ∇_b ρ = λ and ∇_θ ρ = −⟨λ, (∂A/∂θ) x⟩.
  PcgPullbackResult out;
  out.adjoint_solve = pcg_solve(op, theta, xbar, opts);
  out.grad_b = out.adjoint_solve.x;
  out.grad_theta = -op.vjp_params(theta, x, out.adjoint_solve.x);
  return out;
}

}  // namespace kadj
