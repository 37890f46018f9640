#include "kadj/operator.hpp"

#include <cmath>

namespace kadj {

void MatVecOperator::check_theta(const Vector& theta) const {
  if (theta.size() != param_count())
    throw DimensionError("parameter vector has length " +
                         std::to_string(theta.size()) + ", expected " +
                         std::to_string(param_count()));
}

void MatVecOperator::check_vec(const Vector& v, const char* name) const {
  if (v.size() != dim_)
    throw DimensionError(std::string(name) + " has length " +
                         std::to_string(v.size()) + ", expected " +
                         std::to_string(dim_));
}

Vector MatVecOperator::apply(const Vector& theta, const Vector& v) const {
  check_theta(theta);
  check_vec(v, "input vector");
  Vector out(dim_);
  apply_impl(theta, v, out);
  applies_.fetch_add(1, std::memory_order_relaxed);
  return out;
}

Vector MatVecOperator::apply_transpose(const Vector& theta,
                                       const Vector& v) const {
  check_theta(theta);
  check_vec(v, "input vector");
  Vector out(dim_);
  apply_transpose_impl(theta, v, out);
  transposes_.fetch_add(1, std::memory_order_relaxed);
  return out;
}

Vector MatVecOperator::vjp_params(const Vector& theta, const Vector& v,
                                  const Vector& wbar) const {
  check_theta(theta);
  check_vec(v, "input vector");
  check_vec(wbar, "cotangent vector");
  Vector out = Vector::Zero(param_count());
  vjp_params_impl(theta, v, wbar, out);
  vjps_.fetch_add(1, std::memory_order_relaxed);
  return out;
}

Vector MatVecOperator::diag(const Vector& theta) const {
  if (!has_diag_)
    throw ContractError("operator does not expose an exact diagonal");
  check_theta(theta);
  Vector out(dim_);
  diag_impl(theta, out);
  return out;
}

void MatVecOperator::apply_transpose_impl(const Vector& theta, const Vector& v,
                                          Vector& out) const {
  if (!symmetric_)
    throw ContractError(
        "non-symmetric operator is missing an apply_transpose override");
  apply_impl(theta, v, out);
}

void MatVecOperator::diag_impl(const Vector&, Vector&) const {
  throw ContractError("operator does not expose an exact diagonal");
}

namespace {

// A is the row-major reshaping of θ; vjp w.r.t. θ of ⟨w̄, Av⟩ is w̄ vᵀ.
class DenseOperator final : public MatVecOperator {
public:
  explicit DenseOperator(const Matrix& M)
      : MatVecOperator(M.rows(), flatten(M), M.isApprox(M.transpose(), 0.0),
                       /*has_diag=*/true) {
    if (M.rows() != M.cols())
      throw DimensionError("dense operator requires a square matrix");
  }

private:
  static Vector flatten(const Matrix& M) {
    using RowMajor =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor R = M;
    return Eigen::Map<const Vector>(R.data(), R.size());
  }

  using MatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                Eigen::Dynamic, Eigen::RowMajor>>;

  void apply_impl(const Vector& theta, const Vector& v,
                  Vector& out) const override {
    out.noalias() = MatMap(theta.data(), dim(), dim()) * v;
  }

  void apply_transpose_impl(const Vector& theta, const Vector& v,
                            Vector& out) const override {
    out.noalias() = MatMap(theta.data(), dim(), dim()).transpose() * v;
  }

  void vjp_params_impl(const Vector&, const Vector& v, const Vector& wbar,
                       Vector& out) const override {
    Eigen::Map<
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        G(out.data(), dim(), dim());
    G.noalias() = wbar * v.transpose();
  }

  void diag_impl(const Vector& theta, Vector& out) const override {
    out = MatMap(theta.data(), dim(), dim()).diagonal();
  }
};

class HilbertOperator final : public MatVecOperator {
public:
  explicit HilbertOperator(Index n)
      : MatVecOperator(n, Vector(0), /*symmetric=*/true, /*has_diag=*/true) {}

private:
  // Entries 1/(i+j+1) with 1-based i, j (so the top-left entry is 1/3).
  void apply_impl(const Vector&, const Vector& v, Vector& out) const override {
    for (Index i = 0; i < dim(); ++i) {
      double s = 0.0;
      for (Index j = 0; j < dim(); ++j)
        s += v[j] / static_cast<double>(i + j + 3);
      out[i] = s;
    }
  }

  void vjp_params_impl(const Vector&, const Vector&, const Vector&,
                       Vector&) const override {}

  void diag_impl(const Vector&, Vector& out) const override {
    for (Index i = 0; i < dim(); ++i)
      out[i] = 1.0 / static_cast<double>(2 * i + 3);
  }
};

// First-order form of the wave equation on an n×n Neumann grid:
//   A(ω)(w, ẇ) = dt_scale · (ẇ, diag(ω²) M w)
// with M the 5-point Laplacian, h = 1/(n−1), and mirror boundaries
// implemented by dropping the off-grid neighbor and reusing the center
// (ghost value = center value ⇒ that neighbor contributes 0 to the stencil
// sum u_nb − u_c). M is symmetric; A is not.
class WaveOperator final : public MatVecOperator {
public:
  WaveOperator(Index n, const Vector& omega, double dt_scale)
      : MatVecOperator(2 * n * n, omega, /*symmetric=*/false,
                       /*has_diag=*/true),
        n_(n),
        dt_(dt_scale) {
    if (n < 2) throw DimensionError("wave grid needs n >= 2");
    if (omega.size() != n * n)
      throw DimensionError("omega must have length n^2");
  }

private:
  Index n_;
  double dt_;

  double inv_h2() const {
    const double h = 1.0 / static_cast<double>(n_ - 1);
    return 1.0 / (h * h);
  }

  // out = M u (Laplacian with mirror boundaries), u and out of length n².
  void laplacian(const double* u, double* out) const {
    const double s = inv_h2();
    const Index n = n_;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const Index c = i * n + j;
        double acc = 0.0;
        if (i > 0) acc += u[c - n] - u[c];
        if (i + 1 < n) acc += u[c + n] - u[c];
        if (j > 0) acc += u[c - 1] - u[c];
        if (j + 1 < n) acc += u[c + 1] - u[c];
        out[c] = s * acc;
      }
    }
  }

  void apply_impl(const Vector& theta, const Vector& v,
                  Vector& out) const override {
    const Index m = n_ * n_;
    out.head(m) = dt_ * v.tail(m);
    laplacian(v.data(), out.data() + m);
    out.tail(m).array() *= dt_ * theta.array().square();
  }

  // Aᵀ = dt_scale · [[0, M diag(ω²)], [I, 0]] since M is symmetric.
  void apply_transpose_impl(const Vector& theta, const Vector& v,
                            Vector& out) const override {
    const Index m = n_ * n_;
    Vector scaled = theta.array().square() * v.tail(m).array();
    laplacian(scaled.data(), out.data());
    out.head(m) *= dt_;
    out.tail(m) = dt_ * v.head(m);
  }

  // ⟨w̄, A v⟩ depends on ω only through the bottom block:
  // Σ_c w̄_bot[c] · dt · ω_c² · (M v_top)[c]  ⇒  ∂/∂ω_c = 2 dt ω_c w̄_bot[c] (M v_top)[c].
  void vjp_params_impl(const Vector& theta, const Vector& v,
                       const Vector& wbar, Vector& out) const override {
    const Index m = n_ * n_;
    Vector Mv(m);
    laplacian(v.data(), Mv.data());
    out.array() = 2.0 * dt_ * theta.array() * wbar.tail(m).array() * Mv.array();
  }

  void diag_impl(const Vector&, Vector& out) const override { out.setZero(); }
};

// s² exp(−‖x_i − x_j‖² / (2ℓ²)) + σ² δ_ij, θ = (log ℓ, log s, log σ).
// Products are evaluated block_rows rows at a time; only one block of the
// Gram matrix exists at any moment.
class RbfKernelOperator final : public MatVecOperator {
public:
  RbfKernelOperator(Matrix X, Index block_rows, const Vector& log_params)
      : MatVecOperator(X.rows(), log_params, /*symmetric=*/true,
                       /*has_diag=*/true),
        X_(std::move(X)),
        sq_(X_.rowwise().squaredNorm()),
        block_(block_rows) {
    if (log_params.size() != 3)
      throw DimensionError("RBF kernel takes 3 log-parameters");
    if (block_ < 1) throw DimensionError("block_rows must be positive");
  }

private:
  Matrix X_;
  Vector sq_;
  Index block_;

  struct Params {
    double ell2, s2, sig2;
  };
  static Params unpack(const Vector& theta) {
    return {std::exp(2.0 * theta[0]), std::exp(2.0 * theta[1]),
            std::exp(2.0 * theta[2])};
  }

  // Squared distances from the rows of a block to all points.
  Matrix block_dist2(Index r0, Index rows) const {
    Matrix d2 = (-2.0 * X_.middleRows(r0, rows) * X_.transpose());
    d2.colwise() += sq_.segment(r0, rows);
    d2.rowwise() += sq_.transpose();
    return d2.cwiseMax(0.0);
  }

  void apply_impl(const Vector& theta, const Vector& v,
                  Vector& out) const override {
    const Params p = unpack(theta);
    for (Index r0 = 0; r0 < dim(); r0 += block_) {
      const Index rows = std::min(block_, dim() - r0);
      const Matrix k =
          p.s2 * (-block_dist2(r0, rows) / (2.0 * p.ell2)).array().exp().matrix();
      out.segment(r0, rows).noalias() = k * v;
    }
    out += p.sig2 * v;
  }

  // ∂⟨w̄, Kv⟩ for k = s² e^{−d²/(2ℓ²)}: ∂_{logℓ} k = k·d²/ℓ²,
  // ∂_{log s} k = 2k, ∂_{log σ} (σ² w̄ᵀv) = 2σ² w̄ᵀv.
  void vjp_params_impl(const Vector& theta, const Vector& v,
                       const Vector& wbar, Vector& out) const override {
    const Params p = unpack(theta);
    double g_ell = 0.0, g_s = 0.0;
    for (Index r0 = 0; r0 < dim(); r0 += block_) {
      const Index rows = std::min(block_, dim() - r0);
      const Matrix d2 = block_dist2(r0, rows);
      const Matrix k = p.s2 * (-d2 / (2.0 * p.ell2)).array().exp().matrix();
      const Vector wseg = wbar.segment(r0, rows);
      g_ell += wseg.dot((k.cwiseProduct(d2) / p.ell2) * v);
      g_s += 2.0 * wseg.dot(k * v);
    }
    out[0] = g_ell;
    out[1] = g_s;
    out[2] = 2.0 * p.sig2 * wbar.dot(v);
  }

  void diag_impl(const Vector& theta, Vector& out) const override {
    const Params p = unpack(theta);
    out.setConstant(p.s2 + p.sig2);
  }
};

}  // namespace

std::unique_ptr<MatVecOperator> make_dense_operator(const Matrix& M) {
  return std::make_unique<DenseOperator>(M);
}

std::unique_ptr<MatVecOperator> make_hilbert_operator(Index n) {
  return std::make_unique<HilbertOperator>(n);
}

std::unique_ptr<MatVecOperator> make_wave_operator(Index n, const Vector& omega,
                                                   double dt_scale) {
  return std::make_unique<WaveOperator>(n, omega, dt_scale);
}

std::unique_ptr<MatVecOperator> make_rbf_kernel_operator(
    const Matrix& X, Index block_rows, const Vector& initial_log_params) {
  return std::make_unique<RbfKernelOperator>(X, block_rows,
                                             initial_log_params);
}

}  // namespace kadj
