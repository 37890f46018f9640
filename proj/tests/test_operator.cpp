// Operator-module tests: factories, products, transposes, parameter
// pullbacks, usage counters, and Matrix Market I/O.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "kadj/matrix_market.hpp"
#include "kadj/operator.hpp"
#include "support/dense_reference.hpp"

using kadj::Index;
using kadj::Matrix;
using kadj::Vector;
using testsupport::central_fd;
using testsupport::materialize;
using testsupport::random_matrix;
using testsupport::random_vector;

namespace {

// ⟨w, A v⟩ must equal ⟨Aᵀ w, v⟩ for arbitrary w, v.
void check_transpose_pairing(const kadj::MatVecOperator& op,
                             const Vector& theta, std::uint64_t seed) {
  const Vector v = random_vector(op.dim(), seed);
  const Vector w = random_vector(op.dim(), seed + 1);
  const double lhs = w.dot(op.apply(theta, v));
  const double rhs = op.apply_transpose(theta, w).dot(v);
  CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
}

// vjp_params against central finite differences of θ ↦ ⟨w̄, A(θ) v⟩.
void check_vjp(const kadj::MatVecOperator& op, const Vector& theta,
               std::uint64_t seed) {
  const Vector v = random_vector(op.dim(), seed);
  const Vector wbar = random_vector(op.dim(), seed + 7);
  const Vector g = op.vjp_params(theta, v, wbar);
  REQUIRE(g.size() == op.param_count());
  const double h =
      1e-6 * (1.0 + (theta.size() ? theta.cwiseAbs().maxCoeff() : 0.0));
  auto f = [&](const Vector& th) { return wbar.dot(op.apply(th, v)); };
  for (Index i = 0; i < theta.size(); ++i) {
    Vector u = Vector::Zero(theta.size());
    u[i] = 1.0;
    const double fd = central_fd(f, theta, u, h);
    CHECK(std::abs(g[i] - fd) <=
          1e-5 * std::max({1.0, std::abs(g[i]), std::abs(fd)}));
  }
}

}  // namespace

TEST_CASE("dense operator reproduces its matrix, transpose, and gradient") {
  const Matrix M = random_matrix(7, 42);
  auto op = kadj::make_dense_operator(M);
  REQUIRE(op->dim() == 7);
  REQUIRE(op->param_count() == 49);
  CHECK_FALSE(op->is_symmetric());

  const Vector theta = op->default_params();
  const Vector v = random_vector(7, 3);
  CHECK((op->apply(theta, v) - M * v).norm() <= 1e-14 * M.norm() * v.norm());
  CHECK((op->apply_transpose(theta, v) - M.transpose() * v).norm() <=
        1e-14 * M.norm() * v.norm());

  // θ is the row-major flattening: perturbing θ[i*n+j] perturbs A_ij.
  Vector theta2 = theta;
  theta2[2 * 7 + 5] += 1.0;
  Matrix M2 = M;
  M2(2, 5) += 1.0;
  CHECK((op->apply(theta2, v) - M2 * v).norm() <= 1e-13);

  check_transpose_pairing(*op, theta, 10);
  check_vjp(*op, theta, 11);

  SUBCASE("symmetry is detected exactly") {
    const Matrix S = M + M.transpose();
    CHECK(kadj::make_dense_operator(S)->is_symmetric());
  }
}

TEST_CASE("operator usage counters advance by exactly one per product") {
  auto op = kadj::make_dense_operator(random_matrix(5, 1));
  const Vector theta = op->default_params();
  const Vector v = random_vector(5, 2);
  CHECK(op->matvec_count() == 0);
  op->apply(theta, v);
  CHECK(op->apply_count() == 1);
  CHECK(op->transpose_count() == 0);
  op->apply_transpose(theta, v);
  op->apply_transpose(theta, v);
  CHECK(op->transpose_count() == 2);
  CHECK(op->matvec_count() == 3);
  CHECK(op->vjp_count() == 0);
  op->vjp_params(theta, v, v);
  CHECK(op->vjp_count() == 1);
  CHECK(op->matvec_count() == 3);  // vjp does not count as a matvec
}

TEST_CASE("hilbert operator entries are 1/(i+j+1) with 1-based indices") {
  auto h1 = kadj::make_hilbert_operator(1);
  const Matrix A1 = materialize(*h1, h1->default_params());
  CHECK(A1(0, 0) == 1.0 / 3.0);  // i = j = 1

  auto h2 = kadj::make_hilbert_operator(2);
  const Matrix A2 = materialize(*h2, h2->default_params());
  CHECK(A2(0, 0) == 1.0 / 3.0);
  CHECK(A2(0, 1) == 1.0 / 4.0);
  CHECK(A2(1, 0) == 1.0 / 4.0);
  CHECK(A2(1, 1) == 1.0 / 5.0);

  auto h8 = kadj::make_hilbert_operator(8);
  CHECK(h8->is_symmetric());
  CHECK(h8->param_count() == 0);
  REQUIRE(h8->has_diag());
  const Vector d = h8->diag(h8->default_params());
  for (Index i = 0; i < 8; ++i) CHECK(d[i] == 1.0 / (2.0 * double(i) + 3.0));
  check_transpose_pairing(*h8, h8->default_params(), 20);
}

TEST_CASE("wave operator block structure and Neumann stencil") {
  const Index n = 4;
  const Index dim = 2 * n * n;
  const double dt = 0.37;

  SUBCASE("zero field: bottom block vanishes, top block copies velocity") {
    auto op = kadj::make_wave_operator(n, Vector::Zero(n * n), dt);
    REQUIRE(op->dim() == dim);
    REQUIRE(op->param_count() == n * n);
    const Vector v = random_vector(dim, 5);
    const Vector y = op->apply(op->default_params(), v);
    CHECK((y.head(n * n) - dt * v.tail(n * n)).norm() <= 1e-15);
    CHECK(y.tail(n * n).norm() == 0.0);
  }

  SUBCASE("constant displacement is in the mirror-Laplacian null space") {
    const Vector omega = random_vector(n * n, 6).array() + 2.0;
    auto op = kadj::make_wave_operator(n, omega, dt);
    Vector v = Vector::Zero(dim);
    v.head(n * n).setConstant(3.25);
    const Vector y = op->apply(omega, v);
    CHECK(y.tail(n * n).norm() <= 1e-12);
  }

  SUBCASE("transpose pairing and parameter gradient") {
    const Vector omega = random_vector(n * n, 7);
    auto op = kadj::make_wave_operator(n, omega, dt);
    CHECK_FALSE(op->is_symmetric());
    check_transpose_pairing(*op, omega, 30);
    check_vjp(*op, omega, 31);
  }
}

TEST_CASE("rbf kernel gram operator") {
  SUBCASE("single point at unit hyperparameters gives s² + σ² = 2") {
    Matrix X(1, 2);
    X << 0.4, -1.1;
    auto op = kadj::make_rbf_kernel_operator(X, 1);
    Vector v(1);
    v << 1.0;
    CHECK(op->apply(Vector::Zero(3), v)[0] == doctest::Approx(2.0).epsilon(1e-15));
  }

  SUBCASE("two identical points: kernel block is all s²") {
    Matrix X(2, 3);
    X.row(0) << 1.0, 2.0, 3.0;
    X.row(1) << 1.0, 2.0, 3.0;
    auto op = kadj::make_rbf_kernel_operator(X, 2);
    const Matrix A = materialize(*op, Vector::Zero(3));
    CHECK(A(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(A(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(A(1, 0) == A(0, 1));
  }

  SUBCASE("blocked evaluation matches one-shot evaluation bitwise") {
    const Index m = 11;
    Matrix X(m, 2);
    for (Index i = 0; i < m; ++i)
      X.row(i) = testsupport::random_vector(2, 100 + i).transpose();
    Vector theta(3);
    theta << 0.3, -0.2, 0.1;
    auto blocked = kadj::make_rbf_kernel_operator(X, 3, theta);
    auto oneshot = kadj::make_rbf_kernel_operator(X, m, theta);
    const Vector v = random_vector(m, 9);
    CHECK((blocked->apply(theta, v) - oneshot->apply(theta, v)).norm() <=
          1e-13);
  }

  SUBCASE("diagonal, symmetry, and hyperparameter gradients") {
    const Index m = 9;
    Matrix X(m, 2);
    for (Index i = 0; i < m; ++i)
      X.row(i) = testsupport::random_vector(2, 200 + i).transpose();
    Vector theta(3);
    theta << 0.25, -0.4, -0.9;
    auto op = kadj::make_rbf_kernel_operator(X, 4, theta);
    CHECK(op->is_symmetric());
    REQUIRE(op->has_diag());
    const Vector d = op->diag(theta);
    const double want = std::exp(2.0 * theta[1]) + std::exp(2.0 * theta[2]);
    for (Index i = 0; i < m; ++i)
      CHECK(d[i] == doctest::Approx(want).epsilon(1e-15));
    const Matrix A = materialize(*op, theta);
    CHECK((A - A.transpose()).norm() <= 1e-14);
    check_vjp(*op, theta, 44);
  }
}

TEST_CASE("matrix market reader, writer, and CSR operator") {
  SUBCASE("coordinate general file round-trips through write/read") {
    kadj::CsrMatrix m;
    m.dim = 3;
    m.row_ptr = {0, 2, 3, 4};
    m.col = {0, 2, 1, 0};
    m.val = {1.5, -2.25, 0.125, 3.0};
    const std::string path = "op_roundtrip.mtx";
    kadj::write_matrix_market(path, m);
    const kadj::CsrMatrix back = kadj::read_matrix_market(path);
    REQUIRE(back.dim == 3);
    REQUIRE(back.nnz() == 4);
    CHECK(back.row_ptr == m.row_ptr);
    CHECK(back.col == m.col);
    CHECK(back.val == m.val);
    std::remove(path.c_str());
  }

  SUBCASE("symmetric banner reflects the lower triangle") {
    const std::string path = "op_symm.mtx";
    {
      std::ofstream f(path);
      f << "%%MatrixMarket matrix coordinate real symmetric\n"
        << "% comment line\n"
        << "2 2 2\n"
        << "1 1 4.0\n"
        << "2 1 -1.0\n";
    }
    const kadj::CsrMatrix m = kadj::read_matrix_market(path);
    auto op = kadj::make_csr_operator(m);
    CHECK(op->is_symmetric());
    const Matrix A = materialize(*op, Vector());
    CHECK(A(0, 0) == 4.0);
    CHECK(A(1, 0) == -1.0);
    CHECK(A(0, 1) == -1.0);
    CHECK(A(1, 1) == 0.0);
    std::remove(path.c_str());
  }

  SUBCASE("duplicate entries are summed") {
    const std::string path = "op_dup.mtx";
    {
      std::ofstream f(path);
      f << "%%MatrixMarket matrix coordinate real general\n"
        << "2 2 3\n"
        << "1 1 1.0\n"
        << "1 1 2.0\n"
        << "2 2 5.0\n";
    }
    const kadj::CsrMatrix m = kadj::read_matrix_market(path);
    CHECK(m.nnz() == 2);
    const Matrix A = materialize(*kadj::make_csr_operator(m), Vector());
    CHECK(A(0, 0) == 3.0);
    std::remove(path.c_str());
  }

  SUBCASE("parse errors carry the offending 1-based line number") {
    const std::string path = "op_bad.mtx";
    {
      std::ofstream f(path);
      f << "%%MatrixMarket matrix coordinate real general\n"
        << "2 2 1\n"
        << "3 1 1.0\n";  // row index out of range, line 3
    }
    try {
      kadj::read_matrix_market(path);
      FAIL("expected ParseError");
    } catch (const kadj::ParseError& e) {
      CHECK(e.line() == 3);
    }
    std::remove(path.c_str());

    {
      std::ofstream f(path);
      f << "%%MatrixMarket matrix array real general\n";
    }
    try {
      kadj::read_matrix_market(path);
      FAIL("expected ParseError");
    } catch (const kadj::ParseError& e) {
      CHECK(e.line() == 1);
    }
    std::remove(path.c_str());

    CHECK_THROWS_AS(kadj::read_matrix_market("no_such_file.mtx"),
                    kadj::IoError);
  }

  SUBCASE("CSR products match the dense materialization") {
    const Index n = 6;
    const Matrix D = random_matrix(n, 77);
    kadj::CsrMatrix m;
    m.dim = n;
    m.row_ptr.assign(1, 0);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (std::abs(D(i, j)) < 0.8) continue;  // sparsify deterministically
        m.col.push_back(j);
        m.val.push_back(D(i, j));
      }
      m.row_ptr.push_back(static_cast<Index>(m.col.size()));
    }
    Matrix Dsp = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
        Dsp(i, m.col[k]) = m.val[k];

    auto op = kadj::make_csr_operator(m);
    const Vector v = random_vector(n, 78);
    CHECK((op->apply(Vector(), v) - Dsp * v).norm() <= 1e-14);
    CHECK((op->apply_transpose(Vector(), v) - Dsp.transpose() * v).norm() <=
          1e-14);
    REQUIRE(op->has_diag());
    CHECK((op->diag(Vector()) - Dsp.diagonal()).norm() == 0.0);
    check_transpose_pairing(*op, Vector(), 80);
  }
}

TEST_CASE("dimension and contract violations are rejected") {
  const Matrix M = random_matrix(4, 5);
  auto op = kadj::make_dense_operator(M);
  const Vector theta = op->default_params();
  CHECK_THROWS_AS(op->apply(theta, random_vector(3, 1)),
                  kadj::DimensionError);
  CHECK_THROWS_AS(op->apply(random_vector(7, 1), random_vector(4, 1)),
                  kadj::DimensionError);
  CHECK_THROWS_AS(kadj::make_hilbert_operator(0), kadj::DimensionError);

  REQUIRE(op->has_diag());
  CHECK((op->diag(theta) - M.diagonal()).norm() == 0.0);

  // Base-class contract paths, exercised through a minimal subclass that
  // advertises neither a diagonal nor symmetry nor a transpose override.
  class Bare final : public kadj::MatVecOperator {
  public:
    Bare()
        : MatVecOperator(2, Vector(0), /*symmetric=*/false,
                         /*has_diag=*/false) {}

  private:
    void apply_impl(const Vector&, const Vector& v,
                    Vector& out) const override {
      out = v;
    }
    void vjp_params_impl(const Vector&, const Vector&, const Vector&,
                         Vector&) const override {}
  } bare;
  CHECK_THROWS_AS(bare.diag(Vector()), kadj::ContractError);
  CHECK_THROWS_AS(bare.apply_transpose(Vector(), random_vector(2, 1)),
                  kadj::ContractError);
}
