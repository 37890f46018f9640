// Exercises the C boundary of the shared library: status codes, thread-local
// error messages, opaque-handle lifecycles, and row-major buffer layouts.
// Links against the shared library only; references are computed inline.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "kadj/kadj.h"

namespace {

// y = M v for a row-major n×n buffer.
std::vector<double> matvec(const std::vector<double>& M,
                           const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i] += M[i * n + j] * v[j];
  return y;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

const std::vector<double> kSpd3 = {4, 1, 0, 1, 3, 1, 0, 1, 2};
const std::vector<double> kNonsym3 = {1, 2, 0, 0, 1, 2, 2, 0, 1};

}  // namespace

TEST_CASE("version and error-message plumbing") {
  REQUIRE(kadj_version() != nullptr);
  CHECK(std::strlen(kadj_version()) > 0);

  kadj_operator* op = nullptr;
  CHECK(kadj_dense_create(2, nullptr, &op) == KADJ_ERR_INVALID_ARGUMENT);
  CHECK(op == nullptr);
  CHECK(std::strlen(kadj_last_error_message()) > 0);

  const double eye[4] = {1, 0, 0, 1};
  CHECK(kadj_dense_create(2, eye, nullptr) == KADJ_ERR_INVALID_ARGUMENT);
  CHECK(kadj_hilbert_create(0, &op) == KADJ_ERR_DIMENSION);
  CHECK(kadj_csr_from_file("/nonexistent/never.mtx", &op) == KADJ_ERR_IO);

  kadj_operator_destroy(nullptr);  // destroys accept NULL
  kadj_lanczos_destroy(nullptr);
  kadj_arnoldi_destroy(nullptr);
  kadj_funm_destroy(nullptr);
  kadj_pchol_destroy(nullptr);
  kadj_precond_destroy(nullptr);
}

TEST_CASE("dense operator round-trip") {
  const std::vector<double> M = {1, 2, 3, 4};  // row-major, not symmetric
  kadj_operator* op = nullptr;
  REQUIRE(kadj_dense_create(2, M.data(), &op) == KADJ_OK);
  CHECK(kadj_operator_dim(op) == 2);
  CHECK(kadj_operator_param_count(op) == 4);
  CHECK(kadj_operator_is_symmetric(op) == 0);
  CHECK(kadj_operator_has_diag(op) == 1);

  std::vector<double> theta(4, 0.0);
  REQUIRE(kadj_operator_default_params(op, theta.data()) == KADJ_OK);
  CHECK(theta == M);

  const std::vector<double> v = {1, 1};
  std::vector<double> out(2);
  REQUIRE(kadj_operator_apply(op, nullptr, v.data(), out.data()) == KADJ_OK);
  CHECK(out[0] == 3.0);
  CHECK(out[1] == 7.0);
  REQUIRE(kadj_operator_apply_transpose(op, theta.data(), v.data(),
                                        out.data()) == KADJ_OK);
  CHECK(out[0] == 4.0);
  CHECK(out[1] == 6.0);

  // d(w̄ᵀ A v)/dA_ij = w̄_i v_j, row-major.
  const double vv[2] = {1, 0};
  const double wbar[2] = {0, 1};
  std::vector<double> g(4);
  REQUIRE(kadj_operator_vjp_params(op, nullptr, vv, wbar, g.data()) == KADJ_OK);
  CHECK(g == std::vector<double>{0, 0, 1, 0});

  std::vector<double> dg(2);
  REQUIRE(kadj_operator_diag(op, nullptr, dg.data()) == KADJ_OK);
  CHECK(dg == std::vector<double>{1, 4});

  CHECK(kadj_operator_apply_count(op) == 1);
  CHECK(kadj_operator_transpose_count(op) == 1);
  CHECK(kadj_operator_matvec_count(op) == 2);
  CHECK(kadj_operator_vjp_count(op) == 1);
  kadj_operator_destroy(op);
}

TEST_CASE("built-in operator factories") {
  kadj_operator* hil = nullptr;
  REQUIRE(kadj_hilbert_create(3, &hil) == KADJ_OK);
  CHECK(kadj_operator_is_symmetric(hil) == 1);
  CHECK(kadj_operator_param_count(hil) == 0);
  std::vector<double> d(3);
  REQUIRE(kadj_operator_diag(hil, nullptr, d.data()) == KADJ_OK);
  CHECK(d[0] == 1.0 / 3.0);
  CHECK(d[1] == 1.0 / 5.0);
  CHECK(d[2] == 1.0 / 7.0);
  const double e1[3] = {1, 0, 0};
  std::vector<double> col(3);
  REQUIRE(kadj_operator_apply(hil, nullptr, e1, col.data()) == KADJ_OK);
  CHECK(col[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(col[1] == doctest::Approx(1.0 / 4.0).epsilon(1e-15));
  CHECK(col[2] == doctest::Approx(1.0 / 5.0).epsilon(1e-15));
  kadj_operator_destroy(hil);

  const std::vector<double> omega(4, 0.0);
  kadj_operator* wave = nullptr;
  REQUIRE(kadj_wave_create(2, omega.data(), 1.0, &wave) == KADJ_OK);
  CHECK(kadj_operator_dim(wave) == 8);  // two stacked n² fields
  CHECK(kadj_operator_param_count(wave) == 4);
  CHECK(kadj_operator_is_symmetric(wave) == 0);
  kadj_operator_destroy(wave);

  const std::vector<double> X = {0.0, 0.0, 1.0, 0.0, 0.0, 1.0};  // 3 pts in 2D
  kadj_operator* rbf = nullptr;
  REQUIRE(kadj_rbf_create(3, 2, X.data(), 2, nullptr, &rbf) == KADJ_OK);
  CHECK(kadj_operator_dim(rbf) == 3);
  CHECK(kadj_operator_param_count(rbf) == 3);
  CHECK(kadj_operator_is_symmetric(rbf) == 1);
  std::vector<double> rd(3);
  REQUIRE(kadj_operator_diag(rbf, nullptr, rd.data()) == KADJ_OK);
  for (double x : rd) CHECK(x == 2.0);  // s² + σ² = e⁰ + e⁰
  kadj_operator_destroy(rbf);
}

TEST_CASE("Lanczos handle: identities, adjoint, finite differences") {
  kadj_operator* op = nullptr;
  REQUIRE(kadj_dense_create(3, kSpd3.data(), &op) == KADJ_OK);
  const std::vector<double> v = {1, 0, 0};

  kadj_lanczos* h = nullptr;
  REQUIRE(kadj_lanczos_run(op, nullptr, v.data(), 3, 1, &h) == KADJ_OK);
  CHECK(kadj_lanczos_steps(h) == 3);
  CHECK(kadj_lanczos_breakdown_step(h) == 0);

  std::vector<double> X(3 * 4), a(3), b(3);
  REQUIRE(kadj_lanczos_get(h, X.data(), a.data(), b.data()) == KADJ_OK);

  // Columns of X (dim×(steps+1), row-major) are orthonormal; the last is 0.
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q <= p; ++q) {
      double dot = 0.0;
      for (int i = 0; i < 3; ++i) dot += X[i * 4 + p] * X[i * 4 + q];
      CHECK(dot == doctest::Approx(p == q ? 1.0 : 0.0).epsilon(1e-12));
    }
  // Three-term recurrence A x_k = b_{k-1} x_{k-1} + a_k x_k + b_k x_{k+1}.
  for (int k = 0; k < 3; ++k) {
    std::vector<double> xk(3);
    for (int i = 0; i < 3; ++i) xk[i] = X[i * 4 + k];
    const std::vector<double> Ax = matvec(kSpd3, xk);
    for (int i = 0; i < 3; ++i) {
      double rhs = a[k] * X[i * 4 + k] + b[k] * X[i * 4 + k + 1];
      if (k > 0) rhs += b[k - 1] * X[i * 4 + k - 1];
      CHECK(Ax[i] == doctest::Approx(rhs).epsilon(1e-12));
    }
  }

  // Gradient of a_0 against central differences taken through the same API.
  const std::vector<double> abar = {1, 0, 0};
  std::vector<double> gt(9), gv(3);
  REQUIRE(kadj_lanczos_adjoint(op, h, nullptr, abar.data(), nullptr, gt.data(),
                               gv.data()) == KADJ_OK);
  double residual = -1.0;
  std::vector<double> gt2(9), gv2(3);
  REQUIRE(kadj_lanczos_adjoint_checked(op, h, nullptr, abar.data(), nullptr,
                                       gt2.data(), gv2.data(),
                                       &residual) == KADJ_OK);
  CHECK(residual >= 0.0);
  CHECK(residual <= 1e-8);
  CHECK(max_abs_diff(gt, gt2) == 0.0);

  auto a0_at = [&](const std::vector<double>& th, const std::vector<double>& vv) {
    kadj_lanczos* hh = nullptr;
    REQUIRE(kadj_lanczos_run(op, th.data(), vv.data(), 3, 1, &hh) == KADJ_OK);
    double aa[3];
    REQUIRE(kadj_lanczos_get(hh, nullptr, aa, nullptr) == KADJ_OK);
    kadj_lanczos_destroy(hh);
    return aa[0];
  };
  const double hstep = 1e-6;
  for (int i = 0; i < 9; ++i) {
    std::vector<double> tp = kSpd3, tm = kSpd3;
    tp[i] += hstep;
    tm[i] -= hstep;
    const double fd = (a0_at(tp, v) - a0_at(tm, v)) / (2 * hstep);
    CHECK(gt[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }
  for (int i = 0; i < 3; ++i) {
    std::vector<double> vp = v, vm = v;
    vp[i] += hstep;
    vm[i] -= hstep;
    const double fd = (a0_at(kSpd3, vp) - a0_at(kSpd3, vm)) / (2 * hstep);
    CHECK(gv[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }

  kadj_lanczos_destroy(h);

  // A non-symmetric operator is rejected up front.
  kadj_operator* ns = nullptr;
  REQUIRE(kadj_dense_create(3, kNonsym3.data(), &ns) == KADJ_OK);
  kadj_lanczos* bad = nullptr;
  CHECK(kadj_lanczos_run(ns, nullptr, v.data(), 2, 1, &bad) ==
        KADJ_ERR_CONTRACT);
  CHECK(bad == nullptr);
  kadj_operator_destroy(ns);
  kadj_operator_destroy(op);
}

TEST_CASE("Arnoldi handle: identities, adjoint, finite differences") {
  kadj_operator* op = nullptr;
  REQUIRE(kadj_dense_create(3, kNonsym3.data(), &op) == KADJ_OK);
  // Not (1,1,1): every row of kNonsym3 sums to 3, which would make the
  // start vector an exact eigenvector and force a step-1 breakdown.
  const std::vector<double> v = {1, 2, 3};
  const kadj_index K = 2;

  kadj_arnoldi* h = nullptr;
  REQUIRE(kadj_arnoldi_run(op, nullptr, v.data(), K, 1, &h) == KADJ_OK);
  CHECK(kadj_arnoldi_steps(h) == K);
  CHECK(kadj_arnoldi_breakdown_step(h) == 0);

  std::vector<double> Q(3 * K), H(K * K), r(3);
  double c = 0.0;
  REQUIRE(kadj_arnoldi_get(h, Q.data(), H.data(), r.data(), &c) == KADJ_OK);
  CHECK(c == doctest::Approx(1.0 / std::sqrt(14.0)).epsilon(1e-15));

  // A Q = Q H + r e_Kᵀ, column by column.
  for (kadj_index k = 0; k < K; ++k) {
    std::vector<double> qk(3);
    for (int i = 0; i < 3; ++i) qk[i] = Q[i * K + k];
    const std::vector<double> Aq = matvec(kNonsym3, qk);
    for (int i = 0; i < 3; ++i) {
      double rhs = 0.0;
      for (kadj_index m = 0; m < K; ++m) rhs += Q[i * K + m] * H[m * K + k];
      if (k == K - 1) rhs += r[i];
      CHECK(Aq[i] == doctest::Approx(rhs).epsilon(1e-12));
    }
  }

  // Gradient of H(0,0) against finite differences through the same API.
  std::vector<double> Hbar(K * K, 0.0);
  Hbar[0] = 1.0;
  std::vector<double> gt(9), gv(3);
  double residual = -1.0;
  REQUIRE(kadj_arnoldi_adjoint_checked(op, h, nullptr, Hbar.data(), nullptr,
                                       0.0, 1, gt.data(), gv.data(),
                                       &residual) == KADJ_OK);
  CHECK(residual <= 1e-8);

  auto h00_at = [&](const std::vector<double>& th,
                    const std::vector<double>& vv) {
    kadj_arnoldi* hh = nullptr;
    REQUIRE(kadj_arnoldi_run(op, th.data(), vv.data(), K, 1, &hh) == KADJ_OK);
    std::vector<double> HH(K * K);
    REQUIRE(kadj_arnoldi_get(hh, nullptr, HH.data(), nullptr, nullptr) ==
            KADJ_OK);
    kadj_arnoldi_destroy(hh);
    return HH[0];
  };
  const double hstep = 1e-6;
  for (int i = 0; i < 9; ++i) {
    std::vector<double> tp = kNonsym3, tm = kNonsym3;
    tp[i] += hstep;
    tm[i] -= hstep;
    const double fd = (h00_at(tp, v) - h00_at(tm, v)) / (2 * hstep);
    CHECK(gt[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }
  for (int i = 0; i < 3; ++i) {
    std::vector<double> vp = v, vm = v;
    vp[i] += hstep;
    vm[i] -= hstep;
    const double fd = (h00_at(kNonsym3, vp) - h00_at(kNonsym3, vm)) / (2 * hstep);
    CHECK(gv[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }

  kadj_arnoldi_destroy(h);
  kadj_operator_destroy(op);
}

TEST_CASE("matrix-function handles") {
  SUBCASE("identity function reproduces one matvec") {
    kadj_operator* op = nullptr;
    REQUIRE(kadj_dense_create(3, kSpd3.data(), &op) == KADJ_OK);
    const std::vector<double> v = {0.3, -1.0, 0.7};
    kadj_funm* h = nullptr;
    REQUIRE(kadj_funm_lanczos(op, nullptr, v.data(), 3, KADJ_FN_IDENTITY, 0.0,
                              1, &h) == KADJ_OK);
    CHECK(kadj_funm_value_len(h) == 3);
    CHECK(kadj_funm_steps(h) == 3);
    CHECK(kadj_funm_breakdown_step(h) == 0);
    std::vector<double> y(3);
    REQUIRE(kadj_funm_value(h, y.data()) == KADJ_OK);
    CHECK(max_abs_diff(y, matvec(kSpd3, v)) <= 1e-10);
    kadj_funm_destroy(h);
    kadj_operator_destroy(op);
  }

  SUBCASE("breakdown truncation is visible through the accessors") {
    const std::vector<double> eye = {1, 0, 0, 1};
    kadj_operator* op = nullptr;
    REQUIRE(kadj_dense_create(2, eye.data(), &op) == KADJ_OK);
    const std::vector<double> v = {3, 4};
    kadj_funm* h = nullptr;
    REQUIRE(kadj_funm_lanczos(op, nullptr, v.data(), 2, KADJ_FN_EXP, 0.5, 1,
                              &h) == KADJ_OK);
    CHECK(kadj_funm_steps(h) == 1);          // invariant subspace after 1 step
    CHECK(kadj_funm_breakdown_step(h) == 1);
    std::vector<double> y(2);
    REQUIRE(kadj_funm_value(h, y.data()) == KADJ_OK);
    CHECK(y[0] == doctest::Approx(3 * std::exp(0.5)).epsilon(1e-13));
    CHECK(y[1] == doctest::Approx(4 * std::exp(0.5)).epsilon(1e-13));
    kadj_funm_destroy(h);
    kadj_operator_destroy(op);
  }

  SUBCASE("Arnoldi exponential at t = 0 is the input") {
    kadj_operator* op = nullptr;
    REQUIRE(kadj_dense_create(3, kNonsym3.data(), &op) == KADJ_OK);
    const std::vector<double> v = {1, -2, 0.5};
    kadj_funm* h = nullptr;
    REQUIRE(kadj_funm_arnoldi_exp(op, nullptr, v.data(), 3, 0.0, 1, &h) ==
            KADJ_OK);
    std::vector<double> y(3);
    REQUIRE(kadj_funm_value(h, y.data()) == KADJ_OK);
    CHECK(max_abs_diff(y, v) <= 1e-13);
    kadj_funm_destroy(h);
    kadj_operator_destroy(op);
  }

  SUBCASE("quadratic form value and pullback match finite differences") {
    const std::vector<double> A = {2.0, 0.3, 0.3, 1.0};
    kadj_operator* op = nullptr;
    REQUIRE(kadj_dense_create(2, A.data(), &op) == KADJ_OK);
    const std::vector<double> v = {1.0, 2.0};

    auto rho_at = [&](const std::vector<double>& th,
                      const std::vector<double>& vv) {
      kadj_funm* hh = nullptr;
      REQUIRE(kadj_quadratic_form(op, th.data(), vv.data(), 2, KADJ_FN_LOG, 0.0,
                                  1, &hh) == KADJ_OK);
      REQUIRE(kadj_funm_value_len(hh) == 1);
      double rho = 0.0;
      REQUIRE(kadj_funm_value(hh, &rho) == KADJ_OK);
      kadj_funm_destroy(hh);
      return rho;
    };

    kadj_funm* h = nullptr;
    REQUIRE(kadj_quadratic_form(op, nullptr, v.data(), 2, KADJ_FN_LOG, 0.0, 1,
                                &h) == KADJ_OK);
    const double ybar = 1.0;
    std::vector<double> gt(4), gv(2);
    REQUIRE(kadj_funm_pullback(op, h, &ybar, gt.data(), gv.data()) == KADJ_OK);
    kadj_funm_destroy(h);

    const double hstep = 1e-6;
    // Diagonal parameters directly; off-diagonals as the symmetric pair.
    for (int i : {0, 3}) {
      std::vector<double> tp = A, tm = A;
      tp[i] += hstep;
      tm[i] -= hstep;
      const double fd = (rho_at(tp, v) - rho_at(tm, v)) / (2 * hstep);
      CHECK(gt[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
    {
      std::vector<double> tp = A, tm = A;
      tp[1] += hstep;
      tp[2] += hstep;
      tm[1] -= hstep;
      tm[2] -= hstep;
      const double fd = (rho_at(tp, v) - rho_at(tm, v)) / (2 * hstep);
      CHECK(gt[1] + gt[2] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
    for (int i = 0; i < 2; ++i) {
      std::vector<double> vp = v, vm = v;
      vp[i] += hstep;
      vm[i] -= hstep;
      const double fd = (rho_at(A, vp) - rho_at(A, vm)) / (2 * hstep);
      CHECK(gv[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
    kadj_operator_destroy(op);
  }

  SUBCASE("domain violations surface as the domain status") {
    const std::vector<double> D = {-1, 0, 0, 2};
    kadj_operator* op = nullptr;
    REQUIRE(kadj_dense_create(2, D.data(), &op) == KADJ_OK);
    const std::vector<double> v = {1, 1};
    kadj_funm* h = nullptr;
    CHECK(kadj_funm_lanczos(op, nullptr, v.data(), 2, KADJ_FN_LOG, 0.0, 1,
                            &h) == KADJ_ERR_DOMAIN);
    CHECK(h == nullptr);
    CHECK(std::strlen(kadj_last_error_message()) > 0);
    kadj_operator_destroy(op);
  }
}

TEST_CASE("stochastic estimators through the C boundary") {
  SUBCASE("probe vectors are deterministic and kind-distinct") {
    std::vector<double> z1(16), z2(16), z3(16), g1(16);
    REQUIRE(kadj_probe_vector(42, 7, 16, KADJ_PROBE_RADEMACHER, z1.data()) ==
            KADJ_OK);
    REQUIRE(kadj_probe_vector(42, 7, 16, KADJ_PROBE_RADEMACHER, z2.data()) ==
            KADJ_OK);
    REQUIRE(kadj_probe_vector(42, 8, 16, KADJ_PROBE_RADEMACHER, z3.data()) ==
            KADJ_OK);
    REQUIRE(kadj_probe_vector(42, 7, 16, KADJ_PROBE_GAUSSIAN, g1.data()) ==
            KADJ_OK);
    CHECK(z1 == z2);
    CHECK(z1 != z3);
    for (double x : z1) CHECK(std::abs(x) == 1.0);
    bool any_nonunit = false;
    for (double x : g1) any_nonunit = any_nonunit || std::abs(x) != 1.0;
    CHECK(any_nonunit);
  }

  SUBCASE("trace of a diagonal matrix is exact per probe") {
    const std::vector<double> D = {1, 0, 0, 0, 2, 0, 0, 0, 3};
    kadj_operator* op = nullptr;
    REQUIRE(kadj_dense_create(3, D.data(), &op) == KADJ_OK);
    double est = 0.0, se = -1.0;
    REQUIRE(kadj_hutchinson_trace(op, nullptr, 3, 4, 11, KADJ_FN_IDENTITY, 0.0,
                                  KADJ_PROBE_RADEMACHER, &est, &se) == KADJ_OK);
    CHECK(est == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(se <= 1e-12);
    kadj_operator_destroy(op);
  }

  SUBCASE("logdet of the identity is zero up to normalization rounding") {
    const std::vector<double> eye = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    kadj_operator* op = nullptr;
    REQUIRE(kadj_dense_create(3, eye.data(), &op) == KADJ_OK);
    double est = 1.0, se = 1.0;
    REQUIRE(kadj_logdet(op, nullptr, 3, 5, 3, &est, &se) == KADJ_OK);
    CHECK(std::abs(est) <= 1e-13);
    CHECK(se <= 1e-13);
    kadj_operator_destroy(op);
  }

  SUBCASE("logdet pullback differentiates the seeded estimate") {
    const std::vector<double> A = {2.0, 0.3, 0.3, 1.0};
    kadj_operator* op = nullptr;
    REQUIRE(kadj_dense_create(2, A.data(), &op) == KADJ_OK);
    const kadj_index K = 2, L = 3;
    const uint64_t seed = 9;
    std::vector<double> g(4);
    REQUIRE(kadj_logdet_pullback(op, nullptr, K, L, seed, g.data()) == KADJ_OK);

    auto est_at = [&](const std::vector<double>& th) {
      double est = 0.0;
      REQUIRE(kadj_logdet(op, th.data(), K, L, seed, &est, nullptr) == KADJ_OK);
      return est;
    };
    const double hstep = 1e-6;
    for (int i : {0, 3}) {
      std::vector<double> tp = A, tm = A;
      tp[i] += hstep;
      tm[i] -= hstep;
      const double fd = (est_at(tp) - est_at(tm)) / (2 * hstep);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
    {
      std::vector<double> tp = A, tm = A;
      tp[1] += hstep;
      tp[2] += hstep;
      tm[1] -= hstep;
      tm[2] -= hstep;
      const double fd = (est_at(tp) - est_at(tm)) / (2 * hstep);
      CHECK(g[1] + g[2] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
    kadj_operator_destroy(op);
  }

  SUBCASE("diagonal estimator is exact on diagonal matrices") {
    const std::vector<double> D = {1, 0, 0, 0, 0, 2, 0, 0,
                                   0, 0, 3, 0, 0, 0, 0, 4};
    kadj_operator* op = nullptr;
    REQUIRE(kadj_dense_create(4, D.data(), &op) == KADJ_OK);
    std::vector<double> est(4);
    REQUIRE(kadj_diagonal_estimate(op, nullptr, 2, 5, est.data()) == KADJ_OK);
    CHECK(est == std::vector<double>{1, 2, 3, 4});
    kadj_operator_destroy(op);
  }

  SUBCASE("inverse square root sampling on the identity returns the probe") {
    const std::vector<double> eye = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    kadj_operator* op = nullptr;
    REQUIRE(kadj_dense_create(3, eye.data(), &op) == KADJ_OK);
    std::vector<double> y(3), probe(3), want(3);
    REQUIRE(kadj_sample_inv_sqrt(op, nullptr, 3, 17, 2, y.data(),
                                 probe.data()) == KADJ_OK);
    REQUIRE(kadj_probe_vector(17, 2, 3, KADJ_PROBE_GAUSSIAN, want.data()) ==
            KADJ_OK);
    CHECK(probe == want);
    CHECK(max_abs_diff(y, probe) <= 1e-13);
    kadj_operator_destroy(op);
  }
}

TEST_CASE("solver handles through the C boundary") {
  const std::vector<double> D = {4, 0, 0, 0, 0, 3, 0, 0,
                                 0, 0, 2, 0, 0, 0, 0, 1};
  kadj_operator* op = nullptr;
  REQUIRE(kadj_dense_create(4, D.data(), &op) == KADJ_OK);

  kadj_pchol* pc = nullptr;
  REQUIRE(kadj_pivoted_cholesky(op, nullptr, 2, 0.0, &pc) == KADJ_OK);
  REQUIRE(kadj_pchol_rank(pc) == 2);
  std::vector<double> L(4 * 2);
  std::vector<kadj_index> piv(2);
  REQUIRE(kadj_pchol_get(pc, L.data(), piv.data()) == KADJ_OK);
  CHECK(piv == std::vector<kadj_index>{0, 1});
  CHECK(L[0 * 2 + 0] == 2.0);  // √4 in column 0, row 0
  CHECK(L[1 * 2 + 1] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));

  kadj_precond* pre = nullptr;
  REQUIRE(kadj_woodbury_create(pc, 1.0, &pre) == KADJ_OK);
  // L Lᵀ + I = diag(5, 4, 1, 1).
  const std::vector<double> ones = {1, 1, 1, 1};
  std::vector<double> pb(4);
  REQUIRE(kadj_precond_apply(pre, ones.data(), pb.data()) == KADJ_OK);
  CHECK(pb[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(pb[1] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(pb[2] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pb[3] == doctest::Approx(1.0).epsilon(1e-14));

  const std::vector<double> b = {4, 3, 2, 1};
  std::vector<double> x(4);
  kadj_index iters = -1;
  double rnorm = -1.0;
  int converged = 0;
  REQUIRE(kadj_pcg(op, nullptr, b.data(), 1e-10, 0, nullptr, x.data(), &iters,
                   &rnorm, &converged) == KADJ_OK);
  CHECK(converged == 1);
  CHECK(iters <= 4);
  CHECK(rnorm <= 1e-10);
  CHECK(max_abs_diff(x, ones) <= 1e-10);

  // Preconditioned run accepts the handle and still solves the system.
  REQUIRE(kadj_pcg(op, nullptr, b.data(), 1e-10, 0, pre, x.data(), &iters,
                   &rnorm, &converged) == KADJ_OK);
  CHECK(converged == 1);
  CHECK(max_abs_diff(x, ones) <= 1e-10);

  // Pullback: for x̄ = e, grad_b = A⁻¹e and grad_A(i,j) = −λ_i x_j.
  std::vector<double> gt(16), gb(4);
  REQUIRE(kadj_pcg_pullback(op, nullptr, x.data(), ones.data(), 1e-12, 0,
                            nullptr, gt.data(), gb.data()) == KADJ_OK);
  const std::vector<double> lambda = {0.25, 1.0 / 3.0, 0.5, 1.0};
  CHECK(max_abs_diff(gb, lambda) <= 1e-9);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(gt[i * 4 + j] ==
            doctest::Approx(-lambda[i] * 1.0).epsilon(1e-9));

  kadj_precond_destroy(pre);
  kadj_pchol_destroy(pc);
  kadj_operator_destroy(op);
}
