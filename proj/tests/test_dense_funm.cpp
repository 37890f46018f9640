// Dense small-matrix function kernels: spectral f(T)e₁ with its
// divided-difference pullback, and the Padé matrix exponential with its
// augmented-block pullback.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kadj/dense_funm.hpp"
#include "support/dense_reference.hpp"

using kadj::Index;
using kadj::Matrix;
using kadj::ScalarFunction;
using kadj::Vector;
using testsupport::central_fd;
using testsupport::random_matrix;
using testsupport::random_vector;
using testsupport::ref_expm;
using testsupport::ref_funm_sym;

namespace {

Matrix tridiag(const Vector& a, const Vector& b) {
  const Index k = a.size();
  Matrix T = Matrix::Zero(k, k);
  T.diagonal() = a;
  if (k > 1) {
    T.diagonal(1) = b;
    T.diagonal(-1) = b;
  }
  return T;
}

// Deterministic tridiagonal bands with a comfortably positive spectrum.
void positive_bands(Index k, std::uint64_t seed, Vector& a, Vector& b) {
  a = random_vector(k, seed).array() + 6.0;
  b = random_vector(k - 1, seed + 1) * 0.5;
}

}  // namespace

TEST_CASE("f(T)e1 on frozen one- and two-step tridiagonals") {
  SUBCASE("1x1: the value is just f(a)") {
    Vector a(1), b(0);
    a << 2.0;
    const auto r = kadj::funm_sym_e1(a, b, ScalarFunction::log());
    CHECK(r.y[0] == doctest::Approx(0.69314718055994531).epsilon(1e-15));
  }

  SUBCASE("2x2 exchange matrix: exp(T)e1 = (cosh 1, sinh 1)") {
    Vector a(2), b(1);
    a << 0.0, 0.0;
    b << 1.0;
    const auto r = kadj::funm_sym_e1(a, b, ScalarFunction::exp_t(1.0));
    CHECK(r.y[0] == doctest::Approx(1.5430806348152437).epsilon(1e-14));
    CHECK(r.y[1] == doctest::Approx(1.1752011936438014).epsilon(1e-14));
  }
}

TEST_CASE("f(T)e1 matches the dense eigendecomposition oracle") {
  Vector a, b;
  positive_bands(8, 11, a, b);
  const Matrix T = tridiag(a, b);

  const ScalarFunction fns[] = {
      ScalarFunction::exp_t(0.7), ScalarFunction::log(),
      ScalarFunction::sqrt(), ScalarFunction::inv_sqrt(),
      ScalarFunction::inverse(), ScalarFunction::identity()};
  for (const auto& fn : fns) {
    CAPTURE(fn.name);
    const auto r = kadj::funm_sym_e1(a, b, fn);
    const Vector want = ref_funm_sym(T, fn.f).col(0);
    CHECK((r.y - want).norm() <= 1e-12 * (1.0 + want.norm()));
  }
}

TEST_CASE("scalar-function domains are enforced on the eigenvalues") {
  Vector a(1), b(0);
  a << -1.0;
  CHECK_THROWS_AS(kadj::funm_sym_e1(a, b, ScalarFunction::log()),
                  kadj::DomainError);
  CHECK_THROWS_AS(kadj::funm_sym_e1(a, b, ScalarFunction::sqrt()),
                  kadj::DomainError);
  CHECK_THROWS_AS(kadj::funm_sym_e1(a, b, ScalarFunction::inv_sqrt()),
                  kadj::DomainError);
  a << 0.0;
  CHECK_THROWS_AS(kadj::funm_sym_e1(a, b, ScalarFunction::inverse()),
                  kadj::DomainError);
  CHECK_NOTHROW(kadj::funm_sym_e1(a, b, ScalarFunction::exp_t(1.0)));
}

TEST_CASE("band pullback of f(T)e1 matches finite differences") {
  const Index k = 6;
  Vector a, b;
  positive_bands(k, 21, a, b);
  const ScalarFunction fn = ScalarFunction::log();
  const Vector ybar = random_vector(k, 23);

  const auto fwd = kadj::funm_sym_e1(a, b, fn);
  const auto pb = kadj::funm_sym_e1_pullback(fwd, fn, ybar);
  REQUIRE(pb.abar.size() == k);
  REQUIRE(pb.bbar.size() == k - 1);

  const double h = 1e-6;
  for (Index i = 0; i < k; ++i) {
    auto g = [&](const Vector& ai) {
      return ybar.dot(kadj::funm_sym_e1(ai, b, fn).y);
    };
    Vector u = Vector::Zero(k);
    u[i] = 1.0;
    const double fd = central_fd(g, a, u, h);
    CHECK(testsupport::rel_err(pb.abar[i], fd) <= 1e-6);
  }
  for (Index i = 0; i < k - 1; ++i) {
    auto g = [&](const Vector& bi) {
      return ybar.dot(kadj::funm_sym_e1(a, bi, fn).y);
    };
    Vector u = Vector::Zero(k - 1);
    u[i] = 1.0;
    const double fd = central_fd(g, b, u, h);
    CHECK(testsupport::rel_err(pb.bbar[i], fd) <= 1e-6);
  }
}

TEST_CASE("band pullback handles repeated eigenvalues (confluent kernel)") {
  // a = (3, 3), b = (0): the spectrum is {3, 3} and every divided
  // difference collapses to f'(3).
  Vector a(2), b(1);
  a << 3.0, 3.0;
  b << 0.0;
  const ScalarFunction fn = ScalarFunction::sqrt();
  Vector ybar(2);
  ybar << 1.0, -2.0;
  const auto fwd = kadj::funm_sym_e1(a, b, fn);
  const auto pb = kadj::funm_sym_e1_pullback(fwd, fn, ybar);

  const double h = 1e-6;
  for (Index i = 0; i < 2; ++i) {
    auto g = [&](const Vector& ai) {
      return ybar.dot(kadj::funm_sym_e1(ai, b, fn).y);
    };
    Vector u = Vector::Zero(2);
    u[i] = 1.0;
    CHECK(testsupport::rel_err(pb.abar[i], central_fd(g, a, u, h)) <= 1e-6);
  }
  auto g = [&](const Vector& bi) {
    return ybar.dot(kadj::funm_sym_e1(a, bi, fn).y);
  };
  Vector u(1);
  u << 1.0;
  CHECK(testsupport::rel_err(pb.bbar[0], central_fd(g, b, u, h)) <= 1e-6);
}

TEST_CASE("matrix exponential against the Taylor-series oracle") {
  SUBCASE("moderate norm") {
    const Matrix M = random_matrix(7, 31);
    const Matrix E = kadj::expm(M);
    CHECK((E - ref_expm(M)).norm() <= 1e-11 * ref_expm(M).norm());
  }
  SUBCASE("large norm exercises scaling and squaring") {
    const Matrix M = 25.0 * random_matrix(5, 32);
    const Matrix E = kadj::expm(M);
    CHECK((E - ref_expm(M)).norm() <= 1e-9 * ref_expm(M).norm());
  }
  SUBCASE("exp(0) = I up to one ulp of Pade solve noise") {
    const Matrix E = kadj::expm(Matrix::Zero(4, 4));
    CHECK((E - Matrix::Identity(4, 4)).norm() <= 1e-15);
  }
}

TEST_CASE("exp(tH)e1 values and pullback") {
  const Index k = 5;
  const Matrix H = random_matrix(k, 41);

  SUBCASE("t = 0 returns e1 up to one ulp") {
    const Vector y = kadj::expm_e1(H, 0.0);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(y.tail(k - 1).norm() <= 1e-15);
  }

  SUBCASE("values match the oracle for several t") {
    for (const double t : {0.5, -1.3, 2.0}) {
      CAPTURE(t);
      const Vector want = ref_expm(Matrix(t * H)).col(0);
      CHECK((kadj::expm_e1(H, t) - want).norm() <= 1e-11 * (1.0 + want.norm()));
    }
  }

  SUBCASE("entrywise H-gradient matches finite differences") {
    const double t = 0.7;
    const Vector ybar = random_vector(k, 43);
    const Matrix Hbar = kadj::expm_e1_pullback(H, t, ybar);
    REQUIRE(Hbar.rows() == k);
    REQUIRE(Hbar.cols() == k);
    const double h = 1e-6;
    for (Index i = 0; i < k; ++i) {
      for (Index j = 0; j < k; ++j) {
        Matrix Hp = H, Hm = H;
        Hp(i, j) += h;
        Hm(i, j) -= h;
        const double fd = (ybar.dot(kadj::expm_e1(Hp, t)) -
                           ybar.dot(kadj::expm_e1(Hm, t))) /
                          (2.0 * h);
        CHECK(testsupport::rel_err(Hbar(i, j), fd) <= 1e-6);
      }
    }
  }
}

TEST_CASE("full symmetric matrix function matches the oracle") {
  const Matrix S = testsupport::random_spd(9, 51);
  const Matrix L = kadj::funm_sym_full(S, ScalarFunction::log());
  const Matrix want = ref_funm_sym(S, [](double x) { return std::log(x); });
  CHECK((L - want).norm() <= 1e-12 * (1.0 + want.norm()));
}
