#include "kadj/stochastic.hpp"

#include <cmath>

namespace kadj {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr double kTwoPi = 6.28318530717958647692528676655900577;

// splitmix64: the standard finalizer-style generator; one 64-bit output
// per state increment.
struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

// Uniform in (0, 1): 53 mantissa bits, offset half a ulp so 0 is excluded
// (Box–Muller takes a log of it).
double to_unit(std::uint64_t z) {
  return (static_cast<double>(z >> 11) + 0.5) * 0x1p-53;
}

}  // namespace

Vector probe_vector(std::uint64_t seed, std::uint64_t index, Index dim,
                    ProbeKind kind) {
  if (dim < 1) throw DimensionError("probe dimension must be positive");
  SplitMix64 rng{seed + (index + 1) * kGolden};
  Vector z(dim);
  if (kind == ProbeKind::Rademacher) {
    for (Index i = 0; i < dim; ++i)
      z[i] = (rng.next() >> 63) ? 1.0 : -1.0;
  } else {
    for (Index i = 0; i < dim; i += 2) {
      const double u1 = to_unit(rng.next());
      const double u2 = to_unit(rng.next());
      const double m = std::sqrt(-2.0 * std::log(u1));
      z[i] = m * std::cos(kTwoPi * u2);
      if (i + 1 < dim) z[i + 1] = m * std::sin(kTwoPi * u2);
    }
  }
  return z;
}

TraceEstimate hutchinson_trace(
    const std::function<double(const Vector&)>& form, Index dim, Index L,
    std::uint64_t seed, ProbeKind kind) {
  if (L < 1) throw DimensionError("probe count must be positive");
  double sum = 0.0, sumsq = 0.0;
  for (Index i = 0; i < L; ++i) {
    const Vector z =
        probe_vector(seed, static_cast<std::uint64_t>(i), dim, kind);
    const double term = form(z);
    if (!std::isfinite(term))
      throw NumericalError("non-finite quadratic form at probe index " +
                           std::to_string(i));
    sum += term;
    sumsq += term * term;
  }
  TraceEstimate e;
  e.probes = L;
  e.estimate = sum / static_cast<double>(L);
  e.std_error_defined = (L > 1);
  if (L > 1) {
    const double var =
        std::max(0.0, (sumsq - sum * sum / static_cast<double>(L)) /
                          static_cast<double>(L - 1));
    e.std_error = std::sqrt(var / static_cast<double>(L));
  }
  return e;
}

TraceEstimate hutchinson_trace_funm(const MatVecOperator& op,
                                    const Vector& theta, Index K, Index L,
                                    std::uint64_t seed,
                                    const ScalarFunction& fn, ProbeKind kind,
                                    const LanczosOptions& opts) {
  return hutchinson_trace(
      [&](const Vector& z) {
        return quadratic_form_funm(op, theta, z, K, fn, opts).value;
      },
      op.dim(), L, seed, kind);
}

LogDetEstimate logdet_estimate(const MatVecOperator& op, const Vector& theta,
                               Index K, Index L, std::uint64_t seed,
                               ProbeKind kind, const LanczosOptions& opts) {
  const TraceEstimate t = hutchinson_trace_funm(op, theta, K, L, seed,
                                                ScalarFunction::log(), kind,
                                                opts);
  return {t.estimate, t.std_error, t.probes};
}

Vector logdet_pullback(const MatVecOperator& op, const Vector& theta, Index K,
                       Index L, std::uint64_t seed, ProbeKind kind,
                       const LanczosOptions& opts) {
  if (L < 1) throw DimensionError("probe count must be positive");
  const ScalarFunction fn = ScalarFunction::log();
  Vector g = Vector::Zero(op.param_count());
  for (Index i = 0; i < L; ++i) {
    const Vector z =
        probe_vector(seed, static_cast<std::uint64_t>(i), op.dim(), kind);
    const QuadraticFormResult q = quadratic_form_funm(op, theta, z, K, fn, opts);
    g += quadratic_form_funm_pullback(op, q, fn, 1.0).grad_theta;
  }
  return g / static_cast<double>(L);
}

Vector diagonal_estimate(const MatVecOperator& op, const Vector& theta,
                         Index L, std::uint64_t seed) {
  if (L < 1) throw DimensionError("probe count must be positive");
  Vector d = Vector::Zero(op.dim());
  for (Index i = 0; i < L; ++i) {
    const Vector z = probe_vector(seed, static_cast<std::uint64_t>(i),
                                  op.dim(), ProbeKind::Rademacher);
    d += z.cwiseProduct(op.apply(theta, z));
  }
  return d / static_cast<double>(L);
}

Vector sample_inv_sqrt(const MatVecOperator& op, const Vector& theta, Index K,
                       const Vector& eps, const LanczosOptions& opts) {
  return funm_lanczos(op, theta, eps, K, ScalarFunction::inv_sqrt(), opts).y;
}

InvSqrtSample sample_inv_sqrt_seeded(const MatVecOperator& op,
                                     const Vector& theta, Index K,
                                     std::uint64_t seed, std::uint64_t index,
                                     const LanczosOptions& opts) {
  InvSqrtSample s;
  s.probe = probe_vector(seed, index, op.dim(), ProbeKind::Gaussian);
  s.y = sample_inv_sqrt(op, theta, K, s.probe, opts);
  return s;
}

}  // namespace kadj
