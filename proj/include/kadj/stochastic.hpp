// Stochastic trace, log-determinant, and diagonal estimators built on the
// Krylov quadratic form, with gradients through the same probe set.
//
// Probes are counter-based: probe(seed, index, dim, kind) is a pure
// function, so estimator outputs are bit-reproducible for a fixed seed and
// independent of evaluation order. Per-probe terms are accumulated in
// ascending index order to keep the floating-point reduction fixed.
#pragma once

#include <cstdint>
#include <functional>

#include "kadj/funm_action.hpp"

namespace kadj {

enum class ProbeKind { Rademacher, Gaussian };

// splitmix64 stream: state₀ = seed + (index+1)·0x9E3779B97F4A7C15, one
// output per iteration. Rademacher maps the top bit to ±1; Gaussian uses
// Box–Muller on ((z >> 11) + 0.5)·2⁻⁵³ pairs.
Vector probe_vector(std::uint64_t seed, std::uint64_t index, Index dim,
                    ProbeKind kind);

struct TraceEstimate {
  double estimate = 0.0;
  double std_error = 0.0;  // sample stddev of per-probe terms / √L; 0 if L = 1
  bool std_error_defined = false;  // false for L = 1 (single-sample stddev)
  Index probes = 0;
};

// Hutchinson estimator of the trace behind a quadratic form: mean and
// standard error of form(z_i) over L counter-seeded probes, accumulated in
// ascending index order for a fixed floating-point reduction. Throws
// NumericalError (with the probe index) if form returns a non-finite value.
TraceEstimate hutchinson_trace(
    const std::function<double(const Vector&)>& form, Index dim, Index L,
    std::uint64_t seed, ProbeKind kind = ProbeKind::Rademacher);

// Convenience instantiation for tr f(A(θ)): form(z) = zᵀ f(A) z evaluated
// as the Krylov quadratic form with K Lanczos steps per probe.
TraceEstimate hutchinson_trace_funm(const MatVecOperator& op,
                                    const Vector& theta, Index K, Index L,
                                    std::uint64_t seed,
                                    const ScalarFunction& fn,
                                    ProbeKind kind = ProbeKind::Rademacher,
                                    const LanczosOptions& opts = {});

struct LogDetEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  Index probes = 0;
};

// log det A(θ) = tr log A(θ), estimated as above with f = log. Requires a
// symmetric positive definite operator (DomainError surfaces otherwise).
LogDetEstimate logdet_estimate(const MatVecOperator& op, const Vector& theta,
                               Index K, Index L, std::uint64_t seed,
                               ProbeKind kind = ProbeKind::Rademacher,
                               const LanczosOptions& opts = {});

// Gradient of the logdet *estimator* (same probes, same K): average of the
// per-probe quadratic-form pullbacks. For the exact logdet this converges
// to tr(A⁻¹ ∂A/∂θ) as K and L grow.
Vector logdet_pullback(const MatVecOperator& op, const Vector& theta, Index K,
                       Index L, std::uint64_t seed,
                       ProbeKind kind = ProbeKind::Rademacher,
                       const LanczosOptions& opts = {});

// Stochastic diagonal: (1/L) Σ_i z_i ∘ (A z_i) over Rademacher probes.
Vector diagonal_estimate(const MatVecOperator& op, const Vector& theta,
                         Index L, std::uint64_t seed);

// y = A(θ)^{−1/2} ε via K Lanczos steps with f(x) = x^{−1/2}. For ε ~ N(0, I)
// the samples have covariance → A⁻¹ (K → N), which is the posterior-sampling
// primitive y = A^{−1/2} ε.
Vector sample_inv_sqrt(const MatVecOperator& op, const Vector& theta, Index K,
                       const Vector& eps, const LanczosOptions& opts = {});

struct InvSqrtSample {
  Vector y;      // ≈ A^{−1/2} ε
  Vector probe;  // the Gaussian probe ε used
};

// Seeded convenience: draws ε = probe_vector(seed, index, N, Gaussian) and
// applies sample_inv_sqrt to it.
InvSqrtSample sample_inv_sqrt_seeded(const MatVecOperator& op,
                                     const Vector& theta, Index K,
                                     std::uint64_t seed,
                                     std::uint64_t index = 0,
                                     const LanczosOptions& opts = {});

}  // namespace kadj
