// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bhps/coherent.hpp"
#include "bhps/dynamics.hpp"
#include "bhps/fock.hpp"
#include "bhps/parallel.hpp"
#include "bhps/types.hpp"

namespace bhps {

enum class Estimator { QIntegral, PIntegral, Ensemble, Fock };

inline const char* estimator_name(Estimator e) {
    switch (e) {
        case Estimator::QIntegral: return "Q_integral";
        case Estimator::PIntegral: return "P_integral";
        case Estimator::Ensemble: return "ensemble";
        case Estimator::Fock: return "fock";
    }
    return "?";
}

/// One observable <E_jk> with its estimator provenance; mc_stderr carries the
/// jackknife error (0 for deterministic estimators).
struct ObservableReport {
    int j = 1, k = 1;
    Complex value{0.0, 0.0};
    Estimator estimator = Estimator::Fock;
    Real mc_stderr = 0.0;
};

namespace detail {

/// Jackknife standard error over `blocks` consecutive blocks, separately for
/// the real and imaginary parts (returned combined in quadrature).
inline Real jackknife_stderr(const VectorXcd& samples, int blocks = 20) {
    const int n = static_cast<int>(samples.size());
    blocks = std::min(blocks, n);
    if (blocks < 2) return 0.0;
    const Complex total = samples.sum();
    Real var_re = 0.0, var_im = 0.0;
    std::vector<Complex> theta(blocks);
    int start = 0;
    for (int b = 0; b < blocks; ++b) {
        const int len = n / blocks + (b < n % blocks ? 1 : 0);
        Complex bs(0, 0);
        for (int i = start; i < start + len; ++i) bs += samples[i];
        theta[b] = (total - bs) / static_cast<Real>(n - len);
        start += len;
    }
    Complex mean(0, 0);
    for (const auto& t : theta) mean += t;
    mean /= static_cast<Real>(blocks);
    for (const auto& t : theta) {
        var_re += (t.real() - mean.real()) * (t.real() - mean.real());
        var_im += (t.imag() - mean.imag()) * (t.imag() - mean.imag());
    }
    const Real f = (blocks - 1.0) / blocks;
    return std::sqrt(f * var_re + f * var_im);
}

}  // namespace detail

/// Monte Carlo form of the exact identity
/// <E_jk> = (N + M) int x_k conj(x_j) Q d(mu) - delta_jk
/// over an invariant-measure sample.
inline ObservableReport expect_from_Q(const DensityMatrix& rho, int j, int k,
                                      const MeasureSample& sample, const FockBasis& basis) {
    if (sample.sites != basis.sites() || sample.particles != basis.particles())
        throw std::invalid_argument("expect_from_Q: sample does not match (M, N)");
    const int S = static_cast<int>(sample.points.size());
    const int M = basis.sites();
    const int N = basis.particles();
    VectorXcd contrib(S);
    parallel_for(S, [&](std::ptrdiff_t i) {
        const AmplitudeParams a = pq_to_x(sample.points[i]);
        const FockVector c = coherent_fock(a, basis);
        const Real Q = std::real(c.dot(rho * c));
        contrib[i] = static_cast<Real>(N + M) * sample.weight * a.x[k - 1] *
                     std::conj(a.x[j - 1]) * Q;
    });
    ObservableReport rep;
    rep.j = j;
    rep.k = k;
    rep.estimator = Estimator::QIntegral;
    rep.value = contrib.sum() - (j == k ? Complex(1.0, 0.0) : Complex(0.0, 0.0));
    // stderr of the sum: jackknife over per-sample values rescaled so that
    // their mean equals the sum
    rep.mc_stderr = detail::jackknife_stderr(contrib * static_cast<Real>(S));
    return rep;
}

/// Exact value N x_k conj(x_j) for a delta P at x0.
inline ObservableReport expect_from_P_delta(const AmplitudeParams& x0, int j, int k, int N) {
    ObservableReport rep;
    rep.j = j;
    rep.k = k;
    rep.estimator = Estimator::PIntegral;
    rep.value = static_cast<Real>(N) * x0.x[k - 1] * std::conj(x0.x[j - 1]);
    return rep;
}

/// Ensemble estimator N sum_i w_i x_{k,i} conj(x_{j,i}).
inline ObservableReport expect_from_ensemble(const TrajectoryEnsemble& ens, int j, int k, int N) {
    const int S = ens.size();
    VectorXcd contrib(S);
    for (int i = 0; i < S; ++i) {
        const AmplitudeParams a = pq_to_x(ens.points[i]);
        contrib[i] = static_cast<Real>(N) * ens.weights[i] * a.x[k - 1] * std::conj(a.x[j - 1]);
    }
    ObservableReport rep;
    rep.j = j;
    rep.k = k;
    rep.estimator = Estimator::Ensemble;
    rep.value = contrib.sum();
    rep.mc_stderr = detail::jackknife_stderr(contrib * static_cast<Real>(S));
    return rep;
}

/// Deterministic oracle report from the Fock side.
inline ObservableReport expect_fock_report(const DensityMatrix& rho, int j, int k,
                                           const FockBasis& basis) {
    ObservableReport rep;
    rep.j = j;
    rep.k = k;
    rep.estimator = Estimator::Fock;
    rep.value = expectation_fock(rho, j, k, basis);
    return rep;
}

/// All M x M observables as a matrix, entry (j-1, k-1) = <E_jk>.
template <class ReportFn>
MatrixXcd observable_matrix(int M, ReportFn&& fn) {
    MatrixXcd out(M, M);
    for (int j = 1; j <= M; ++j)
        for (int k = 1; k <= M; ++k) out(j - 1, k - 1) = fn(j, k).value;
    return out;
}

}  // namespace bhps
