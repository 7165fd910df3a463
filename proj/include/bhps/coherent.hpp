// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bhps/fock.hpp"
#include "bhps/parallel.hpp"
#include "bhps/rng.hpp"
#include "bhps/types.hpp"

namespace bhps {

/// x_1 = cos||y||, x_k = sinc-like sin||y||/||y|| * y_k. The ||y|| -> 0 limit
/// is taken by series so the reference state maps cleanly.
inline AmplitudeParams y_to_x(const CosetParams& c) {
    const int M = c.sites();
    const Real r = c.y.norm();
    if (r > kPi / 2 + 1e-12) throw std::invalid_argument("y_to_x: ||y|| exceeds pi/2");
    AmplitudeParams a;
    a.x.resize(M);
    const Real sinc = r < 1e-8 ? 1.0 - r * r / 6.0 : std::sin(r) / r;
    a.x[0] = Complex(std::cos(r), 0.0);
    for (int k = 1; k < M; ++k) a.x[k] = sinc * c.y[k - 1];
    return a;
}

inline Real log_multinomial(int N, const VectorXi& occ) {
    Real s = std::lgamma(N + 1.0);
    for (int i = 0; i < occ.size(); ++i) s -= std::lgamma(occ[i] + 1.0);
    return s;
}

/// Fock coefficients of |x>_N: <n|x> = sqrt(N!/prod n_i!) prod x_i^{n_i}.
/// Multinomials are taken in log space; amplitudes by repeated squaring.
inline FockVector coherent_fock(const AmplitudeParams& a, const FockBasis& basis) {
    if (a.sites() != basis.sites()) throw std::invalid_argument("coherent_fock: M mismatch");
    const int N = basis.particles();
    FockVector v(basis.size());
    for (int i = 0; i < basis.size(); ++i) {
        const VectorXi& occ = basis.state(i);
        Complex amp = std::exp(Complex(0.5 * log_multinomial(N, occ), 0.0));
        for (int s = 0; s < occ.size(); ++s) {
            Complex base = a.x[s];
            int e = occ[s];
            while (e > 0) {
                if (e & 1) amp *= base;
                base *= base;
                e >>= 1;
            }
        }
        v[i] = amp;
    }
    return v;
}

/// <x|x'>_N = (sum_k conj(x_k) x'_k)^N
inline Complex overlap(const AmplitudeParams& a, const AmplitudeParams& b, int N) {
    Complex s(0, 0);
    for (int k = 0; k < a.sites(); ++k) s += std::conj(a.x[k]) * b.x[k];
    return std::pow(s, N);
}

/// Husimi value Q(x) = <x|rho|x>.
inline Real husimi(const DensityMatrix& rho, const AmplitudeParams& a, const FockBasis& basis,
                   Real negative_tol = 1e-12) {
    const FockVector c = coherent_fock(a, basis);
    const Real q = std::real(c.dot(rho * c));
    if (q < -negative_tol * std::max<Real>(1.0, rho.cwiseAbs().maxCoeff()))
        throw std::runtime_error("husimi: negative value, density matrix is not physical");
    return q;
}

/// Phase-space points carrying one common weight, representing the
/// group-invariant measure so that sum weight |x_i><x_i| -> identity.
struct MeasureSample {
    std::vector<PhasePoint> points;
    Real weight = 0.0;
    int sites = 0;
    int particles = 0;
    std::uint64_t seed = 0;
};

inline AmplitudeParams sample_amplitude(int M, SplitMix64& g) {
    AmplitudeParams a;
    a.x.resize(M);
    for (int k = 0; k < M; ++k) a.x[k] = Complex(g.normal(), g.normal());
    a.x /= a.x.norm();
    // fix the global phase so x_1 >= 0 (chart convention)
    const Real r = std::abs(a.x[0]);
    if (r > 1e-300) a.x *= std::conj(a.x[0]) / r;
    return a;
}

/// Uniform sample of the invariant (Fubini-Study) measure; weight dim/count.
inline MeasureSample sample_measure(int M, int N, int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_measure: count must be >= 1");
    FockBasis basis(M, N);  // dimension only
    MeasureSample out;
    out.sites = M;
    out.particles = N;
    out.seed = seed;
    out.weight = static_cast<Real>(basis.size()) / count;
    out.points.resize(count);
    parallel_for(count, [&](std::ptrdiff_t i) {
        SplitMix64 g = stream_for(seed, static_cast<std::uint64_t>(i));
        out.points[i] = x_to_pq(sample_amplitude(M, g));
    });
    return out;
}

/// Unitary completion with prescribed first column (Gram-Schmidt on the
/// identity columns).
inline MatrixXcd unitary_from_first_column(const VectorXcd& x0) {
    const int M = static_cast<int>(x0.size());
    MatrixXcd V(M, M);
    V.col(0) = x0 / x0.norm();
    int filled = 1;
    for (int c = 0; c < M && filled < M; ++c) {
        VectorXcd v = VectorXcd::Zero(M);
        v[c] = 1.0;
        for (int r = 0; r < filled; ++r) v -= V.col(r).dot(v) * V.col(r);
        const Real n = v.norm();
        if (n > 1e-8) V.col(filled++) = v / n;
    }
    if (filled < M) throw std::runtime_error("unitary_from_first_column: completion failed");
    return V;
}

/// Draw points from the normalized coherent-state Husimi density
/// Q(x) = |<x|x0>|^{2N} d(mu)/dim: p_1 ~ Beta(N+1, M-1) about the rotated
/// reference, remaining weights uniform on the scaled simplex, phases
/// uniform; then rotate the reference onto x0.
inline std::vector<PhasePoint> sample_husimi_coherent(const AmplitudeParams& x0, int N, int count,
                                                      std::uint64_t seed) {
    const int M = x0.sites();
    const MatrixXcd V = unitary_from_first_column(x0.x);
    std::vector<PhasePoint> pts(count);
    parallel_for(count, [&](std::ptrdiff_t i) {
        SplitMix64 g = stream_for(seed ^ 0x5bf0a8b1ULL, static_cast<std::uint64_t>(i));
        const Real p1 = std::pow(g.uniform_pos(), 1.0 / (N + 1));
        VectorXd rest(M - 1);
        if (M > 1) {
            // uniform on the simplex of mass (1 - p1): normalized exponentials
            Real tot = 0.0;
            for (int k = 0; k < M - 1; ++k) {
                rest[k] = -std::log(g.uniform_pos());
                tot += rest[k];
            }
            rest *= (1.0 - p1) / tot;
        }
        VectorXcd x(M);
        x[0] = std::sqrt(p1);
        for (int k = 1; k < M; ++k)
            x[k] = std::sqrt(rest[k - 1]) * std::exp(Complex(0.0, -2 * kPi * g.uniform()));
        AmplitudeParams rotated;
        rotated.x = V * x;
        pts[i] = x_to_pq(rotated);
    });
    return pts;
}

/// Monte Carlo resolution-of-identity defect ||sum w |x><x| - I||_F / ||I||_F.
inline Real identity_reconstruction_error(const MeasureSample& sample, const FockBasis& basis) {
    MatrixXcd acc = MatrixXcd::Zero(basis.size(), basis.size());
    for (const auto& pt : sample.points) {
        const FockVector c = coherent_fock(pq_to_x(pt), basis);
        acc.noalias() += sample.weight * c * c.adjoint();
    }
    acc -= MatrixXcd::Identity(basis.size(), basis.size());
    return acc.norm() / std::sqrt(static_cast<Real>(basis.size()));
}

}  // namespace bhps
