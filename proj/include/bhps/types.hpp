// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bhps {

using Real = double;
using Complex = std::complex<double>;

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Eigen::VectorXi;

inline constexpr Real kPi = 3.14159265358979323846;

/// Bose-Hubbard model parameters (hbar = 1). Open-chain hopping by default;
/// `periodic` adds the wrap-around link as a configuration extension.
struct HamiltonianParams {
    VectorXd onsite;          // site energies epsilon_i, length M
    Real hopping = 0.0;       // Delta
    Real interaction = 0.0;   // U
    bool periodic = false;

    int sites() const { return static_cast<int>(onsite.size()); }

    void validate() const {
        if (onsite.size() < 1) throw std::invalid_argument("onsite: need M >= 1 sites");
        if (!onsite.allFinite()) throw std::invalid_argument("onsite energies must be finite");
        if (!std::isfinite(hopping)) throw std::invalid_argument("hopping must be finite");
        if (!std::isfinite(interaction)) throw std::invalid_argument("interaction must be finite");
    }
};

/// Normalized complex amplitudes (x_1, ..., x_M) of an SU(M) coherent state,
/// gauge-fixed so that x_1 is real and >= 0.
struct AmplitudeParams {
    VectorXcd x;

    int sites() const { return static_cast<int>(x.size()); }
};

/// Coset coordinates y_k = y_{k1}, k = 2..M; ||y|| <= pi/2.
struct CosetParams {
    VectorXcd y;  // length M-1

    int sites() const { return static_cast<int>(y.size()) + 1; }
};

/// Amplitude-phase chart: p_k = |x_k|^2, q_k = -arg(x_k), q_1 == 0.
/// `degenerate[k]` marks phases that were set to 0 because p_k vanished.
struct PhasePoint {
    VectorXd p;  // length M, sum = 1
    VectorXd q;  // length M, q(0) == 0
    std::vector<std::uint8_t> degenerate;

    int sites() const { return static_cast<int>(p.size()); }
};

inline AmplitudeParams pq_to_x(const PhasePoint& pt) {
    const int M = pt.sites();
    AmplitudeParams a;
    a.x.resize(M);
    for (int k = 0; k < M; ++k) {
        const Real r = std::sqrt(std::max<Real>(pt.p[k], 0.0));
        a.x[k] = k == 0 ? Complex(r, 0.0) : r * std::exp(Complex(0.0, -pt.q[k]));
    }
    return a;
}

inline PhasePoint x_to_pq(const AmplitudeParams& a, Real degenerate_tol = 1e-14) {
    const int M = a.sites();
    PhasePoint pt;
    pt.p.resize(M);
    pt.q.resize(M);
    pt.degenerate.assign(M, 0);
    // gauge: rotate so x_1 is real >= 0 (use the largest component if x_1 ~ 0)
    Complex ref = a.x[0];
    if (std::abs(ref) < degenerate_tol) {
        int imax = 0;
        for (int k = 1; k < M; ++k)
            if (std::abs(a.x[k]) > std::abs(a.x[imax])) imax = k;
        ref = a.x[imax];
    }
    const Complex phase = std::abs(ref) > 0 ? std::conj(ref) / std::abs(ref) : Complex(1, 0);
    for (int k = 0; k < M; ++k) {
        const Complex xk = a.x[k] * phase;
        pt.p[k] = std::norm(xk);
        if (pt.p[k] < degenerate_tol) {
            pt.q[k] = 0.0;
            pt.degenerate[k] = 1;
        } else {
            pt.q[k] = -std::arg(xk);
            if (pt.q[k] < 0) pt.q[k] += 2 * kPi;
        }
    }
    pt.q[0] = 0.0;
    return pt;
}

}  // namespace bhps
