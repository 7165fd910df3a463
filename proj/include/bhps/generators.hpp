// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0
//
// Phase-space evolution generators for the Bose-Hubbard model over SU(M)
// coherent states, in the amplitude-phase chart (p_2..p_M, q_2..q_M) with
// p_1 = 1 - sum p_k and q_1 = 0. All coefficient fields below are derived
// from the su(M) differential algebra and are verified against the exact
// Fock-space oracle by the residual tests.

#pragma once

#include <cmath>
#include <stdexcept>

#include "bhps/types.hpp"

namespace bhps {

enum class GeneratorKind { Q, P, Liouville };
enum class EvolutionOrder { Full, FirstOrder };

/// Real-time generator description: d(dist)/dt = L[spec] dist.
struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::Q;
    EvolutionOrder order = EvolutionOrder::Full;
    HamiltonianParams params;
    int particles = 0;

    int sites() const { return params.sites(); }
};

enum class BlochKind { Q, P, Classical };

/// Imaginary-time generator description: d(dist)/dbeta = B[spec] dist.
struct BlochSpec {
    BlochKind kind = BlochKind::Q;
    HamiltonianParams params;
    int particles = 0;

    int sites() const { return params.sites(); }
};

/// Differential operator at one phase-space point, reduced-chart indices
/// (site m = 2..M maps to index m-2). cpq(a, b) multiplies d^2/dp_a dq_b.
struct PointOperator {
    Real c0 = 0.0;
    VectorXd cp, cq;
    MatrixXd cpp, cqq, cpq;

    explicit PointOperator(int reduced = 0)
        : cp(VectorXd::Zero(reduced)),
          cq(VectorXd::Zero(reduced)),
          cpp(MatrixXd::Zero(reduced, reduced)),
          cqq(MatrixXd::Zero(reduced, reduced)),
          cpq(MatrixXd::Zero(reduced, reduced)) {}
};

/// Derivatives of a scalar field at one point, same index layout.
struct FieldDerivs {
    Real value = 0.0;
    VectorXd dp, dq;
    MatrixXd dpp, dqq, dpq;

    explicit FieldDerivs(int reduced = 0)
        : dp(VectorXd::Zero(reduced)),
          dq(VectorXd::Zero(reduced)),
          dpp(MatrixXd::Zero(reduced, reduced)),
          dqq(MatrixXd::Zero(reduced, reduced)),
          dpq(MatrixXd::Zero(reduced, reduced)) {}
};

inline Real apply_point_operator(const PointOperator& op, const FieldDerivs& f) {
    Real out = op.c0 * f.value + op.cp.dot(f.dp) + op.cq.dot(f.dq);
    out += (op.cpp.array() * f.dpp.array()).sum();
    out += (op.cqq.array() * f.dqq.array()).sum();
    out += (op.cpq.array() * f.dpq.array()).sum();
    return out;
}

namespace detail {
inline void check_chart_args(const HamiltonianParams& params, const VectorXd& p,
                             const VectorXd& q) {
    if (params.periodic)
        throw std::invalid_argument("phase-space generators support the open chain only");
    if (p.size() != params.onsite.size() || q.size() != p.size())
        throw std::invalid_argument("generator coefficients: p/q must be full length M");
}
}  // namespace detail

/// Gross-Pitaevskii energy per particle:
/// H(p, q) = -2 Delta sum sqrt(p_k p_{k+1}) cos(q_{k+1} - q_k)
///           + (U N / 2) sum p_k^2 + sum eps_k p_k.
inline Real hamiltonian_function(const VectorXd& p, const VectorXd& q,
                                 const HamiltonianParams& params, int N) {
    detail::check_chart_args(params, p, q);
    const int M = params.sites();
    Real h = 0.0;
    for (int k = 0; k + 1 < M; ++k)
        h -= 2 * params.hopping * std::sqrt(p[k] * p[k + 1]) * std::cos(q[k + 1] - q[k]);
    h += 0.5 * params.interaction * N * p.squaredNorm();
    h += params.onsite.dot(p);
    return h;
}

inline Real hamiltonian_function(const PhasePoint& pt, const HamiltonianParams& params, int N) {
    return hamiltonian_function(pt.p, pt.q, params, N);
}

/// Chart gradients of the Hamiltonian function w.r.t. the independent
/// variables p_m, q_m (m = 2..M; p_1 dependent). Reduced-index outputs.
inline void hamiltonian_gradients(const VectorXd& p, const VectorXd& q,
                                  const HamiltonianParams& params, int N, VectorXd& dHdp,
                                  VectorXd& dHdq) {
    detail::check_chart_args(params, p, q);
    const int M = params.sites();
    const Real D = params.hopping;
    const Real UN = params.interaction * N;
    dHdp.setZero(M - 1);
    dHdq.setZero(M - 1);
    for (int m = 2; m <= M; ++m) {
        const int i = m - 2;
        Real gp = -D * std::sqrt(p[m - 2] / p[m - 1]) * std::cos(q[m - 1] - q[m - 2]);
        if (m < M) gp -= D * std::sqrt(p[m] / p[m - 1]) * std::cos(q[m] - q[m - 1]);
        if (M >= 2) gp += D * std::sqrt(p[1] / p[0]) * std::cos(q[1]);
        gp += UN * (p[m - 1] - p[0]) + (params.onsite[m - 1] - params.onsite[0]);
        dHdp[i] = gp;

        Real gq = 2 * D * std::sqrt(p[m - 2] * p[m - 1]) * std::sin(q[m - 1] - q[m - 2]);
        if (m < M) gq -= 2 * D * std::sqrt(p[m - 1] * p[m]) * std::sin(q[m] - q[m - 1]);
        dHdq[i] = gq;
    }
}

/// Classical Liouville operator built from Poisson brackets of the
/// Hamiltonian function: L rho = dH/dq_k d_p_k - dH/dp_k d_q_k.
inline PointOperator liouville_coefficients(const HamiltonianParams& params, int N,
                                            const VectorXd& p, const VectorXd& q) {
    PointOperator op(params.sites() - 1);
    VectorXd dHdp, dHdq;
    hamiltonian_gradients(p, q, params, N, dHdp, dHdq);
    op.cp = dHdq;
    op.cq = -dHdp;
    return op;
}

/// Real-time generator for the Husimi (Q) or Glauber-Sudarshan (P)
/// distribution. First-order parts coincide with the Liouville flow except
/// for the interaction prefactor: U N for Q, U (N + M) for P. The
/// second-order (mixed d_p d_q) block carries opposite signs for Q and P and
/// is dropped for order = FirstOrder.
inline PointOperator realtime_coefficients(const GeneratorSpec& spec, const VectorXd& p,
                                           const VectorXd& q) {
    detail::check_chart_args(spec.params, p, q);
    const int M = spec.sites();
    const int N = spec.particles;
    const Real D = spec.params.hopping;
    const Real U = spec.params.interaction;
    const VectorXd& eps = spec.params.onsite;
    const Real C = spec.kind == GeneratorKind::P ? U * (N + M) : U * N;
    PointOperator op(M - 1);

    for (int m = 2; m <= M; ++m) {
        const int i = m - 2;
        Real cp = 2 * D * std::sqrt(p[m - 2] * p[m - 1]) * std::sin(q[m - 1] - q[m - 2]);
        if (m < M) cp -= 2 * D * std::sqrt(p[m - 1] * p[m]) * std::sin(q[m] - q[m - 1]);
        op.cp[i] = cp;

        Real cq = D * std::sqrt(p[m - 2] / p[m - 1]) * std::cos(q[m - 1] - q[m - 2]);
        if (m < M) cq += D * std::sqrt(p[m] / p[m - 1]) * std::cos(q[m] - q[m - 1]);
        cq -= D * std::sqrt(p[1] / p[0]) * std::cos(q[1]);
        cq += C * (p[0] - p[m - 1]) + (eps[0] - eps[m - 1]);
        op.cq[i] = cq;
    }

    if (spec.kind != GeneratorKind::Liouville && spec.order == EvolutionOrder::Full) {
        const Real sgn = spec.kind == GeneratorKind::Q ? 1.0 : -1.0;
        for (int k = 2; k <= M; ++k)          // q index
            for (int a = 2; a <= M; ++a) {    // p index
                Real v = U * (p[k - 1] - p[0]) * p[a - 1];
                if (a == k) v -= U * p[k - 1];
                op.cpq(a - 2, k - 2) = sgn * v;
            }
    }
    return op;
}

/// Imaginary-time (Bloch) generator for Q or P. Hopping and interaction
/// blocks share the structure of the real-time algebra; relative to Q, the P
/// operator swaps N -> N+M in the multiplicative counts, flips the sign of
/// every first-order hopping-derivative term, and adds the ordering constants
/// (sum eps_k and U(2N+M)).
inline PointOperator bloch_coefficients(const BlochSpec& spec, const VectorXd& p,
                                        const VectorXd& q) {
    if (spec.kind == BlochKind::Classical)
        throw std::invalid_argument("bloch_coefficients: classical flow has no grid operator");
    detail::check_chart_args(spec.params, p, q);
    const int M = spec.sites();
    const int N = spec.particles;
    const Real D = spec.params.hopping;
    const Real U = spec.params.interaction;
    const VectorXd& eps = spec.params.onsite;
    const bool isQ = spec.kind == BlochKind::Q;
    const Real K = isQ ? static_cast<Real>(N) : static_cast<Real>(N + M);
    const Real hop_sign = isQ ? 1.0 : -1.0;   // first-order hopping-derivative terms
    const Real s_sign = isQ ? -1.0 : 1.0;     // sign of the S-coupling in (K -+ S)
    const Real u1 = isQ ? U * (N - 1.0) : -U * (N + M + 1.0);

    PointOperator op(M - 1);
    const Real P2 = p.squaredNorm();
    const Real epk = eps.dot(p);
    Real hopsum = 0.0;
    for (int k = 1; k < M; ++k)
        hopsum += std::sqrt(p[k - 1] * p[k]) * std::cos(q[k] - q[k - 1]);

    if (isQ) {
        op.c0 = -K * epk + 2 * D * K * hopsum - 0.5 * U * N * (N - 1.0) * P2;
    } else {
        op.c0 = -K * epk + eps.sum() + 2 * D * K * hopsum - 0.5 * U * K * (K + 1.0) * P2 +
                U * (2.0 * N + M);
    }

    for (int a = 2; a <= M; ++a) {
        const int i = a - 2;
        Real cp = (isQ ? 1.0 : -1.0) * (epk * p[a - 1] - eps[a - 1] * p[a - 1]);
        cp += 2 * D * s_sign * hopsum * p[a - 1];
        Real pair = D * std::sqrt(p[a - 2] * p[a - 1]) * std::cos(q[a - 1] - q[a - 2]);
        if (a < M) pair += D * std::sqrt(p[a - 1] * p[a]) * std::cos(q[a] - q[a - 1]);
        cp += hop_sign * pair;
        cp += u1 * (P2 * p[a - 1] - p[a - 1] * p[a - 1]);
        op.cp[i] = cp;
    }

    // hopping sin terms: pair k contributes
    //   hop_sign * (D/2) sin(q_{k+1}-q_k) [ sqrt(p_{k+1}/p_k) dq_k
    //                                       - sqrt(p_k/p_{k+1}) dq_{k+1} ]
    // with dq_1 = -sum_m dq_m folded in for the boundary pair.
    for (int k = 1; k < M; ++k) {
        const Real sn = std::sin(q[k] - q[k - 1]);
        const Real ck = hop_sign * 0.5 * D * sn * std::sqrt(p[k] / p[k - 1]);
        const Real ck1 = -hop_sign * 0.5 * D * sn * std::sqrt(p[k - 1] / p[k]);
        if (k >= 2) {
            op.cq[k - 2] += ck;
        } else {
            for (int m = 2; m <= M; ++m) op.cq[m - 2] -= ck;
        }
        op.cq[k - 1] += ck1;
    }

    for (int a = 2; a <= M; ++a)
        for (int b = 2; b <= M; ++b) {
            Real v = -0.5 * U * P2 * p[a - 1] * p[b - 1];
            if (a == b) v -= 0.5 * U * p[a - 1] * p[a - 1];
            v += 0.5 * U * (p[a - 1] * p[a - 1] * p[b - 1] + p[b - 1] * p[b - 1] * p[a - 1]);
            op.cpp(a - 2, b - 2) = v;
            op.cqq(a - 2, b - 2) = U / 8.0 + (a == b ? U / 8.0 : 0.0);
        }
    return op;
}

/// Unnormalized classical canonical weight e^{-beta N H(p,q)}.
inline Real classical_gibbs(const PhasePoint& pt, Real beta, const HamiltonianParams& params,
                            int N) {
    if (beta < 0) throw std::invalid_argument("classical_gibbs: beta must be non-negative");
    return std::exp(-beta * N * hamiltonian_function(pt, params, N));
}

}  // namespace bhps
