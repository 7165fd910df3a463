// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/QR>
#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bhps/generators.hpp"
#include "bhps/parallel.hpp"
#include "bhps/types.hpp"

namespace bhps {

/// Scattered phase-space samples in the reduced chart (p_2..p_M, q_2..q_M).
/// This is the general-M carrier for generator applications; grids stay
/// M = 2 only.
struct PointCloud {
    std::vector<PhasePoint> points;
    VectorXd values;

    int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

inline Real wrap_angle(Real dq) { return std::remainder(dq, 2 * kPi); }

/// Reduced-coordinate offset of b relative to a (periodic in q).
inline VectorXd chart_offset(const PhasePoint& a, const PhasePoint& b) {
    const int r = a.sites() - 1;
    VectorXd d(2 * r);
    for (int i = 0; i < r; ++i) {
        d[i] = b.p[i + 1] - a.p[i + 1];
        d[r + i] = wrap_angle(b.q[i + 1] - a.q[i + 1]);
    }
    return d;
}

}  // namespace detail

namespace detail {

inline void enumerate_monomials(int dims, int degree, std::vector<std::vector<int>>& out) {
    std::vector<int> alpha(dims, 0);
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == dims) {
            out.push_back(alpha);
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            alpha[pos] = k;
            rec(pos + 1, remaining - k);
        }
        alpha[pos] = 0;
    };
    rec(0, degree);
}

}  // namespace detail

/// Weighted local Taylor fit (default cubic) at cloud point `center` from its
/// nearest neighbors; unknowns are the Taylor derivatives D^alpha f. Cubic
/// models keep the Hessian estimate at second order in the local spacing.
inline FieldDerivs mls_derivatives(const PointCloud& cloud, int center, int neighbors = 0,
                                   int degree = 3) {
    const int M = cloud.points[center].sites();
    const int r = M - 1;
    const int dims = 2 * r;
    std::vector<std::vector<int>> mono;
    detail::enumerate_monomials(dims, degree, mono);
    const int unknowns = static_cast<int>(mono.size());
    if (neighbors <= 0) neighbors = 2 * unknowns;
    neighbors = std::min(neighbors, cloud.size());
    if (neighbors < unknowns)
        throw std::invalid_argument("mls_derivatives: not enough points for the local fit");

    std::vector<std::pair<Real, int>> dist(cloud.size());
    for (int i = 0; i < cloud.size(); ++i) {
        const VectorXd d = detail::chart_offset(cloud.points[center], cloud.points[i]);
        dist[i] = {d.squaredNorm(), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + neighbors, dist.end());
    const Real h2 = std::max(dist[neighbors - 1].first, 1e-30);

    std::vector<Real> inv_fact(static_cast<std::size_t>(degree) + 1, 1.0);
    for (int k = 2; k <= degree; ++k) inv_fact[k] = inv_fact[k - 1] / k;

    MatrixXd A(neighbors, unknowns);
    VectorXd rhs(neighbors);
    for (int n = 0; n < neighbors; ++n) {
        const int i = dist[n].second;
        const VectorXd d = detail::chart_offset(cloud.points[center], cloud.points[i]);
        const Real w = std::exp(-2.0 * dist[n].first / h2);
        for (int c = 0; c < unknowns; ++c) {
            Real term = 1.0;
            for (int a = 0; a < dims; ++a)
                for (int k = 0; k < mono[c][a]; ++k) term *= d[a];
            for (int a = 0; a < dims; ++a) term *= inv_fact[mono[c][a]];
            A(n, c) = w * term;
        }
        rhs[n] = w * cloud.values[i];
    }
    const VectorXd sol = A.colPivHouseholderQr().solve(rhs);

    auto find = [&](const std::vector<int>& alpha) {
        for (int c = 0; c < unknowns; ++c)
            if (mono[c] == alpha) return c;
        return -1;
    };
    FieldDerivs out(r);
    std::vector<int> alpha(dims, 0);
    out.value = sol[find(alpha)];
    for (int a = 0; a < dims; ++a) {
        std::fill(alpha.begin(), alpha.end(), 0);
        alpha[a] = 1;
        const Real v = sol[find(alpha)];
        if (a < r)
            out.dp[a] = v;
        else
            out.dq[a - r] = v;
    }
    MatrixXd hess(dims, dims);
    for (int a = 0; a < dims; ++a)
        for (int b = a; b < dims; ++b) {
            std::fill(alpha.begin(), alpha.end(), 0);
            alpha[a] += 1;
            alpha[b] += 1;
            hess(a, b) = hess(b, a) = sol[find(alpha)];
        }
    out.dpp = hess.topLeftCorner(r, r);
    out.dqq = hess.bottomRightCorner(r, r);
    out.dpq = hess.topRightCorner(r, r);
    return out;
}

/// Generator action on scattered samples: derivatives by local quadratic
/// fits, coefficients from the same point formulas the grids use. Intended
/// for exploratory general-M work; accuracy is set by the cloud density.
inline VectorXd apply_generator_cloud(const PointCloud& cloud, const GeneratorSpec& spec,
                                      int neighbors = 0) {
    VectorXd out(cloud.size());
    parallel_for(cloud.size(), [&](std::ptrdiff_t i) {
        const FieldDerivs fd = mls_derivatives(cloud, static_cast<int>(i), neighbors);
        const PhasePoint& pt = cloud.points[i];
        const PointOperator op =
            spec.kind == GeneratorKind::Liouville
                ? liouville_coefficients(spec.params, spec.particles, pt.p, pt.q)
                : realtime_coefficients(spec, pt.p, pt.q);
        out[i] = apply_point_operator(op, fd);
    });
    return out;
}

inline VectorXd apply_bloch_cloud(const PointCloud& cloud, const BlochSpec& spec,
                                  int neighbors = 0) {
    VectorXd out(cloud.size());
    parallel_for(cloud.size(), [&](std::ptrdiff_t i) {
        const FieldDerivs fd = mls_derivatives(cloud, static_cast<int>(i), neighbors);
        const PhasePoint& pt = cloud.points[i];
        out[i] = apply_point_operator(bloch_coefficients(spec, pt.p, pt.q), fd);
    });
    return out;
}

}  // namespace bhps
