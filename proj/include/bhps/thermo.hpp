// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bhps/dynamics.hpp"
#include "bhps/generators.hpp"
#include "bhps/grid.hpp"
#include "bhps/types.hpp"

namespace bhps {

struct BlochEvolveOptions {
    Real dbeta = 0.0;        // 0: choose from coefficient scale
    Real cfl = 0.4;
    bool project = true;
    Real stiffness_ratio = 1e12;  // abort bound on max/min of the field
    long max_steps = 2000000;
};

/// Classical canonical weight e^{-beta N H} sampled on the grid (exact
/// solution of the classical Bloch flow from the uniform distribution).
inline PhaseGrid2 classical_gibbs_grid(const PhaseGrid2& geometry, Real beta,
                                       const HamiltonianParams& params, int N) {
    PhaseGrid2 out = geometry;
    VectorXd p(2), q(2);
    for (int i = 0; i < geometry.np; ++i)
        for (int j = 0; j < geometry.nq; ++j) {
            p << 1.0 - geometry.p[i], geometry.p[i];
            q << 0.0, geometry.q[j];
            out.values(i, j) = std::exp(-beta * N * hamiltonian_function(p, q, params, N));
        }
    return out;
}

/// Explicit RK4 integration of the unnormalized imaginary-time flow
/// d(dist)/dbeta = B dist from grid0 (the beta = 0 distribution). Aborts when
/// the dynamic range exceeds the stiffness bound.
inline PhaseGrid2 evolve_bloch(const PhaseGrid2& grid0, const BlochSpec& spec, Real beta_final,
                               const BlochEvolveOptions& opts = {}) {
    if (beta_final < 0) throw std::invalid_argument("evolve_bloch: beta must be non-negative");
    PhaseGrid2 out = grid0;
    if (beta_final == 0.0) return out;
    if (spec.kind == BlochKind::Classical) {
        PhaseGrid2 g = classical_gibbs_grid(grid0, beta_final, spec.params, spec.particles);
        g.values.array() *= grid0.values.array();  // flow is multiplicative
        return g;
    }
    const GridOperator op = make_bloch_operator(grid0, spec);
    const GridStencils st(grid0.np, grid0.hp);
    PhysicalSubspace subspace(grid0, opts.project ? spec.particles : 0);
    Real db = opts.dbeta > 0 ? opts.dbeta : opts.cfl / op.coefficient_scale(grid0.hp, grid0.hq);
    const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(beta_final / db)));
    if (nsteps > opts.max_steps) throw NumericalError("evolve_bloch: step budget exceeded");
    const Real h = beta_final / nsteps;
    MatrixXd& G = out.values;
    for (long s = 0; s < nsteps; ++s) {
        const MatrixXd k1 = op.apply(st, G);
        const MatrixXd k2 = op.apply(st, G + 0.5 * h * k1);
        const MatrixXd k3 = op.apply(st, G + 0.5 * h * k2);
        const MatrixXd k4 = op.apply(st, G + h * k3);
        G += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (opts.project) subspace.project(G);
        const Real mx = G.maxCoeff();
        const Real mn = G.minCoeff();
        if (mx <= 0) throw NumericalError("evolve_bloch: field collapsed to non-positive values");
        if (mn > 0 && mx / mn > opts.stiffness_ratio)
            throw NumericalError("evolve_bloch: stiffness limit reached (dynamic range too large)");
    }
    return out;
}

/// Width diagnostic: measure-weighted standard deviation of p_2 around the
/// grid argmax of the (normalized) field. Reported alongside the
/// coherent-state width sqrt(p(1-p)/N) for low-temperature comparisons.
struct WidthReport {
    Real p_argmax = 0.0;
    Real q_argmax = 0.0;
    Real p_stddev = 0.0;
    Real coherent_width = 0.0;
};

inline WidthReport q_width_report(const PhaseGrid2& grid, int N) {
    WidthReport rep;
    Eigen::Index imax = 0, jmax = 0;
    grid.values.maxCoeff(&imax, &jmax);
    rep.p_argmax = grid.p[imax];
    rep.q_argmax = grid.q[jmax];
    const Real mass = grid.values.sum();
    Real mean = 0.0, m2 = 0.0;
    for (int i = 0; i < grid.np; ++i) {
        const Real rowsum = grid.values.row(i).sum();
        mean += grid.p[i] * rowsum;
    }
    mean /= mass;
    for (int i = 0; i < grid.np; ++i) {
        const Real rowsum = grid.values.row(i).sum();
        m2 += (grid.p[i] - mean) * (grid.p[i] - mean) * rowsum;
    }
    rep.p_stddev = std::sqrt(m2 / mass);
    rep.coherent_width = std::sqrt(rep.p_argmax * (1.0 - rep.p_argmax) / N);
    return rep;
}

}  // namespace bhps
