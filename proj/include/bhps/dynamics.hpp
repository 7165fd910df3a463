// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bhps/generators.hpp"
#include "bhps/grid.hpp"
#include "bhps/parallel.hpp"
#include "bhps/types.hpp"

namespace bhps {

/// Raised when a solver detects instability or a stiffness limit.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Discrete GPE right-hand side: i xdot_j = eps_j x_j - Delta (x_{j+1} +
/// x_{j-1}) + C |x_j|^2 x_j, missing neighbors treated as zero. C defaults to
/// U N; the Glauber-Sudarshan first-order flow uses C = U (N + M).
inline VectorXcd gpe_rhs(const VectorXcd& x, const HamiltonianParams& params, Real C) {
    const int M = static_cast<int>(x.size());
    VectorXcd out(M);
    for (int j = 0; j < M; ++j) {
        Complex v = params.onsite[j] * x[j] + C * std::norm(x[j]) * x[j];
        if (j + 1 < M) v -= params.hopping * x[j + 1];
        if (j > 0) v -= params.hopping * x[j - 1];
        if (params.periodic && M > 2) {
            if (j == 0) v -= params.hopping * x[M - 1];
            if (j == M - 1) v -= params.hopping * x[0];
        }
        out[j] = Complex(0.0, -1.0) * v;
    }
    return out;
}

inline VectorXcd gpe_rhs(const VectorXcd& x, const HamiltonianParams& params, int N) {
    return gpe_rhs(x, params, params.interaction * N);
}

struct OdeOptions {
    Real rel_tol = 1e-12;
    Real abs_tol = 1e-14;
    Real dt_init = 1e-3;
    Real dt_min = 1e-12;
};

namespace detail {

/// Dormand-Prince 5(4) step on a generic complex-vector ODE.
template <class Rhs>
bool dp54_step(const Rhs& f, VectorXcd& y, Real& t, Real& dt, Real direction,
               const OdeOptions& opt) {
    static const Real a21 = 1.0 / 5;
    static const Real a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const Real a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const Real a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
    static const Real a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const Real b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const Real e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                      e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                      e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    const Real h = direction * dt;
    const VectorXcd k1 = f(y);
    const VectorXcd k2 = f(y + h * a21 * k1);
    const VectorXcd k3 = f(y + h * (a31 * k1 + a32 * k2));
    const VectorXcd k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const VectorXcd k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const VectorXcd k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const VectorXcd y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const VectorXcd k7 = f(y5);
    const VectorXcd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    Real acc = 0.0;
    for (int i = 0; i < y.size(); ++i) {
        const Real sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
        const Real r = std::abs(err[i]) / sc;
        acc += r * r;
    }
    const Real en = std::sqrt(acc / std::max<Real>(1, y.size()));
    if (en <= 1.0) {
        y = y5;
        t += h;
        dt *= std::min(5.0, std::max(0.2, 0.9 * std::pow(en > 1e-30 ? en : 1e-30, -0.2)));
        return true;
    }
    dt *= std::max(0.2, 0.9 * std::pow(en, -0.2));
    if (dt < opt.dt_min) throw NumericalError("adaptive step underflow: local error will not meet tolerance");
    return false;
}

template <class Rhs>
VectorXcd dp54_to(const Rhs& f, VectorXcd y, Real t_final, const OdeOptions& opt) {
    if (t_final == 0) return y;
    const Real dir = t_final > 0 ? 1.0 : -1.0;
    Real t = 0.0;
    Real dt = std::min(opt.dt_init, std::abs(t_final));
    long guard = 0;
    while (dir * (t_final - t) > 1e-15 * std::abs(t_final)) {
        dt = std::min(dt, std::abs(t_final - t));
        dp54_step(f, y, t, dt, dir, opt);
        if (++guard > 100000000L) throw NumericalError("step budget exceeded");
    }
    return y;
}

}  // namespace detail

/// Adaptive endpoint integration of the GPE.
inline VectorXcd gpe_evolve(const VectorXcd& x0, const HamiltonianParams& params, Real C,
                            Real t_final, const OdeOptions& opt = {}) {
    return detail::dp54_to([&](const VectorXcd& y) { return gpe_rhs(y, params, C); }, x0,
                           t_final, opt);
}

/// Sampled GPE trajectory at multiples of dt_sample (interaction U N).
inline std::vector<std::pair<Real, VectorXcd>> integrate_gpe(const VectorXcd& x0,
                                                             const HamiltonianParams& params,
                                                             int N, Real t_final, Real dt_sample,
                                                             const OdeOptions& opt = {}) {
    if (dt_sample <= 0) throw std::invalid_argument("integrate_gpe: dt must be positive");
    std::vector<std::pair<Real, VectorXcd>> traj;
    const Real C = params.interaction * N;
    VectorXcd y = x0;
    Real t = 0.0;
    traj.emplace_back(t, y);
    const int nsamp = static_cast<int>(std::ceil(std::abs(t_final) / dt_sample));
    const Real dir = t_final >= 0 ? 1.0 : -1.0;
    for (int s = 1; s <= nsamp; ++s) {
        const Real target = dir * std::min<Real>(s * dt_sample, std::abs(t_final));
        y = gpe_evolve(y, params, C, target - t, opt);
        t = target;
        traj.emplace_back(t, y);
    }
    return traj;
}

/// Hamilton equations in the reduced (p, q) chart:
/// qdot = dH/dp, pdot = -dH/dq. State layout: (p_2..p_M, q_2..q_M).
inline VectorXd hamilton_rhs_pq(const VectorXd& state, const HamiltonianParams& params, int N) {
    const int M = params.sites();
    VectorXd p(M), q(M);
    p[0] = 1.0 - state.head(M - 1).sum();
    p.tail(M - 1) = state.head(M - 1);
    q[0] = 0.0;
    q.tail(M - 1) = state.tail(M - 1);
    VectorXd dHdp, dHdq;
    hamiltonian_gradients(p, q, params, N, dHdp, dHdq);
    VectorXd out(2 * (M - 1));
    out.head(M - 1) = -dHdq;
    out.tail(M - 1) = dHdp;
    return out;
}

/// Weighted phase-space points advanced along the first-order flow.
struct TrajectoryEnsemble {
    std::vector<PhasePoint> points;
    VectorXd weights;
    Real time = 0.0;

    int size() const { return static_cast<int>(points.size()); }
};

inline TrajectoryEnsemble ensemble_from_points(std::vector<PhasePoint> pts, Real t = 0.0) {
    TrajectoryEnsemble e;
    e.weights = VectorXd::Constant(pts.size(), 1.0 / pts.size());
    e.points = std::move(pts);
    e.time = t;
    return e;
}

/// Advance every point along the GPE characteristics (x chart, always away
/// from the p_1 = 0 coordinate singularity). Weights are carried unchanged.
/// kind selects the interaction prefactor: U N for Q/Liouville, U (N + M)
/// for the P flow.
inline TrajectoryEnsemble ensemble_propagate(const TrajectoryEnsemble& ens,
                                             const HamiltonianParams& params, int N, Real t_final,
                                             GeneratorKind kind = GeneratorKind::Liouville,
                                             const OdeOptions& opt = {}) {
    const Real C = kind == GeneratorKind::P ? params.interaction * (N + params.sites())
                                            : params.interaction * N;
    TrajectoryEnsemble out = ens;
    out.time = ens.time + t_final;
    parallel_for(ens.size(), [&](std::ptrdiff_t i) {
        const VectorXcd x0 = pq_to_x(ens.points[i]).x;
        out.points[i] = x_to_pq(AmplitudeParams{gpe_evolve(x0, params, C, t_final, opt)});
    });
    return out;
}

struct PdeOptions {
    Real dt = 0.0;          // 0: choose from the CFL bound
    Real cfl = 0.5;
    bool project = true;    // per-step physical-subspace projection
    int filter_kq = -1;     // optional extra sharp cutoffs (off by default)
    int filter_kp = -1;
    Real blowup_factor = 10.0;
    long max_steps = 2000000;
};

/// Method-of-lines RK4 integration of a real-time grid generator. The
/// second-order (full) operator is anti-diffusive outside the span of
/// degree-N Husimi profiles, so the physical-subspace projection is applied
/// after every step by default; it also pins the grid mass exactly.
inline PhaseGrid2 evolve_pde(const PhaseGrid2& grid0, const GeneratorSpec& spec, Real t_final,
                             const PdeOptions& opts = {}) {
    PhaseGrid2 out = grid0;
    if (t_final == 0.0) return out;
    const GridOperator op = make_realtime_operator(grid0, spec);
    const GridStencils st(grid0.np, grid0.hp);
    PhysicalSubspace subspace(grid0, opts.project ? spec.particles : 0);
    Real dt = opts.dt > 0 ? opts.dt : opts.cfl / op.coefficient_scale(grid0.hp, grid0.hq);
    const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(t_final) / dt)));
    if (nsteps > opts.max_steps) throw NumericalError("evolve_pde: step budget exceeded");
    const Real h = t_final / nsteps;
    const Real limit = opts.blowup_factor * grid0.values.cwiseAbs().maxCoeff();
    MatrixXd& G = out.values;
    for (long s = 0; s < nsteps; ++s) {
        const MatrixXd k1 = op.apply(st, G);
        const MatrixXd k2 = op.apply(st, G + 0.5 * h * k1);
        const MatrixXd k3 = op.apply(st, G + 0.5 * h * k2);
        const MatrixXd k4 = op.apply(st, G + h * k3);
        G += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (opts.project) subspace.project(G);
        if (opts.filter_kq >= 0 || opts.filter_kp >= 0)
            spectral_filter(G, opts.filter_kq, opts.filter_kp);
        if (G.cwiseAbs().maxCoeff() > limit)
            throw NumericalError("evolve_pde: instability detected (field grew past limit)");
    }
    return out;
}

}  // namespace bhps
