// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bhps/coherent.hpp"
#include "bhps/fock.hpp"
#include "bhps/grid.hpp"
#include "bhps/thermo.hpp"

using namespace bhps;

namespace {

HamiltonianParams make_params(std::initializer_list<Real> eps, Real Delta, Real U) {
    HamiltonianParams p;
    p.onsite = VectorXd::Zero(static_cast<int>(eps.size()));
    int i = 0;
    for (Real e : eps) p.onsite[i++] = e;
    p.hopping = Delta;
    p.interaction = U;
    return p;
}

}  // namespace

TEST_CASE("evolve_bloch: beta = 0 returns the input unchanged") {
    PhaseGrid2 g(64, 32);
    g.values.setConstant(1.0);
    BlochSpec spec{BlochKind::Q, make_params({0, 0.4}, 0.8, 0.1), 6};
    const PhaseGrid2 out = evolve_bloch(g, spec, 0.0);
    CHECK((out.values - g.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(evolve_bloch(g, spec, -0.1), std::invalid_argument);
}

TEST_CASE("evolve_bloch matches husimi(gibbs) for Delta = U = 0") {
    const int N = 10;
    const Real eps2 = 0.8, beta = 1.0;
    const auto params = make_params({0, eps2}, 0.0, 0.0);
    PhaseGrid2 g(256, 256);
    g.values.setConstant(1.0);  // Q of the identity operator
    BlochSpec spec{BlochKind::Q, params, N};
    const PhaseGrid2 out = evolve_bloch(g, spec, beta);

    // closed form: (p1 + p2 e^{-beta eps2})^N, cross-checked against gibbs()
    FockBasis basis(2, N);
    const PhaseGrid2 oracle = husimi_grid(gibbs(build_hamiltonian(params, basis), beta), basis,
                                          PhaseGrid2(256, 256));
    CHECK((out.values - oracle.values).norm() / oracle.values.norm() < 1e-2);
    for (int i = 0; i < 256; i += 61) {
        const Real closed = std::pow(1.0 - g.p[i] + g.p[i] * std::exp(-beta * eps2), N);
        CHECK(oracle.values(i, 3) == doctest::Approx(closed).epsilon(1e-10));
        CHECK(out.values(i, 3) == doctest::Approx(closed).epsilon(1e-4));
    }
    // Husimi positivity within tolerance
    CHECK(out.values.minCoeff() > -1e-10);
}

TEST_CASE("evolve_bloch concentrates at the mean-field ground state") {
    const int N = 8;
    const auto params = make_params({0, 0}, 1.0, 0.0);
    PhaseGrid2 g(128, 128);
    g.values.setConstant(1.0);
    BlochSpec spec{BlochKind::Q, params, N};
    const Real beta = 1.0;
    const PhaseGrid2 out = evolve_bloch(g, spec, beta);

    FockBasis basis(2, N);
    const PhaseGrid2 oracle = husimi_grid(gibbs(build_hamiltonian(params, basis), beta), basis,
                                          PhaseGrid2(128, 128));
    Eigen::Index ia, ja, ib, jb;
    out.values.maxCoeff(&ia, &ja);
    oracle.values.maxCoeff(&ib, &jb);
    CHECK(std::abs(static_cast<int>(ia - ib)) <= 1);
    const int dq = std::abs(static_cast<int>(ja - jb));
    CHECK(std::min(dq, 128 - dq) <= 1);
    // mean-field ground state: p2 = 1/2, q2 = argmin of the classical energy
    CHECK(std::abs(out.p[ia] - 0.5) < 0.02);
    VectorXd pmin(2), qmin(2);
    pmin << 0.5, 0.5;
    qmin << 0.0, out.q[ja];
    VectorXd qz(2);
    qz << 0.0, 0.0;
    CHECK(hamiltonian_function(pmin, qmin, params, N) <=
          hamiltonian_function(pmin, qz, params, N) + 1e-9);
}

TEST_CASE("bloch Q/P operators differ exactly as the ordering demands") {
    // at Delta = 0, U = 0:
    // B_P - B_Q = (-M sum eps_k p_k + sum eps_k)
    //             + 2 (eps_m - sum eps_k p_k) p_m d/dp_m   (m = 2..M)
    const auto params = make_params({0.3, -0.5}, 0.0, 0.0);
    const int N = 7, M = 2;
    PhaseGrid2 g(128, 32);
    MatrixXd dfdp(g.np, g.nq);
    for (int i = 0; i < g.np; ++i)
        for (int j = 0; j < g.nq; ++j) {
            g.values(i, j) = 1.0 + 0.3 * std::sin(g.q[j]) * std::sin(kPi * g.p[i]);
            dfdp(i, j) = 0.3 * kPi * std::sin(g.q[j]) * std::cos(kPi * g.p[i]);
        }
    const PhaseGrid2 bq = apply_bloch(g, BlochSpec{BlochKind::Q, params, N});
    const PhaseGrid2 bp = apply_bloch(g, BlochSpec{BlochKind::P, params, N});
    Real worst = 0;
    for (int i = 0; i < g.np; ++i)
        for (int j = 0; j < g.nq; ++j) {
            const Real p2 = g.p[i];
            const Real epk = params.onsite[0] * (1 - p2) + params.onsite[1] * p2;
            const Real expected = (-M * epk + params.onsite.sum()) * g.values(i, j) +
                                  2 * (params.onsite[1] - epk) * p2 * dfdp(i, j);
            worst = std::max(worst, std::abs(bp.values(i, j) - bq.values(i, j) - expected));
        }
    CHECK(worst < 1e-6);
}

TEST_CASE("delta-like P at the ground state: beta flow lowers the classical energy") {
    const int N = 12;
    const auto params = make_params({0, 0}, 1.0, 0.0);
    PhaseGrid2 g(128, 128);
    // narrow positive bump at the mean-field ground state (p2 = 1/2, q2 = 0)
    for (int i = 0; i < g.np; ++i)
        for (int j = 0; j < g.nq; ++j) {
            const Real dp = g.p[i] - 0.5;
            const Real dq = std::remainder(g.q[j], 2 * kPi);
            g.values(i, j) = std::exp(-(dp * dp) / 0.02 - (dq * dq) / 0.3);
        }
    auto energy = [&](const PhaseGrid2& grid) {
        Real num = 0, den = 0;
        VectorXd p(2), q(2);
        for (int i = 0; i < grid.np; ++i)
            for (int j = 0; j < grid.nq; ++j) {
                p << 1 - grid.p[i], grid.p[i];
                q << 0, grid.q[j];
                num += hamiltonian_function(p, q, params, N) * grid.values(i, j);
                den += grid.values(i, j);
            }
        return num / den;
    };
    BlochSpec spec{BlochKind::P, params, N};
    const PhaseGrid2 out = evolve_bloch(g, spec, 0.05);
    CHECK(energy(out) < energy(g));
}

TEST_CASE("classical Bloch flow is the exact multiplicative solution") {
    const auto params = make_params({0, 0.3}, 0.7, 0.2);
    const int N = 9;
    PhaseGrid2 g(64, 64);
    g.values.setConstant(1.0);
    BlochSpec spec{BlochKind::Classical, params, N};
    const PhaseGrid2 out = evolve_bloch(g, spec, 0.8);
    VectorXd p(2), q(2);
    for (int i = 0; i < 64; i += 13)
        for (int j = 0; j < 64; j += 17) {
            p << 1 - g.p[i], g.p[i];
            q << 0, g.q[j];
            CHECK(out.values(i, j) ==
                  doctest::Approx(std::exp(-0.8 * N * hamiltonian_function(p, q, params, N)))
                      .epsilon(1e-12));
        }
}

TEST_CASE("stiffness monitor aborts on extreme dynamic range") {
    const int N = 24;
    const auto params = make_params({0, 0}, 1.0, 0.0);
    PhaseGrid2 g(64, 64);
    g.values.setConstant(1.0);
    BlochSpec spec{BlochKind::Q, params, N};
    BlochEvolveOptions opts;
    opts.stiffness_ratio = 1e6;  // tight bound to trigger the abort
    CHECK_THROWS_AS(evolve_bloch(g, spec, 3.0, opts), NumericalError);
}

TEST_CASE("width report sits near the coherent-state width at low temperature") {
    const int N = 16;
    const auto params = make_params({0, 0}, 1.0, 0.0);
    FockBasis basis(2, N);
    const PhaseGrid2 Q = husimi_grid(gibbs(build_hamiltonian(params, basis), 2.0), basis,
                                     PhaseGrid2(128, 128));
    const WidthReport rep = q_width_report(Q, N);
    CHECK(std::abs(rep.p_argmax - 0.5) < 0.02);
    CHECK(rep.p_stddev > 0.5 * rep.coherent_width);
    CHECK(rep.p_stddev < 3.0 * rep.coherent_width);
}

TEST_CASE("Bloch residual for onsite-only Hamiltonian converges at 4th order") {
    const int N = 8;
    const auto params = make_params({0, 0.8}, 0.0, 0.0);
    FockBasis basis(2, N);
    const SparseReal H = build_hamiltonian(params, basis);
    auto residual = [&](int n) {
        PhaseGrid2 geometry(n, n);
        auto Qat = [&](Real b) { return husimi_grid(gibbs(H, b), basis, geometry); };
        const Real b0 = 0.5, fd = 1e-5;
        const MatrixXd dQdb = (Qat(b0 + fd).values - Qat(b0 - fd).values) / (2 * fd);
        BlochSpec spec{BlochKind::Q, params, N};
        const GridStencils st(n, geometry.hp);
        const MatrixXd BQ = make_bloch_operator(geometry, spec).apply(st, Qat(b0).values);
        Real num = 0, den = 0;
        for (int i = 0; i < n; ++i) {
            if (geometry.p[i] < 1.0 / 16 || geometry.p[i] > 15.0 / 16) continue;
            num += (BQ - dQdb).row(i).squaredNorm();
            den += dQdb.row(i).squaredNorm();
        }
        return std::sqrt(num / den);
    };
    const Real r32 = residual(32);
    const Real r64 = residual(64);
    CHECK(std::log2(r32 / r64) > 3.0);
    CHECK(r64 < 1e-4);
}

TEST_CASE("zero Hamiltonian gives a vanishing Bloch-P field too") {
    PhaseGrid2 g(64, 32);
    for (int i = 0; i < g.np; ++i)
        for (int j = 0; j < g.nq; ++j)
            g.values(i, j) = 1.0 + 0.2 * std::sin(g.q[j]) * std::sin(kPi * g.p[i]);
    BlochSpec spec{BlochKind::P, make_params({0, 0}, 0.0, 0.0), 5};
    CHECK(apply_bloch(g, spec).values.cwiseAbs().maxCoeff() < 1e-12);
}
