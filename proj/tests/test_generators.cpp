// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "bhps/coherent.hpp"
#include "bhps/fock.hpp"
#include "bhps/generators.hpp"
#include "bhps/grid.hpp"
#include "bhps/rng.hpp"

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

using ScalarField = std::function<Real(const VectorXd&, const VectorXd&)>;  // reduced coords

/// 4th-order finite-difference derivative bundle of f at reduced (p, q).
FieldDerivs numeric_derivs(const ScalarField& f, const VectorXd& p, const VectorXd& q, Real h) {
    const int r = static_cast<int>(p.size());
    FieldDerivs d(r);
    d.value = f(p, q);
    auto shift = [&](int i, Real sp, int j, Real sq) {
        VectorXd pp = p, qq = q;
        if (i >= 0) pp[i] += sp;
        if (j >= 0) qq[j] += sq;
        return f(pp, qq);
    };
    auto d1 = [&](int i, bool inp) {
        auto g = [&](Real s) {
            return inp ? shift(i, s * h, -1, 0) : shift(-1, 0, i, s * h);
        };
        return (-g(2) + 8 * g(1) - 8 * g(-1) + g(-2)) / (12 * h);
    };
    auto d2same = [&](int i, bool inp) {
        auto g = [&](Real s) {
            return inp ? shift(i, s * h, -1, 0) : shift(-1, 0, i, s * h);
        };
        return (-g(2) + 16 * g(1) - 30 * g(0) + 16 * g(-1) - g(-2)) / (12 * h * h);
    };
    for (int i = 0; i < r; ++i) {
        d.dp[i] = d1(i, true);
        d.dq[i] = d1(i, false);
        d.dpp(i, i) = d2same(i, true);
        d.dqq(i, i) = d2same(i, false);
    }
    auto cross = [&](auto&& g) {
        auto inner = [&](Real si) {
            return (-g(si, 2.0) + 8 * g(si, 1.0) - 8 * g(si, -1.0) + g(si, -2.0)) / (12 * h);
        };
        return (-inner(2) + 8 * inner(1) - 8 * inner(-1) + inner(-2)) / (12 * h);
    };
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            d.dpq(i, j) = cross([&](Real si, Real sj) {
                VectorXd pp = p, qq = q;
                pp[i] += si * h;
                qq[j] += sj * h;
                return f(pp, qq);
            });
            if (j > i) {
                d.dpp(i, j) = d.dpp(j, i) = cross([&](Real si, Real sj) {
                    VectorXd pp = p;
                    pp[i] += si * h;
                    pp[j] += sj * h;
                    return f(pp, q);
                });
                d.dqq(i, j) = d.dqq(j, i) = cross([&](Real si, Real sj) {
                    VectorXd qq = q;
                    qq[i] += si * h;
                    qq[j] += sj * h;
                    return f(p, qq);
                });
            }
        }
    return d;
}

VectorXd full_p(const VectorXd& reduced) {
    VectorXd p(reduced.size() + 1);
    p[0] = 1.0 - reduced.sum();
    p.tail(reduced.size()) = reduced;
    return p;
}

VectorXd full_q(const VectorXd& reduced) {
    VectorXd q(reduced.size() + 1);
    q[0] = 0.0;
    q.tail(reduced.size()) = reduced;
    return q;
}

AmplitudeParams chart_x(const VectorXd& pr, const VectorXd& qr) {
    PhasePoint pt;
    pt.p = full_p(pr);
    pt.q = full_q(qr);
    return pq_to_x(pt);
}

DensityMatrix random_density(int d, std::uint64_t seed) {
    SplitMix64 g(seed);
    MatrixXcd A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = Complex(g.normal(), g.normal());
    DensityMatrix rho = A * A.adjoint();
    return rho / rho.trace().real();
}

/// Worst relative pointwise residual of a generator against the exact
/// Fock-side derivative over a few random interior points.
Real oracle_residual(int M, int N, const HamiltonianParams& params, bool bloch,
                     GeneratorKind kind_or_blochQ, std::uint64_t seed) {
    FockBasis basis(M, N);
    const SparseReal H = build_hamiltonian(params, basis);
    const MatrixXcd Hc = MatrixXd(H).cast<Complex>();
    DensityMatrix rho = random_density(basis.size(), seed);
    DensityMatrix rho_t, drho;
    if (!bloch) {
        const SpectralPropagator prop(H);
        MatrixXcd U = MatrixXcd::Zero(basis.size(), basis.size());
        for (int c = 0; c < basis.size(); ++c) U.col(c) = prop.apply(VectorXcd::Unit(basis.size(), c), 0.37);
        rho_t = U * rho * U.adjoint();
        drho = Complex(0, -1) * (Hc * rho_t - rho_t * Hc);
    } else {
        const DensityMatrix E = gibbs(H, 0.2);  // e^{-0.4 H / 2}
        rho_t = E * rho * E;
        drho = -0.5 * (rho_t * Hc + Hc * rho_t);
    }
    ScalarField Qf = [&](const VectorXd& pr, const VectorXd& qr) {
        return husimi(rho_t, chart_x(pr, qr), basis);
    };
    SplitMix64 g(seed + 1);
    Real worst = 0;
    for (int trial = 0; trial < 5; ++trial) {
        VectorXd pr(M - 1), qr(M - 1);
        do {
            for (int i = 0; i < M - 1; ++i) pr[i] = 0.15 + 0.55 * g.uniform();
        } while (pr.sum() > 0.85);
        for (int i = 0; i < M - 1; ++i) qr[i] = 2 * kPi * g.uniform();
        const FieldDerivs fd = numeric_derivs(Qf, pr, qr, 2e-3);
        PointOperator op(M - 1);
        if (!bloch) {
            GeneratorSpec spec{kind_or_blochQ, EvolutionOrder::Full, params, N};
            op = realtime_coefficients(spec, full_p(pr), full_q(qr));
        } else {
            BlochSpec spec{kind_or_blochQ == GeneratorKind::Q ? BlochKind::Q : BlochKind::P,
                           params, N};
            op = bloch_coefficients(spec, full_p(pr), full_q(qr));
        }
        const Real lhs = apply_point_operator(op, fd);
        const FockVector c = coherent_fock(chart_x(pr, qr), basis);
        const Real rhs = std::real(c.dot(drho * c));
        worst = std::max(worst, std::abs(lhs - rhs) / (std::abs(rhs) + 1e-12));
    }
    return worst;
}

}  // namespace

TEST_CASE("hamiltonian function examples") {
    const auto params = make_params({0, 0}, 1.0, 0.1);
    const int N = 10;
    PhasePoint pt;
    pt.p = VectorXd::Zero(2);
    pt.q = VectorXd::Zero(2);
    pt.p << 1.0, 0.0;
    CHECK(hamiltonian_function(pt, params, N) == doctest::Approx(0.5 * 0.1 * N));
    pt.p << 0.5, 0.5;
    CHECK(hamiltonian_function(pt, params, N) ==
          doctest::Approx(-1.0 + 0.1 * N / 4.0).epsilon(1e-14));
}

TEST_CASE("mean-field energy equals Fock expectation up to the exact U/2 sum p^2 term") {
    const auto params = make_params({0.2, -0.3, 0.4}, 0.8, 0.3);
    for (int N : {4, 8, 16}) {
        FockBasis basis(3, N);
        const SparseReal H = build_hamiltonian(params, basis);
        SplitMix64 g(N);
        const AmplitudeParams a = sample_amplitude(3, g);
        const PhasePoint pt = x_to_pq(a);
        const FockVector v = coherent_fock(a, basis);
        const Real eH = std::real(v.dot(MatrixXd(H).cast<Complex>() * v)) / N;
        const Real hcl = hamiltonian_function(pt, params, N);
        const Real gap = -0.5 * params.interaction * pt.p.squaredNorm();
        CHECK(std::abs(eH - hcl - gap) < 1e-12 * N);
    }
}

TEST_CASE("real-time Q generator matches the exact Fock derivative (M=2,3)") {
    CHECK(oracle_residual(2, 6, make_params({0, 0.5}, 1.0, 0.3), false, GeneratorKind::Q, 3) <
          3e-5);
    CHECK(oracle_residual(3, 4, make_params({0, 0.5, -0.3}, 0.7, 0.25), false, GeneratorKind::Q,
                          4) < 3e-4);
}

TEST_CASE("Bloch Q generator matches the exact Fock derivative (M=2,3)") {
    CHECK(oracle_residual(2, 6, make_params({0, 0.5}, 1.0, 0.3), true, GeneratorKind::Q, 5) <
          3e-5);
    CHECK(oracle_residual(3, 4, make_params({0, 0.5, -0.3}, 0.7, 0.25), true, GeneratorKind::Q,
                          6) < 3e-4);
}

TEST_CASE("first-order Q equals the Poisson-bracket Liouville operator") {
    const auto params = make_params({0, 0.4, -0.2}, 0.9, 0.35);
    SplitMix64 g(8);
    for (int trial = 0; trial < 20; ++trial) {
        VectorXd pr(2), qr(2);
        do {
            pr << 0.05 + 0.8 * g.uniform(), 0.05 + 0.8 * g.uniform();
        } while (pr.sum() > 0.9);
        qr << 2 * kPi * g.uniform(), 2 * kPi * g.uniform();
        GeneratorSpec spec{GeneratorKind::Q, EvolutionOrder::FirstOrder, params, 12};
        const PointOperator a = realtime_coefficients(spec, full_p(pr), full_q(qr));
        const PointOperator b = liouville_coefficients(params, 12, full_p(pr), full_q(qr));
        CHECK((a.cp - b.cp).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((a.cq - b.cq).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(a.cpq.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("P and Q generators are identical operators at U = 0") {
    const auto params = make_params({0, 0.4, -0.2}, 0.9, 0.0);
    SplitMix64 g(12);
    for (int trial = 0; trial < 20; ++trial) {
        VectorXd pr(2), qr(2);
        do {
            pr << 0.05 + 0.8 * g.uniform(), 0.05 + 0.8 * g.uniform();
        } while (pr.sum() > 0.9);
        qr << 2 * kPi * g.uniform(), 2 * kPi * g.uniform();
        GeneratorSpec sq{GeneratorKind::Q, EvolutionOrder::Full, params, 9};
        GeneratorSpec sp{GeneratorKind::P, EvolutionOrder::Full, params, 9};
        const PointOperator a = realtime_coefficients(sq, full_p(pr), full_q(qr));
        const PointOperator b = realtime_coefficients(sp, full_p(pr), full_q(qr));
        CHECK((a.cp - b.cp).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((a.cq - b.cq).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((a.cpq - b.cpq).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("adjoint identities on the grid: L_P = -(L_Q)^T and B_P = (B_Q)^T") {
    const auto params = make_params({0, 0.5}, 0.8, 0.4);
    const int N = 7;
    PhaseGrid2 gf(128, 128), gg(128, 128);
    // smooth test fields vanishing at the p edges
    for (int i = 0; i < gf.np; ++i)
        for (int j = 0; j < gf.nq; ++j) {
            const Real bump = std::pow(std::sin(kPi * gf.p[i]), 6);
            gf.values(i, j) = bump * (0.3 + std::sin(gf.q[j] + 0.4) + 0.2 * std::cos(2 * gf.q[j]));
            gg.values(i, j) =
                bump * (0.5 + std::cos(gf.q[j] - 0.1) + 0.1 * std::sin(3 * gf.q[j])) *
                std::sin(2.1 * gf.p[i]);
        }
    auto inner = [&](const MatrixXd& A, const MatrixXd& B) {
        return (A.array() * B.array()).sum() * gf.hp * gf.hq;
    };
    GeneratorSpec sq{GeneratorKind::Q, EvolutionOrder::Full, params, N};
    GeneratorSpec sp{GeneratorKind::P, EvolutionOrder::Full, params, N};
    const PhaseGrid2 Lqf = apply_generator(gf, sq);
    const PhaseGrid2 Lpg = apply_generator(gg, sp);
    const Real lhs = inner(Lqf.values, gg.values);
    const Real rhs = -inner(gf.values, Lpg.values);
    CHECK(std::abs(lhs - rhs) < 2e-5 * (std::abs(lhs) + 1.0));

    BlochSpec bq{BlochKind::Q, params, N};
    BlochSpec bp{BlochKind::P, params, N};
    const PhaseGrid2 Bqf = apply_bloch(gf, bq);
    const PhaseGrid2 Bpg = apply_bloch(gg, bp);
    const Real bl = inner(Bqf.values, gg.values);
    const Real br = inner(gf.values, Bpg.values);
    CHECK(std::abs(bl - br) < 2e-5 * (std::abs(bl) + 1.0));
}

TEST_CASE("N = 1 interaction terms annihilate the physical function space") {
    // H's interaction term vanishes identically for one particle, so the
    // U-dependence of each generator must vanish on degree-1 Husimi profiles.
    const auto p_u = make_params({0.1, -0.2}, 0.7, 0.9);
    const auto p_0 = make_params({0.1, -0.2}, 0.7, 0.0);
    std::vector<ScalarField> basis_funcs = {
        [](const VectorXd& pr, const VectorXd&) { return pr[0]; },
        [](const VectorXd& pr, const VectorXd& qr) {
            return std::sqrt((1 - pr[0]) * pr[0]) * std::cos(qr[0]);
        },
        [](const VectorXd& pr, const VectorXd& qr) {
            return std::sqrt((1 - pr[0]) * pr[0]) * std::sin(qr[0]);
        },
        [](const VectorXd&, const VectorXd&) { return 1.0; }};
    SplitMix64 g(44);
    for (int trial = 0; trial < 4; ++trial) {
        VectorXd pr(1), qr(1);
        pr << 0.2 + 0.6 * g.uniform();
        qr << 2 * kPi * g.uniform();
        for (const auto& f : basis_funcs) {
            const FieldDerivs fd = numeric_derivs(f, pr, qr, 1e-3);
            for (bool bloch : {false, true}) {
                Real with_u, without_u;
                if (!bloch) {
                    GeneratorSpec su{GeneratorKind::Q, EvolutionOrder::Full, p_u, 1};
                    GeneratorSpec s0{GeneratorKind::Q, EvolutionOrder::Full, p_0, 1};
                    with_u = apply_point_operator(realtime_coefficients(su, full_p(pr), full_q(qr)), fd);
                    without_u = apply_point_operator(realtime_coefficients(s0, full_p(pr), full_q(qr)), fd);
                } else {
                    BlochSpec su{BlochKind::Q, p_u, 1};
                    BlochSpec s0{BlochKind::Q, p_0, 1};
                    with_u = apply_point_operator(bloch_coefficients(su, full_p(pr), full_q(qr)), fd);
                    without_u = apply_point_operator(bloch_coefficients(s0, full_p(pr), full_q(qr)), fd);
                }
                CHECK(std::abs(with_u - without_u) < 1e-7);
            }
        }
    }
}

TEST_CASE("classical_gibbs basics") {
    const auto params = make_params({0, 0}, 0.0, 0.5);
    PhasePoint pt;
    pt.p = VectorXd::Zero(2);
    pt.q = VectorXd::Zero(2);
    pt.p << 0.3, 0.7;
    CHECK(classical_gibbs(pt, 0.0, params, 8) == 1.0);
    // log-derivative equals -N H
    const Real h = 1e-6, beta = 0.4;
    const Real ld = (std::log(classical_gibbs(pt, beta + h, params, 8)) -
                     std::log(classical_gibbs(pt, beta - h, params, 8))) /
                    (2 * h);
    CHECK(ld == doctest::Approx(-8 * hamiltonian_function(pt, params, 8)).epsilon(1e-8));
    CHECK_THROWS_AS(classical_gibbs(pt, -1.0, params, 8), std::invalid_argument);
    // with Delta = eps = 0 the weight is maximal at uniform p
    PhasePoint uni;
    uni.p = VectorXd::Constant(2, 0.5);
    uni.q = VectorXd::Zero(2);
    CHECK(classical_gibbs(uni, 1.0, params, 8) > classical_gibbs(pt, 1.0, params, 8));
}

TEST_CASE("generators reject the periodic wrap") {
    auto params = make_params({0, 0, 0}, 1.0, 0.1);
    params.periodic = true;
    GeneratorSpec spec{GeneratorKind::Q, EvolutionOrder::Full, params, 5};
    VectorXd p(3), q(3);
    p << 0.4, 0.3, 0.3;
    q << 0, 1.0, 2.0;
    CHECK_THROWS_AS(realtime_coefficients(spec, p, q), std::invalid_argument);
}
