// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>

#include "bhps/coherent.hpp"
#include "bhps/fock.hpp"
#include "bhps/rng.hpp"

using namespace bhps;

namespace {

AmplitudeParams random_amplitude(int M, std::uint64_t seed) {
    SplitMix64 g(seed);
    return sample_amplitude(M, g);
}

}  // namespace

TEST_CASE("y_to_x examples") {
    CosetParams c0;
    c0.y = VectorXcd::Zero(2);
    const AmplitudeParams a0 = y_to_x(c0);
    CHECK(std::abs(a0.x[0] - Complex(1, 0)) < 1e-15);
    CHECK(std::abs(a0.x[1]) < 1e-15);
    CHECK(std::abs(a0.x[2]) < 1e-15);

    CosetParams c1;
    c1.y = VectorXcd::Zero(1);
    c1.y[0] = kPi / 2;
    const AmplitudeParams a1 = y_to_x(c1);
    CHECK(std::abs(a1.x[0]) < 1e-15);
    CHECK(std::abs(a1.x[1] - Complex(1, 0)) < 1e-12);

    c1.y[0] = kPi / 4;
    const AmplitudeParams a2 = y_to_x(c1);
    CHECK(std::abs(a2.x[0] - Complex(std::sqrt(0.5), 0)) < 1e-12);
    CHECK(std::abs(a2.x[1] - Complex(std::sqrt(0.5), 0)) < 1e-12);

    // smooth small-norm limit
    c1.y[0] = 1e-10;
    const AmplitudeParams a3 = y_to_x(c1);
    CHECK(std::abs(a3.x[1] - Complex(1e-10, 0)) < 1e-20);
    CHECK(std::abs(a3.x.norm() - 1.0) < 1e-14);
}

TEST_CASE("x <-> pq examples and round trip") {
    AmplitudeParams a;
    a.x = VectorXcd::Zero(2);
    a.x << Complex(std::sqrt(0.5), 0), std::sqrt(0.5) * std::exp(Complex(0, -kPi / 3));
    const PhasePoint pt = x_to_pq(a);
    CHECK(pt.p[0] == doctest::Approx(0.5));
    CHECK(pt.p[1] == doctest::Approx(0.5));
    CHECK(pt.q[0] == 0.0);
    CHECK(pt.q[1] == doctest::Approx(kPi / 3));

    // degenerate phase flagged, set to zero
    a.x << Complex(1, 0), Complex(0, 0);
    const PhasePoint d = x_to_pq(a);
    CHECK(d.q[1] == 0.0);
    CHECK(d.degenerate[1] == 1);

    // property: round trip on random points
    Real worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const AmplitudeParams r = random_amplitude(3, 1000 + i);
        const AmplitudeParams back = pq_to_x(x_to_pq(r));
        worst = std::max(worst, (r.x - back.x).norm());
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("coherent_fock reference state and linear case") {
    FockBasis b(3, 4);
    AmplitudeParams ref;
    ref.x = VectorXcd::Zero(3);
    ref.x[0] = 1.0;
    const FockVector v = coherent_fock(ref, b);
    VectorXi occ(3);
    occ << 4, 0, 0;
    CHECK(std::abs(v[b.index(occ)] - Complex(1, 0)) < 1e-14);
    CHECK(std::abs(v.norm() - 1.0) < 1e-14);

    FockBasis b21(2, 1);
    AmplitudeParams ab = random_amplitude(2, 7);
    const FockVector w = coherent_fock(ab, b21);
    VectorXi o(2);
    o << 1, 0;
    CHECK(std::abs(w[b21.index(o)] - ab.x[0]) < 1e-14);
    o << 0, 1;
    CHECK(std::abs(w[b21.index(o)] - ab.x[1]) < 1e-14);
}

TEST_CASE("coherent_fock norm and multinomial stability up to N = 60") {
    FockBasis b(3, 60);
    const AmplitudeParams a = random_amplitude(3, 99);
    const FockVector v = coherent_fock(a, b);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
}

TEST_CASE("overlap closed form matches explicit Fock inner products") {
    FockBasis b(3, 6);
    Real worst = 0;
    for (int i = 0; i < 100; ++i) {
        const AmplitudeParams a = random_amplitude(3, 2 * i);
        const AmplitudeParams c = random_amplitude(3, 2 * i + 1);
        const Complex direct = coherent_fock(a, b).dot(coherent_fock(c, b));
        const Complex closed = overlap(a, c, 6);
        worst = std::max(worst, std::abs(direct - closed));
    }
    CHECK(worst < 1e-12);

    const AmplitudeParams a = random_amplitude(3, 5);
    CHECK(std::abs(overlap(a, a, 6) - Complex(1, 0)) < 1e-12);

    AmplitudeParams e1, e2;
    e1.x = VectorXcd::Zero(2);
    e2.x = VectorXcd::Zero(2);
    e1.x[0] = 1;
    e2.x[1] = 1;
    CHECK(std::abs(overlap(e1, e2, 4)) == 0.0);
}

TEST_CASE("husimi examples") {
    FockBasis b(2, 5);
    const AmplitudeParams a = random_amplitude(2, 21);
    const FockVector va = coherent_fock(a, b);
    DensityMatrix rho = va * va.adjoint();
    CHECK(husimi(rho, a, b) == doctest::Approx(1.0).epsilon(1e-12));

    // orthogonal case
    DensityMatrix top = DensityMatrix::Zero(b.size(), b.size());
    VectorXi occ(2);
    occ << 5, 0;
    top(b.index(occ), b.index(occ)) = 1.0;
    AmplitudeParams bottom;
    bottom.x = VectorXcd::Zero(2);
    bottom.x[1] = 1.0;
    CHECK(husimi(top, bottom, b) < 1e-14);

    // |<x|x0>|^2 against the overlap oracle, and global-phase invariance
    const AmplitudeParams c = random_amplitude(2, 22);
    const Real q = husimi(rho, c, b);
    CHECK(q == doctest::Approx(std::norm(overlap(c, a, 5))).epsilon(1e-12));
    FockVector vp = va * std::exp(Complex(0, 1.234));
    DensityMatrix rho_p = vp * vp.adjoint();
    CHECK(husimi(rho_p, c, b) == doctest::Approx(q).epsilon(1e-12));
}

TEST_CASE("coherent states are fully condensed (single-particle dm rank one)") {
    FockBasis b(3, 8);
    const AmplitudeParams a = random_amplitude(3, 31);
    const FockVector v = coherent_fock(a, b);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(single_particle_dm(v, b));
    CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(es.eigenvalues().head(2).cwiseAbs().maxCoeff()) < 1e-10);
}

TEST_CASE("reference fixpoint: y = 0 maps to |N,0,...,0> through every chart") {
    CosetParams c;
    c.y = VectorXcd::Zero(2);
    const AmplitudeParams a = y_to_x(c);
    const PhasePoint pt = x_to_pq(a);
    CHECK(pt.p[0] == doctest::Approx(1.0));
    FockBasis b(3, 5);
    const FockVector v = coherent_fock(pq_to_x(pt), b);
    VectorXi occ(3);
    occ << 5, 0, 0;
    CHECK(std::abs(v[b.index(occ)] - Complex(1, 0)) < 1e-14);
}

TEST_CASE("measure sampling: determinism, marginal, trace, identity") {
    const MeasureSample s1 = sample_measure(2, 3, 5000, 42);
    const MeasureSample s2 = sample_measure(2, 3, 5000, 42);
    for (int i = 0; i < 5000; i += 500) {
        CHECK(s1.points[i].p[1] == s2.points[i].p[1]);
        CHECK(s1.points[i].q[1] == s2.points[i].q[1]);
    }

    // Kolmogorov-Smirnov: p_2 uniform on [0,1] at the 1% level
    std::vector<Real> p2;
    p2.reserve(s1.points.size());
    for (const auto& pt : s1.points) p2.push_back(pt.p[1]);
    std::sort(p2.begin(), p2.end());
    Real ks = 0;
    const int n = static_cast<int>(p2.size());
    for (int i = 0; i < n; ++i) {
        ks = std::max(ks, std::abs(p2[i] - (i + 1.0) / n));
        ks = std::max(ks, std::abs(p2[i] - static_cast<Real>(i) / n));
    }
    CHECK(ks < 1.63 / std::sqrt(static_cast<Real>(n)));  // 1% critical value

    // trace check: sum of weights equals the sector dimension
    FockBasis b(2, 3);
    CHECK(s1.weight * n == doctest::Approx(static_cast<Real>(b.size())));

    // identity reconstruction at modest count
    const MeasureSample s3 = sample_measure(2, 3, 20000, 7);
    CHECK(identity_reconstruction_error(s3, b) < 5.0 / std::sqrt(20000.0));
}

TEST_CASE("coherent-Husimi sampler reproduces the exact first moment") {
    // E[x_k conj(x_j)] under Q(x) dmu equals (<E_jk> + delta_jk)/(N+M)
    const int N = 6, M = 2, S = 40000;
    AmplitudeParams x0 = random_amplitude(M, 77);
    const auto pts = sample_husimi_coherent(x0, N, S, 11);
    MatrixXcd mean = MatrixXcd::Zero(M, M);
    for (const auto& pt : pts) {
        const VectorXcd x = pq_to_x(pt).x;
        mean += x * x.adjoint();  // (k,j) entry x_k conj(x_j)
    }
    mean /= static_cast<Real>(S);
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) {
            const Complex expect =
                (static_cast<Real>(N) * x0.x[k] * std::conj(x0.x[j]) +
                 (j == k ? Complex(1, 0) : Complex(0, 0))) /
                static_cast<Real>(N + M);
            CHECK(std::abs(mean(k, j) - expect) < 0.02);
        }
}
