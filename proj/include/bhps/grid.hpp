// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bhps/fft.hpp"
#include "bhps/fock.hpp"
#include "bhps/generators.hpp"
#include "bhps/parallel.hpp"
#include "bhps/types.hpp"

namespace bhps {

/// M = 2 phase-space grid over (p_2, q_2): p staggered by h/2 strictly inside
/// (0,1), q uniform periodic on [0, 2pi). `values` is the sampled field.
struct PhaseGrid2 {
    int np = 0, nq = 0;
    Real hp = 0.0, hq = 0.0;
    VectorXd p, q;
    MatrixXd values;  // np x nq

    PhaseGrid2() = default;
    PhaseGrid2(int n_p, int n_q) : np(n_p), nq(n_q) {
        if (n_p < 8 || !is_pow2(n_q))
            throw std::invalid_argument("PhaseGrid2: need np >= 8 and power-of-two nq");
        hp = 1.0 / np;
        hq = 2 * kPi / nq;
        p.setLinSpaced(np, 0.5 * hp, 1.0 - 0.5 * hp);
        q.setLinSpaced(nq, 0.0, 2 * kPi - hq);
        values.setZero(np, nq);
    }
};

namespace stencil {

/// Finite-difference weights for the m-th derivative at x0 from the given
/// nodes (Taylor-matrix solve).
inline VectorXd fd_weights(Real x0, const VectorXd& nodes, int m) {
    const int n = static_cast<int>(nodes.size());
    MatrixXd A(n, n);
    VectorXd rhs = VectorXd::Zero(n);
    Real fact = 1.0;
    for (int k = 0; k < n; ++k) {
        if (k > 0) fact *= k;
        for (int j = 0; j < n; ++j) A(k, j) = std::pow(nodes[j] - x0, k) / fact;
        if (k == m) rhs[k] = 1.0;
    }
    return A.fullPivLu().solve(rhs);
}

}  // namespace stencil

/// Banded 4th-order differentiation in p (centered interior, one-sided rows
/// near the boundary), plus spectral differentiation and filtering in q.
class GridStencils {
public:
    GridStencils(int np, Real hp) : np_(np) {
        const int w1 = 5, w2 = 6;
        rows1_.resize(np);
        rows2_.resize(np);
        for (int i = 0; i < np; ++i) {
            build_row(rows1_[i], i, hp, 1, w1);
            build_row(rows2_[i], i, hp, 2, w2);
        }
    }

    MatrixXd dp(const MatrixXd& G) const { return apply(rows1_, G); }
    MatrixXd dp2(const MatrixXd& G) const { return apply(rows2_, G); }

    /// Spectral d/dq (exact for resolved Fourier modes).
    static MatrixXd dq(const MatrixXd& G) { return q_multiplier(G, 1); }
    static MatrixXd dq2(const MatrixXd& G) { return q_multiplier(G, 2); }

private:
    struct Row {
        int start;
        VectorXd w;
    };

    void build_row(Row& r, int i, Real hp, int order, int width) {
        r.start = std::min(std::max(i - width / 2, 0), np_ - width);
        VectorXd nodes(width);
        for (int j = 0; j < width; ++j) nodes[j] = (r.start + j - i) * hp;
        r.w = stencil::fd_weights(0.0, nodes, order);
    }

    MatrixXd apply(const std::vector<Row>& rows, const MatrixXd& G) const {
        MatrixXd out(G.rows(), G.cols());
        parallel_for(G.rows(), [&](std::ptrdiff_t i) {
            const Row& r = rows[i];
            out.row(i) = r.w[0] * G.row(r.start);
            for (int j = 1; j < r.w.size(); ++j) out.row(i) += r.w[j] * G.row(r.start + j);
        });
        return out;
    }

    static MatrixXd q_multiplier(const MatrixXd& G, int order) {
        const int nq = static_cast<int>(G.cols());
        MatrixXd out(G.rows(), nq);
        parallel_for(G.rows(), [&](std::ptrdiff_t i) {
            std::vector<Complex> buf(nq);
            for (int j = 0; j < nq; ++j) buf[j] = G(i, j);
            fft_pow2(buf.data(), nq, -1);
            for (int j = 0; j < nq; ++j) {
                const int f = j <= nq / 2 ? j : j - nq;
                if (order == 1) {
                    buf[j] *= Complex(0.0, f);
                    if (2 * j == nq) buf[j] = 0.0;  // Nyquist mode has no odd derivative
                } else {
                    buf[j] *= -static_cast<Real>(f) * f;
                }
            }
            fft_pow2(buf.data(), nq, +1);
            for (int j = 0; j < nq; ++j) out(i, j) = buf[j].real() / nq;
        });
        return out;
    }

    int np_;
    std::vector<Row> rows1_, rows2_;
};

/// Assembled differential operator on an M = 2 grid: six coefficient fields
/// evaluated on the nodes, applied with 4th-order p stencils and spectral q.
struct GridOperator {
    MatrixXd c0, cp, cq, cpp, cqq, cpq;
    bool has2 = false;

    MatrixXd apply(const GridStencils& st, const MatrixXd& G) const {
        MatrixXd dqG = GridStencils::dq(G);
        MatrixXd out = c0.cwiseProduct(G) + cp.cwiseProduct(st.dp(G)) + cq.cwiseProduct(dqG);
        if (has2) {
            if (cpq.size()) out += cpq.cwiseProduct(st.dp(dqG));
            if (cpp.size()) out += cpp.cwiseProduct(st.dp2(G));
            if (cqq.size()) out += cqq.cwiseProduct(GridStencils::dq2(G));
        }
        return out;
    }

    Real coefficient_scale(Real hp, Real hq) const {
        Real s = c0.cwiseAbs().maxCoeff() + cp.cwiseAbs().maxCoeff() / hp +
                 cq.cwiseAbs().maxCoeff() / hq;
        if (has2) {
            if (cpq.size()) s += cpq.cwiseAbs().maxCoeff() / (hp * hq);
            if (cpp.size()) s += cpp.cwiseAbs().maxCoeff() / (hp * hp);
            if (cqq.size()) s += cqq.cwiseAbs().maxCoeff() / (hq * hq);
        }
        return s;
    }
};

namespace detail {

template <class CoeffFn>
GridOperator assemble_operator(const PhaseGrid2& grid, int M, CoeffFn&& coeffs, bool second) {
    if (M != 2) throw std::invalid_argument("grid operators are implemented for M = 2");
    GridOperator op;
    op.c0.setZero(grid.np, grid.nq);
    op.cp.setZero(grid.np, grid.nq);
    op.cq.setZero(grid.np, grid.nq);
    op.has2 = second;
    if (second) {
        op.cpp.setZero(grid.np, grid.nq);
        op.cqq.setZero(grid.np, grid.nq);
        op.cpq.setZero(grid.np, grid.nq);
    }
    VectorXd p(2), q(2);
    for (int i = 0; i < grid.np; ++i) {
        p << 1.0 - grid.p[i], grid.p[i];
        for (int j = 0; j < grid.nq; ++j) {
            q << 0.0, grid.q[j];
            const PointOperator c = coeffs(p, q);
            op.c0(i, j) = c.c0;
            op.cp(i, j) = c.cp[0];
            op.cq(i, j) = c.cq[0];
            if (second) {
                op.cpp(i, j) = c.cpp(0, 0);
                op.cqq(i, j) = c.cqq(0, 0);
                op.cpq(i, j) = c.cpq(0, 0);
            }
        }
    }
    return op;
}

}  // namespace detail

inline GridOperator make_realtime_operator(const PhaseGrid2& grid, const GeneratorSpec& spec) {
    return detail::assemble_operator(
        grid, spec.sites(),
        [&](const VectorXd& p, const VectorXd& q) {
            return spec.kind == GeneratorKind::Liouville
                       ? liouville_coefficients(spec.params, spec.particles, p, q)
                       : realtime_coefficients(spec, p, q);
        },
        spec.kind != GeneratorKind::Liouville && spec.order == EvolutionOrder::Full);
}

inline GridOperator make_bloch_operator(const PhaseGrid2& grid, const BlochSpec& spec) {
    return detail::assemble_operator(
        grid, spec.sites(),
        [&](const VectorXd& p, const VectorXd& q) { return bloch_coefficients(spec, p, q); },
        true);
}

/// d(dist)/dt field of a real-time generator applied to the grid values.
inline PhaseGrid2 apply_generator(const PhaseGrid2& grid, const GeneratorSpec& spec) {
    const GridOperator op = make_realtime_operator(grid, spec);
    const GridStencils st(grid.np, grid.hp);
    PhaseGrid2 out = grid;
    out.values = op.apply(st, grid.values);
    return out;
}

/// d(dist)/dbeta field of a Bloch generator applied to the grid values.
inline PhaseGrid2 apply_bloch(const PhaseGrid2& grid, const BlochSpec& spec) {
    const GridOperator op = make_bloch_operator(grid, spec);
    const GridStencils st(grid.np, grid.hp);
    PhaseGrid2 out = grid;
    out.values = op.apply(st, grid.values);
    return out;
}

/// Per-q-mode orthonormal bases of the physical p-profiles
/// span{ sqrt(binom(N,m+f) binom(N,m)) p^{m+f/2} (1-p)^{N-m-f/2} }.
/// Projecting onto them removes everything the degree-N Husimi/Glauber class
/// cannot represent; mode 0 contains the constants, so grid mass is
/// preserved exactly.
class PhysicalSubspace {
public:
    PhysicalSubspace(const PhaseGrid2& grid, int N) : N_(N) {
        bases_.resize(N + 1);
        std::vector<Real> lg(N + 1);
        for (int k = 0; k <= N; ++k)
            lg[k] = std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0);
        for (int f = 0; f <= N; ++f) {
            const int r = N + 1 - f;
            MatrixXd B(grid.np, r);
            for (int m = 0; m < r; ++m)
                for (int i = 0; i < grid.np; ++i) {
                    const Real lp = std::log(grid.p[i]);
                    const Real l1p = std::log(1.0 - grid.p[i]);
                    B(i, m) = std::exp(0.5 * (lg[m + f] + lg[m]) + (m + 0.5 * f) * lp +
                                       (N - m - 0.5 * f) * l1p);
                }
            Eigen::HouseholderQR<MatrixXd> qr(B);
            bases_[f] = qr.householderQ() * MatrixXd::Identity(grid.np, r);
        }
    }

    void project(MatrixXd& G) const {
        const int nq = static_cast<int>(G.cols());
        const int np = static_cast<int>(G.rows());
        std::vector<std::vector<Complex>> rows(np, std::vector<Complex>(nq));
        parallel_for(np, [&](std::ptrdiff_t i) {
            for (int j = 0; j < nq; ++j) rows[i][j] = G(i, j);
            fft_pow2(rows[i].data(), nq, -1);
        });
        // per-mode projection over the p direction
        MatrixXcd modes(np, nq);
        for (int i = 0; i < np; ++i)
            for (int j = 0; j < nq; ++j) modes(i, j) = rows[i][j];
        parallel_for(nq, [&](std::ptrdiff_t j) {
            const int f = std::abs(j <= nq / 2 ? static_cast<int>(j) : static_cast<int>(j) - nq);
            if (f > N_) {
                modes.col(j).setZero();
                return;
            }
            const MatrixXd& U = bases_[f];
            VectorXd re = modes.col(j).real();
            VectorXd im = modes.col(j).imag();
            re = U * (U.transpose() * re).eval();
            im = U * (U.transpose() * im).eval();
            for (int i = 0; i < np; ++i) modes(i, j) = Complex(re[i], im[i]);
        });
        parallel_for(np, [&](std::ptrdiff_t i) {
            for (int j = 0; j < nq; ++j) rows[i][j] = modes(i, j);
            fft_pow2(rows[i].data(), nq, +1);
            for (int j = 0; j < nq; ++j) G(i, j) = rows[i][j].real() / nq;
        });
    }

private:
    int N_;
    std::vector<MatrixXd> bases_;
};

/// Sharp spectral cutoffs: q modes above kq are zeroed, p content above DCT
/// index kp is zeroed. Either bound < 0 disables that direction.
inline void spectral_filter(MatrixXd& G, int kq, int kp) {
    const int np = static_cast<int>(G.rows());
    const int nq = static_cast<int>(G.cols());
    if (kq >= 0) {
        parallel_for(np, [&](std::ptrdiff_t i) {
            std::vector<Complex> buf(nq);
            for (int j = 0; j < nq; ++j) buf[j] = G(i, j);
            fft_pow2(buf.data(), nq, -1);
            for (int j = 0; j < nq; ++j) {
                const int f = std::abs(j <= nq / 2 ? j : j - nq);
                if (f > kq) buf[j] = 0.0;
            }
            fft_pow2(buf.data(), nq, +1);
            for (int j = 0; j < nq; ++j) G(i, j) = buf[j].real() / nq;
        });
    }
    if (kp >= 0 && is_pow2(np)) {
        parallel_for(nq, [&](std::ptrdiff_t j) {
            std::vector<double> col(np), coef(np);
            for (int i = 0; i < np; ++i) col[i] = G(i, j);
            dct2(col.data(), coef.data(), np);
            for (int i = kp + 1; i < np; ++i) coef[i] = 0.0;
            dct3(coef.data(), col.data(), np);
            for (int i = 0; i < np; ++i) G(i, j) = col[i];
        });
    }
}

/// Invariant-measure density on the (p_2, q_2) chart for M = 2:
/// d(mu) = (N+1)/(2 pi) dp dq.
inline Real measure_density(int N) { return (N + 1.0) / (2 * kPi); }

/// Grid quadrature of the field against d(mu) (midpoint in p, exact in q).
inline Real grid_mass(const PhaseGrid2& grid, int N) {
    return measure_density(N) * grid.hp * grid.hq * grid.values.sum();
}

/// Husimi values <x(p,q)| rho |x(p,q)> on all grid nodes (M = 2).
inline PhaseGrid2 husimi_grid(const DensityMatrix& rho, const FockBasis& basis,
                              const PhaseGrid2& geometry) {
    if (basis.sites() != 2) throw std::invalid_argument("husimi_grid: M = 2 only");
    const int N = basis.particles();
    const int d = basis.size();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho);
    if (es.info() != Eigen::Success) throw std::runtime_error("husimi_grid: eigensolver failed");

    PhaseGrid2 out = geometry;
    out.values.setZero();
    // amplitude table A(i, n) = sqrt(binom(N,n)) p^{n/2} (1-p)^{(N-n)/2};
    // basis index i has occupation (N-i, i), i.e. n_2 = i.
    MatrixXd A(geometry.np, d);
    for (int n = 0; n < d; ++n) {
        const Real lb = std::lgamma(N + 1.0) - std::lgamma(n + 1.0) - std::lgamma(N - n + 1.0);
        for (int i = 0; i < geometry.np; ++i)
            A(i, n) = std::exp(0.5 * (lb + n * std::log(geometry.p[i]) +
                                      (N - n) * std::log(1.0 - geometry.p[i])));
    }
    MatrixXcd E(d, geometry.nq);
    for (int n = 0; n < d; ++n)
        for (int j = 0; j < geometry.nq; ++j) E(n, j) = std::exp(Complex(0.0, n * geometry.q[j]));
    for (int k = 0; k < d; ++k) {
        const Real w = es.eigenvalues()[k];
        if (std::abs(w) < 1e-300) continue;
        MatrixXcd weighted =
            A.cast<Complex>().array() *
            es.eigenvectors().col(k).transpose().replicate(geometry.np, 1).array();
        MatrixXcd amp = weighted * E;  // <x|v_k> on the grid
        out.values += w * amp.cwiseAbs2();
    }
    return out;
}

/// log <x|e^{-beta H}|x> on the grid, evaluated stably in log space
/// (criterion-level comparisons at large N need this).
inline MatrixXd log_husimi_gibbs_grid(const SparseReal& H, const FockBasis& basis,
                                      const PhaseGrid2& geometry, Real beta) {
    if (basis.sites() != 2) throw std::invalid_argument("log_husimi_gibbs_grid: M = 2 only");
    const int N = basis.particles();
    const int d = basis.size();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es{MatrixXd(H)};
    MatrixXd logA(geometry.np, d);
    for (int n = 0; n < d; ++n) {
        const Real lb = std::lgamma(N + 1.0) - std::lgamma(n + 1.0) - std::lgamma(N - n + 1.0);
        for (int i = 0; i < geometry.np; ++i)
            logA(i, n) = 0.5 * (lb + n * std::log(geometry.p[i]) +
                                (N - n) * std::log(1.0 - geometry.p[i]));
    }
    const VectorXd rowmax = logA.rowwise().maxCoeff();
    MatrixXd A(geometry.np, d);
    for (int i = 0; i < geometry.np; ++i)
        A.row(i) = (logA.row(i).array() - rowmax[i]).exp();
    MatrixXcd E(d, geometry.nq);
    for (int n = 0; n < d; ++n)
        for (int j = 0; j < geometry.nq; ++j) E(n, j) = std::exp(Complex(0.0, n * geometry.q[j]));
    MatrixXd out = MatrixXd::Constant(geometry.np, geometry.nq, -1e300);
    for (int k = 0; k < d; ++k) {
        MatrixXd weighted =
            A.array() * es.eigenvectors().col(k).transpose().replicate(geometry.np, 1).array();
        MatrixXcd amp = weighted.cast<Complex>() * E;
        for (int i = 0; i < geometry.np; ++i)
            for (int j = 0; j < geometry.nq; ++j) {
                const Real lk = -beta * es.eigenvalues()[k] +
                                2.0 * (std::log(std::abs(amp(i, j)) + 1e-300) + rowmax[i]);
                const Real hi = std::max(out(i, j), lk);
                out(i, j) = hi + std::log(std::exp(out(i, j) - hi) + std::exp(lk - hi));
            }
    }
    return out;
}

}  // namespace bhps
