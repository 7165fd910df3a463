// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bhps/types.hpp"

namespace bhps {

using FockVector = VectorXcd;
using DensityMatrix = MatrixXcd;
using SparseReal = Eigen::SparseMatrix<Real>;

/// Occupation-number basis of the fixed-(M, N) sector, ordered
/// lexicographically descending in n_1 (then n_2, ...). States are ranked
/// combinatorially, so lookup needs no hash map.
class FockBasis {
public:
    static constexpr std::size_t kDefaultMaxStates = 200000;

    FockBasis(int sites, int particles, std::size_t max_states = kDefaultMaxStates)
        : M_(sites), N_(particles) {
        if (sites < 1) throw std::invalid_argument("FockBasis: need at least one site");
        if (particles < 0) throw std::invalid_argument("FockBasis: negative particle number");
        build_choose();
        const std::uint64_t dim = sector_dim(M_, N_);
        if (dim > max_states)
            throw std::length_error("FockBasis: sector dimension " + std::to_string(dim) +
                                    " exceeds the configured maximum " + std::to_string(max_states));
        states_.reserve(dim);
        VectorXi occ(M_);
        enumerate(occ, 0, N_);
    }

    int sites() const { return M_; }
    int particles() const { return N_; }
    int size() const { return static_cast<int>(states_.size()); }
    const VectorXi& state(int i) const { return states_[i]; }
    const std::vector<VectorXi>& states() const { return states_; }

    /// Ordinal of an occupation vector (must belong to the sector).
    int index(const VectorXi& occ) const {
        if (occ.size() != M_ || occ.minCoeff() < 0 || occ.sum() != N_)
            throw std::invalid_argument("FockBasis::index: vector not in sector");
        std::uint64_t r = 0;
        int rem = N_;
        for (int s = 0; s < M_ - 1; ++s) {
            // states with a larger occupation at site s come first
            for (int m = occ[s] + 1; m <= rem; ++m) r += sector_dim(M_ - 1 - s, rem - m);
            rem -= occ[s];
        }
        return static_cast<int>(r);
    }

    std::uint64_t sector_dim(int sites, int particles) const {
        return choose(particles + sites - 1, sites - 1);
    }

private:
    void build_choose() {
        const int n = N_ + M_ + 1;
        choose_.assign(n, std::vector<std::uint64_t>(n, 0));
        for (int a = 0; a < n; ++a) {
            choose_[a][0] = 1;
            for (int b = 1; b <= a; ++b)
                choose_[a][b] = choose_[a - 1][b - 1] + (b <= a - 1 ? choose_[a - 1][b] : 0);
        }
    }

    std::uint64_t choose(int a, int b) const {
        if (b < 0 || b > a) return 0;
        return choose_[a][b];
    }

    void enumerate(VectorXi& occ, int site, int rem) {
        if (site == M_ - 1) {
            occ[site] = rem;
            states_.push_back(occ);
            return;
        }
        for (int n = rem; n >= 0; --n) {
            occ[site] = n;
            enumerate(occ, site + 1, rem - n);
        }
    }

    int M_, N_;
    std::vector<VectorXi> states_;
    std::vector<std::vector<std::uint64_t>> choose_;
};

/// Sparse matrix of E_jk = a_j^dag a_k (1-based site indices).
inline SparseReal e_matrix(int j, int k, const FockBasis& basis) {
    const int M = basis.sites();
    if (j < 1 || j > M || k < 1 || k > M)
        throw std::invalid_argument("e_matrix: site index out of range");
    std::vector<Eigen::Triplet<Real>> trip;
    trip.reserve(basis.size());
    for (int col = 0; col < basis.size(); ++col) {
        const VectorXi& s = basis.state(col);
        if (s[k - 1] == 0) continue;
        if (j == k) {
            trip.emplace_back(col, col, static_cast<Real>(s[k - 1]));
            continue;
        }
        VectorXi t = s;
        Real amp = std::sqrt(static_cast<Real>(t[k - 1]));
        t[k - 1] -= 1;
        t[j - 1] += 1;
        amp *= std::sqrt(static_cast<Real>(t[j - 1]));
        trip.emplace_back(basis.index(t), col, amp);
    }
    SparseReal E(basis.size(), basis.size());
    E.setFromTriplets(trip.begin(), trip.end());
    return E;
}

/// E_jk applied to a state vector.
inline FockVector apply_E(int j, int k, const FockVector& v, const FockBasis& basis) {
    if (v.size() != basis.size()) throw std::invalid_argument("apply_E: size mismatch");
    FockVector out = FockVector::Zero(v.size());
    for (int col = 0; col < basis.size(); ++col) {
        if (v[col] == Complex(0, 0)) continue;
        const VectorXi& s = basis.state(col);
        if (s[k - 1] == 0) continue;
        if (j == k) {
            out[col] += static_cast<Real>(s[k - 1]) * v[col];
            continue;
        }
        VectorXi t = s;
        Real amp = std::sqrt(static_cast<Real>(t[k - 1]));
        t[k - 1] -= 1;
        t[j - 1] += 1;
        amp *= std::sqrt(static_cast<Real>(t[j - 1]));
        out[basis.index(t)] += amp * v[col];
    }
    return out;
}

/// H = sum_i eps_i n_i - Delta sum_{i<M} (a_i^dag a_{i+1} + h.c.)
///     + (U/2) sum_i n_i (n_i - 1); optional periodic wrap link.
inline SparseReal build_hamiltonian(const HamiltonianParams& params, const FockBasis& basis) {
    params.validate();
    const int M = basis.sites();
    if (params.sites() != M) throw std::invalid_argument("build_hamiltonian: M mismatch");
    std::vector<Eigen::Triplet<Real>> trip;
    trip.reserve(basis.size() * (M + 1));
    for (int col = 0; col < basis.size(); ++col) {
        const VectorXi& s = basis.state(col);
        Real diag = 0.0;
        for (int i = 0; i < M; ++i) {
            diag += params.onsite[i] * s[i];
            diag += 0.5 * params.interaction * s[i] * (s[i] - 1.0);
        }
        trip.emplace_back(col, col, diag);
        auto add_hop = [&](int a, int b) {  // -Delta a_a^dag a_b, 0-based
            if (s[b] == 0) return;
            VectorXi t = s;
            Real amp = std::sqrt(static_cast<Real>(t[b]));
            t[b] -= 1;
            t[a] += 1;
            amp *= std::sqrt(static_cast<Real>(t[a]));
            trip.emplace_back(basis.index(t), col, -params.hopping * amp);
        };
        for (int i = 0; i + 1 < M; ++i) {
            add_hop(i, i + 1);
            add_hop(i + 1, i);
        }
        if (params.periodic && M > 2) {
            add_hop(M - 1, 0);
            add_hop(0, M - 1);
        }
    }
    SparseReal H(basis.size(), basis.size());
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

inline Real hermiticity_defect(const SparseReal& H) {
    return (MatrixXd(H) - MatrixXd(H).transpose()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const SparseReal& H, Real tol = 1e-12) {
    const Real scale = std::max<Real>(1.0, MatrixXd(H).cwiseAbs().maxCoeff());
    if (hermiticity_defect(H) > tol * scale)
        throw std::invalid_argument("matrix is not Hermitian within tolerance");
}

/// Dense spectral propagator: exp(-i H t) through the eigendecomposition,
/// reusable across times.
class SpectralPropagator {
public:
    explicit SpectralPropagator(const SparseReal& H) {
        require_hermitian(H);
        solver_.compute(MatrixXd(H));
        if (solver_.info() != Eigen::Success)
            throw std::runtime_error("SpectralPropagator: eigensolver failed");
    }

    FockVector apply(const FockVector& v, Real t) const {
        const VectorXd& w = solver_.eigenvalues();
        const MatrixXd& V = solver_.eigenvectors();
        VectorXcd y = V.transpose() * v;
        for (int i = 0; i < y.size(); ++i) y[i] *= std::exp(Complex(0.0, -w[i] * t));
        return V * y;
    }

    const VectorXd& eigenvalues() const { return solver_.eigenvalues(); }
    const MatrixXd& eigenvectors() const { return solver_.eigenvectors(); }

private:
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver_;
};

/// Lanczos exp(-i H t) v for sectors too large to densify. Full
/// reorthogonalization; time is split until the Saad-style residual
/// estimate passes `tol`.
inline FockVector krylov_expv(const SparseReal& H, const FockVector& v, Real t, int m = 48,
                              Real tol = 1e-12) {
    const int n = static_cast<int>(v.size());
    m = std::min(m, n);
    FockVector cur = v;
    Real remaining = std::abs(t);
    const Real sign = t >= 0 ? 1.0 : -1.0;
    Real dt = remaining;
    int guard = 0;
    while (remaining > 0 && guard++ < 10000) {
        const Real beta0 = cur.norm();
        if (beta0 == 0.0) return cur;
        MatrixXcd V(n, m);
        MatrixXd T = MatrixXd::Zero(m, m);
        V.col(0) = cur / beta0;
        Real next_beta = 0.0;
        int used = m;
        for (int j = 0; j < m; ++j) {
            VectorXcd w = H * V.col(j);
            if (j > 0) w -= T(j, j - 1) * V.col(j - 1);
            const Real alpha = std::real(V.col(j).dot(w));
            T(j, j) = alpha;
            w -= alpha * V.col(j);
            for (int r = 0; r <= j; ++r) w -= V.col(r).dot(w) * V.col(r);
            const Real beta = w.norm();
            if (j + 1 < m) {
                if (beta < 1e-14 * beta0) {
                    used = j + 1;
                    break;
                }
                T(j, j + 1) = T(j + 1, j) = beta;
                V.col(j + 1) = w / beta;
            } else {
                next_beta = beta;
            }
        }
        const Real step = std::min(dt, remaining);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(T.topLeftCorner(used, used));
        VectorXcd phase(used);
        for (int i = 0; i < used; ++i)
            phase[i] = std::exp(Complex(0.0, -sign * step * es.eigenvalues()[i]));
        VectorXcd e1 = VectorXcd::Zero(used);
        e1[0] = beta0;
        VectorXcd y = es.eigenvectors() *
                      (phase.asDiagonal() * (es.eigenvectors().transpose() * e1));
        const Real err = used == m ? std::abs(y[used - 1]) * next_beta * step : 0.0;
        if (err > tol * beta0 && step > 1e-8) {
            dt = step / 2;
            continue;
        }
        cur = V.leftCols(used) * y;
        remaining -= step;
        dt = std::min(dt * 1.5, remaining > 0 ? remaining : dt);
    }
    return cur;
}

struct PropagateOptions {
    int dense_threshold = 4000;
    int krylov_dim = 48;
    Real krylov_tol = 1e-12;
};

/// exp(-i H t) v, choosing dense eigendecomposition or Lanczos by size.
inline FockVector propagate(const FockVector& v, const SparseReal& H, Real t,
                            const PropagateOptions& opts = {}) {
    if (v.size() != H.rows()) throw std::invalid_argument("propagate: size mismatch");
    if (!std::isfinite(t)) throw std::invalid_argument("propagate: time must be finite");
    require_hermitian(H);
    if (H.rows() <= opts.dense_threshold) return SpectralPropagator(H).apply(v, t);
    return krylov_expv(H, v, t, opts.krylov_dim, opts.krylov_tol);
}

/// Unnormalized canonical operator e^{-beta H} (imaginary-time flow of the
/// identity), via eigendecomposition.
inline DensityMatrix gibbs(const SparseReal& H, Real beta) {
    if (beta < 0) throw std::invalid_argument("gibbs: beta must be non-negative");
    require_hermitian(H);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es{MatrixXd(H)};
    if (es.info() != Eigen::Success) throw std::runtime_error("gibbs: eigensolver failed");
    const VectorXd w = (-beta * es.eigenvalues().array()).exp();
    MatrixXd rho = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
    return rho.cast<Complex>();
}

/// Tr(E_jk rho) / Tr(rho)
inline Complex expectation_fock(const DensityMatrix& rho, int j, int k, const FockBasis& basis) {
    const Complex tr = rho.trace();
    if (!(std::abs(tr) > 0))
        throw std::invalid_argument("expectation_fock: density matrix has zero trace");
    const SparseReal E = e_matrix(j, k, basis);
    Complex acc(0, 0);
    for (int col = 0; col < E.outerSize(); ++col)
        for (SparseReal::InnerIterator it(E, col); it; ++it)
            acc += it.value() * rho(col, it.row());  // Tr(E rho) = sum E_rc rho_cr
    return acc / tr;
}

/// <v|E_jk|v> / <v|v>
inline Complex expectation_state(const FockVector& v, int j, int k, const FockBasis& basis) {
    return v.dot(apply_E(j, k, v, basis)) / v.squaredNorm();
}

/// Single-particle density matrix sigma_jk = <E_kj> / N (unit trace for any
/// N-particle state; rank one exactly on coherent states).
inline MatrixXcd single_particle_dm(const FockVector& v, const FockBasis& basis) {
    const int M = basis.sites();
    MatrixXcd sigma(M, M);
    for (int j = 1; j <= M; ++j)
        for (int k = 1; k <= M; ++k) sigma(j - 1, k - 1) = expectation_state(v, k, j, basis);
    return sigma / static_cast<Real>(basis.particles());
}

inline bool is_hermitian(const DensityMatrix& rho, Real tol = 1e-12) {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max<Real>(1.0, rho.cwiseAbs().maxCoeff());
}

inline bool is_physical(const DensityMatrix& rho, Real eig_tol = -1e-10) {
    if (!is_hermitian(rho)) return false;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho);
    return es.eigenvalues().minCoeff() >= eig_tol * std::max<Real>(1.0, rho.cwiseAbs().maxCoeff());
}

}  // namespace bhps
