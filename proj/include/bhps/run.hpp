// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "bhps/cloud.hpp"
#include "bhps/coherent.hpp"
#include "bhps/config.hpp"
#include "bhps/dynamics.hpp"
#include "bhps/expectation.hpp"
#include "bhps/fock.hpp"
#include "bhps/grid.hpp"
#include "bhps/io.hpp"
#include "bhps/thermo.hpp"
#include "bhps/version.hpp"

namespace bhps {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;
inline constexpr int kExitVerificationFailure = 4;

namespace detail {

inline AmplitudeParams initial_state(const RunConfig& cfg) {
    const int M = cfg.model.sites();
    PhasePoint pt;
    pt.p = VectorXd::Constant(M, 1.0 / M);
    pt.q = VectorXd::Zero(M);
    for (int k = 1; k < M; ++k) pt.q[k] = 0.3 * k;  // generic default phases
    if (!cfg.numerics.initial_p.empty())
        for (int k = 0; k < M; ++k) pt.p[k] = cfg.numerics.initial_p[k];
    if (!cfg.numerics.initial_q.empty())
        for (int k = 0; k < M; ++k) pt.q[k] = cfg.numerics.initial_q[k];
    pt.q[0] = 0.0;
    return pq_to_x(pt);
}

inline GeneratorKind parse_kind(const std::string& kind) {
    if (kind == "P") return GeneratorKind::P;
    if (kind == "liouville") return GeneratorKind::Liouville;
    return GeneratorKind::Q;
}

inline MatrixXcd random_density_matrix(int d, SplitMix64& g) {
    MatrixXcd A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = Complex(g.normal(), g.normal());
    MatrixXcd rho = A * A.adjoint();
    return rho / rho.trace().real();
}

struct TaskResult {
    nlohmann::json metrics;
    std::vector<std::string> artifacts;
    bool verified = true;
};

inline void write_artifact(const RunConfig& cfg, TaskResult& res,
                           const std::filesystem::path& dir, const std::string& name,
                           const std::string& body) {
    write_text(dir / name, body);
    res.artifacts.push_back(name);
}

// ---------------------------------------------------------------------------

inline TaskResult run_exact(const RunConfig& cfg, const std::filesystem::path& dir) {
    TaskResult res;
    const int M = cfg.model.sites();
    const int N = cfg.particles;
    FockBasis basis(M, N);
    const SparseReal H = build_hamiltonian(cfg.model, basis);
    const SpectralPropagator prop(H);
    const FockVector psi0 = coherent_fock(initial_state(cfg), basis);
    const Real e0 = std::real(psi0.dot(MatrixXd(H).cast<Complex>() * psi0));

    nlohmann::json rows = nlohmann::json::array();
    const Real tf = cfg.numerics.t_final;
    const Real dts = cfg.numerics.dt_sample > 0 ? cfg.numerics.dt_sample : tf;
    Real norm_drift = 0.0, energy_drift = 0.0;
    const int nsamp = tf > 0 ? static_cast<int>(std::ceil(tf / dts)) : 0;
    for (int s = 0; s <= nsamp; ++s) {
        const Real t = std::min(s * dts, tf);
        const FockVector psi = prop.apply(psi0, t);
        norm_drift = std::max(norm_drift, std::abs(psi.norm() - 1.0));
        const Real e = std::real(psi.dot(MatrixXd(H).cast<Complex>() * psi));
        energy_drift = std::max(energy_drift, std::abs(e - e0));
        for (int j = 1; j <= M; ++j)
            for (int k = 1; k <= M; ++k) {
                ObservableReport rep;
                rep.j = j;
                rep.k = k;
                rep.estimator = Estimator::Fock;
                rep.value = expectation_state(psi, j, k, basis);
                rows.push_back(report_row(rep, M, N, t));
            }
    }
    if (cfg.output.json_files) write_artifact(cfg, res, dir, "observables.json", rows.dump(2));
    res.metrics["norm_drift"] = norm_drift;
    res.metrics["energy_drift"] = energy_drift;
    res.metrics["sector_dim"] = basis.size();
    return res;
}

inline TaskResult run_pde(const RunConfig& cfg, const std::filesystem::path& dir) {
    TaskResult res;
    const int M = cfg.model.sites();
    const int N = cfg.particles;
    if (M != 2) throw std::invalid_argument("pde task: M = 2 grids only");
    FockBasis basis(M, N);
    PhaseGrid2 geometry(cfg.numerics.grid_np, cfg.numerics.grid_nq);
    const FockVector v0 = coherent_fock(initial_state(cfg), basis);
    PhaseGrid2 Q0 = husimi_grid(DensityMatrix(v0 * v0.adjoint()), basis, geometry);

    GeneratorSpec spec{parse_kind(cfg.numerics.kind),
                       cfg.numerics.order == "full" ? EvolutionOrder::Full
                                                    : EvolutionOrder::FirstOrder,
                       cfg.model, N};
    PdeOptions opts;
    opts.dt = cfg.numerics.dt;
    opts.cfl = cfg.numerics.cfl;
    opts.project = cfg.numerics.projection;
    opts.filter_kq = cfg.numerics.filter_kq;
    opts.filter_kp = cfg.numerics.filter_kp;
    const PhaseGrid2 Qt = evolve_pde(Q0, spec, cfg.numerics.t_final, opts);

    const Real m0 = grid_mass(Q0, N);
    const Real m1 = grid_mass(Qt, N);
    if (cfg.output.csv) write_artifact(cfg, res, dir, "grid.csv", grid_csv(Qt));
    if (cfg.output.json_files)
        write_artifact(cfg, res, dir, "grid.json",
                       grid_header(Qt, M, N, cfg.numerics.t_final, cfg.numerics.kind).dump(2));
    res.metrics["mass_initial"] = m0;
    res.metrics["mass_final"] = m1;
    res.metrics["mass_drift_rel"] = std::abs(m1 - m0) / std::max(std::abs(m0), 1e-300);
    return res;
}

inline TaskResult run_ensemble(const RunConfig& cfg, const std::filesystem::path& dir) {
    TaskResult res;
    const int M = cfg.model.sites();
    const int N = cfg.particles;
    const AmplitudeParams x0 = initial_state(cfg);
    TrajectoryEnsemble ens = ensemble_from_points(
        sample_husimi_coherent(x0, N, cfg.numerics.samples, cfg.numerics.seed));
    const GeneratorKind kind = parse_kind(cfg.numerics.kind);
    OdeOptions ode;
    ode.rel_tol = cfg.numerics.rel_tol;
    ode.abs_tol = cfg.numerics.abs_tol;

    nlohmann::json rows = nlohmann::json::array();
    const Real tf = cfg.numerics.t_final;
    const Real dts = cfg.numerics.dt_sample > 0 ? cfg.numerics.dt_sample : tf;
    const int nsamp = tf > 0 ? static_cast<int>(std::ceil(tf / dts)) : 0;
    Real t = 0.0;
    for (int s = 0; s <= nsamp; ++s) {
        const Real target = std::min(s * dts, tf);
        if (target > t) {
            ens = ensemble_propagate(ens, cfg.model, N, target - t, kind, ode);
            t = target;
        }
        for (int j = 1; j <= M; ++j)
            for (int k = 1; k <= M; ++k)
                rows.push_back(report_row(expect_from_ensemble(ens, j, k, N), M, N, t));
    }
    if (cfg.output.csv)
        write_artifact(cfg, res, dir, "ensemble.csv", points_csv(ens.points, &ens.weights));
    if (cfg.output.json_files) write_artifact(cfg, res, dir, "observables.json", rows.dump(2));
    res.metrics["points"] = ens.size();
    res.metrics["weight_sum"] = ens.weights.sum();
    return res;
}

inline TaskResult run_thermo(const RunConfig& cfg, const std::filesystem::path& dir) {
    TaskResult res;
    const int M = cfg.model.sites();
    const int N = cfg.particles;
    if (M != 2) throw std::invalid_argument("thermo task: M = 2 grids only");
    PhaseGrid2 grid(cfg.numerics.grid_np, cfg.numerics.grid_nq);
    grid.values.setConstant(1.0);  // beta = 0 distribution

    BlochSpec spec{cfg.numerics.kind == "P"
                       ? BlochKind::P
                       : (cfg.numerics.kind == "classical" ? BlochKind::Classical : BlochKind::Q),
                   cfg.model, N};
    BlochEvolveOptions opts;
    opts.dbeta = cfg.numerics.dt;
    opts.cfl = cfg.numerics.cfl;
    opts.project = cfg.numerics.projection;

    std::vector<Real> betas = cfg.numerics.sweep_values;
    if (betas.empty()) betas = {cfg.numerics.beta_final};
    nlohmann::json sweep = nlohmann::json::array();
    PhaseGrid2 cur = grid;
    Real beta_done = 0.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const Real beta = betas[i];
        if (beta < beta_done) throw std::invalid_argument("thermo: sweep betas must increase");
        if (spec.kind == BlochKind::Classical) {
            cur = evolve_bloch(grid, spec, beta, opts);
        } else if (beta > beta_done) {
            cur = evolve_bloch(cur, spec, beta - beta_done, opts);
        }
        beta_done = beta;
        const std::string name = betas.size() == 1
                                     ? std::string("grid.csv")
                                     : "grid_beta_" + std::to_string(i) + ".csv";
        if (cfg.output.csv) write_artifact(cfg, res, dir, name, grid_csv(cur));
        const WidthReport w = q_width_report(cur, N);
        nlohmann::json snap = grid_header(cur, M, N, beta, cfg.numerics.kind);
        snap["file"] = name;
        snap["min_value"] = cur.values.minCoeff();
        snap["p_argmax"] = w.p_argmax;
        snap["q_argmax"] = w.q_argmax;
        snap["p_stddev"] = w.p_stddev;
        snap["coherent_width"] = w.coherent_width;
        sweep.push_back(snap);
    }
    if (cfg.output.json_files) write_artifact(cfg, res, dir, "sweep.json", sweep.dump(2));
    res.metrics["beta_final"] = beta_done;
    res.metrics["min_value"] = cur.values.minCoeff();
    res.metrics["snapshots"] = betas.size();
    return res;
}

/// Oracle-residual protocol: exact Fock distributions at t - d, t, t + d (or
/// beta offsets), centered time difference against the generator applied to
/// the middle grid, interior-margin relative norm.
struct ResidualReport {
    Real realtime = 0.0;
    Real bloch = 0.0;
};

inline Real interior_relative_norm(const PhaseGrid2& geometry, const MatrixXd& err,
                                   const MatrixXd& ref, Real margin) {
    Real num = 0, den = 0;
    for (int i = 0; i < geometry.np; ++i) {
        if (geometry.p[i] < margin || geometry.p[i] > 1 - margin) continue;
        num += err.row(i).squaredNorm();
        den += ref.row(i).squaredNorm();
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

inline ResidualReport residual_protocol(const RunConfig& cfg, int np, int nq, Real fd_delta) {
    const int M = cfg.model.sites();
    const int N = cfg.particles;
    if (M != 2) throw std::invalid_argument("verify-residual: M = 2 grids only");
    FockBasis basis(M, N);
    const SparseReal H = build_hamiltonian(cfg.model, basis);
    const SpectralPropagator prop(H);
    PhaseGrid2 geometry(np, nq);
    const GridStencils st(np, geometry.hp);

    ResidualReport rep;
    {
        const FockVector v0 = coherent_fock(initial_state(cfg), basis);
        const Real t0 = cfg.numerics.t_final;
        auto Qat = [&](Real t) {
            const FockVector v = prop.apply(v0, t);
            return husimi_grid(DensityMatrix(v * v.adjoint()), basis, geometry);
        };
        const PhaseGrid2 Qm = Qat(t0 - fd_delta);
        const PhaseGrid2 Q0 = Qat(t0);
        const PhaseGrid2 Qp = Qat(t0 + fd_delta);
        const MatrixXd dQdt = (Qp.values - Qm.values) / (2 * fd_delta);
        GeneratorSpec spec{GeneratorKind::Q, EvolutionOrder::Full, cfg.model, N};
        const GridOperator op = make_realtime_operator(geometry, spec);
        const MatrixXd LQ = op.apply(st, Q0.values);
        rep.realtime = interior_relative_norm(geometry, LQ - dQdt, dQdt, cfg.numerics.margin);
    }
    {
        const Real b0 = cfg.numerics.beta_final;
        auto Qat = [&](Real beta) { return husimi_grid(gibbs(H, beta), basis, geometry); };
        const PhaseGrid2 Qm = Qat(b0 - fd_delta);
        const PhaseGrid2 Q0 = Qat(b0);
        const PhaseGrid2 Qp = Qat(b0 + fd_delta);
        const MatrixXd dQdb = (Qp.values - Qm.values) / (2 * fd_delta);
        BlochSpec spec{BlochKind::Q, cfg.model, N};
        const GridOperator op = make_bloch_operator(geometry, spec);
        const MatrixXd BQ = op.apply(st, Q0.values);
        rep.bloch = interior_relative_norm(geometry, BQ - dQdb, dQdb, cfg.numerics.margin);
    }
    return rep;
}

inline TaskResult run_verify_residual(const RunConfig& cfg, const std::filesystem::path& dir) {
    TaskResult res;
    const ResidualReport rep =
        residual_protocol(cfg, cfg.numerics.grid_np, cfg.numerics.grid_nq, cfg.numerics.fd_delta);
    const ResidualReport coarse = residual_protocol(cfg, cfg.numerics.grid_np / 2,
                                                    std::max(cfg.numerics.grid_nq / 2, 8),
                                                    cfg.numerics.fd_delta);
    res.metrics["residual_realtime"] = rep.realtime;
    res.metrics["residual_bloch"] = rep.bloch;
    res.metrics["residual_realtime_coarse"] = coarse.realtime;
    res.metrics["residual_bloch_coarse"] = coarse.bloch;
    res.metrics["threshold"] = cfg.numerics.residual_threshold;
    res.verified = rep.realtime < cfg.numerics.residual_threshold &&
                   rep.bloch < cfg.numerics.residual_threshold;
    (void)dir;
    return res;
}

inline TaskResult run_verify_scaling(const RunConfig& cfg, const std::filesystem::path& dir) {
    TaskResult res;
    const int M = cfg.model.sites();
    const Real UN = cfg.model.interaction * cfg.particles;
    std::vector<Real> Ns = cfg.numerics.sweep_values;
    if (Ns.empty()) Ns = {8, 16, 32, 64};
    const AmplitudeParams x0 = initial_state(cfg);
    OdeOptions ode;
    ode.rel_tol = cfg.numerics.rel_tol;
    ode.abs_tol = cfg.numerics.abs_tol;

    std::vector<Real> errs;
    nlohmann::json per_n = nlohmann::json::array();
    for (Real Nr : Ns) {
        const int N = static_cast<int>(Nr);
        HamiltonianParams params = cfg.model;
        params.interaction = UN / N;
        TrajectoryEnsemble ens = ensemble_from_points(
            sample_husimi_coherent(x0, N, cfg.numerics.samples, cfg.numerics.seed + N));
        ens = ensemble_propagate(ens, params, N, cfg.numerics.t_final, GeneratorKind::Liouville,
                                 ode);
        FockBasis basis(M, N);
        const SparseReal H = build_hamiltonian(params, basis);
        const FockVector psi =
            propagate(coherent_fock(x0, basis), H, cfg.numerics.t_final);
        Real err2 = 0;
        for (int j = 1; j <= M; ++j)
            for (int k = 1; k <= M; ++k) {
                const Complex a = expect_from_ensemble(ens, j, k, N).value;
                const Complex b = expectation_state(psi, j, k, basis);
                err2 += std::norm(a - b);
            }
        const Real err = std::sqrt(err2) / N;
        errs.push_back(err);
        nlohmann::json row;
        row["N"] = N;
        row["err_over_N"] = err;
        per_n.push_back(row);
    }
    // least-squares slope of log(err) vs log(N)
    Real sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(Ns.size());
    for (int i = 0; i < n; ++i) {
        const Real x = std::log(Ns[i]);
        const Real y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const Real slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    res.metrics["errors"] = per_n;
    res.metrics["slope"] = slope;
    res.verified = slope > -1.3 && slope < -0.7;
    (void)dir;
    return res;
}

inline TaskResult run_verify_identity(const RunConfig& cfg, const std::filesystem::path& dir) {
    TaskResult res;
    const int M = cfg.model.sites();
    const int N = cfg.particles;
    FockBasis basis(M, N);
    int total = 0, agree = 0;
    Real worst = 0.0;
    for (int trial = 0; trial < cfg.numerics.trials; ++trial) {
        SplitMix64 g(cfg.numerics.seed * 7919 + trial);
        const DensityMatrix rho = random_density_matrix(basis.size(), g);
        const MeasureSample sample =
            sample_measure(M, N, cfg.numerics.samples, cfg.numerics.seed + 131 * trial);
        for (int j = 1; j <= M; ++j)
            for (int k = 1; k <= M; ++k) {
                const ObservableReport rep = expect_from_Q(rho, j, k, sample, basis);
                const Complex truth = expectation_fock(rho, j, k, basis);
                const Real dev = std::abs(rep.value - truth);
                const Real norm3 = dev / std::max(3 * rep.mc_stderr, 1e-300);
                worst = std::max(worst, norm3);
                ++total;
                if (norm3 <= 1.0) ++agree;
            }
    }
    res.metrics["cases"] = total;
    res.metrics["agree_fraction"] = static_cast<Real>(agree) / total;
    res.metrics["max_3sigma_normalized_deviation"] = worst;
    res.verified = static_cast<Real>(agree) / total >= 0.95;
    (void)dir;
    return res;
}

}  // namespace detail

/// Execute a validated configuration. Writes artifacts plus manifest.json
/// into the output directory; returns a process exit code.
inline int run(const RunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::filesystem::path dir(cfg.output.directory);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        std::fprintf(stderr, "bhps: cannot create output directory %s\n", dir.string().c_str());
        return kExitConfigError;
    }

    detail::TaskResult result;
    int code = kExitOk;
    try {
        switch (cfg.task) {
            case Task::Exact: result = detail::run_exact(cfg, dir); break;
            case Task::Pde: result = detail::run_pde(cfg, dir); break;
            case Task::Ensemble: result = detail::run_ensemble(cfg, dir); break;
            case Task::Thermo: result = detail::run_thermo(cfg, dir); break;
            case Task::VerifyResidual: result = detail::run_verify_residual(cfg, dir); break;
            case Task::VerifyScaling: result = detail::run_verify_scaling(cfg, dir); break;
            case Task::VerifyIdentity: result = detail::run_verify_identity(cfg, dir); break;
        }
        if (!result.verified) code = kExitVerificationFailure;
    } catch (const NumericalError& e) {
        nlohmann::json err;
        err["error"] = e.what();
        err["type"] = "numerical";
        write_text(dir / "error.json", err.dump(2));
        return kExitNumericalFailure;
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        err["type"] = "config";
        write_text(dir / "error.json", err.dump(2));
        return kExitConfigError;
    }

    const std::string canonical = canonical_config(cfg);
    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["task"] = task_name(cfg.task);
    manifest["config"] = nlohmann::json::parse(canonical);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    manifest["config_hash"] = hash;
    manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    manifest["metrics"] = result.metrics;
    manifest["artifacts"] = result.artifacts;
    manifest["verified"] = result.verified;
    write_text(dir / "manifest.json", manifest.dump(2));
    return code;
}

}  // namespace bhps
