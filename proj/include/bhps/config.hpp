// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bhps/generators.hpp"
#include "bhps/types.hpp"

namespace bhps {

enum class Task { Exact, Pde, Ensemble, Thermo, VerifyResidual, VerifyScaling, VerifyIdentity };

inline const char* task_name(Task t) {
    switch (t) {
        case Task::Exact: return "exact";
        case Task::Pde: return "pde";
        case Task::Ensemble: return "ensemble";
        case Task::Thermo: return "thermo";
        case Task::VerifyResidual: return "verify-residual";
        case Task::VerifyScaling: return "verify-scaling";
        case Task::VerifyIdentity: return "verify-identity";
    }
    return "?";
}

struct NumericsConfig {
    int grid_np = 256;
    int grid_nq = 256;
    Real dt = 0.0;            // 0: CFL-chosen
    Real t_final = 1.0;
    Real beta_final = 1.0;
    Real dt_sample = 0.1;
    int samples = 20000;
    int trials = 50;          // verify-identity density matrices
    std::uint64_t seed = 0;
    bool seed_set = false;
    Real cfl = 0.5;
    bool projection = true;
    int filter_kq = -1;
    int filter_kp = -1;
    std::string kind = "Q";      // Q | P | liouville (pde/ensemble); Q | P | classical (thermo)
    std::string order = "full";  // full | first_order
    std::vector<Real> initial_p;  // coherent initial state (defaults set per M)
    std::vector<Real> initial_q;
    Real fd_delta = 1e-4;
    Real margin = 1.0 / 16;
    Real residual_threshold = 1e-3;
    std::vector<Real> sweep_values;
    Real rel_tol = 1e-12;
    Real abs_tol = 1e-14;
};

struct OutputConfig {
    std::string directory = "out";
    bool csv = true;
    bool json_files = true;
};

struct RunConfig {
    HamiltonianParams model;
    int particles = 0;
    Task task = Task::Exact;
    NumericsConfig numerics;
    OutputConfig output;
};

struct ParseResult {
    std::optional<RunConfig> config;
    std::vector<std::string> errors;

    bool ok() const { return errors.empty() && config.has_value(); }
};

namespace detail {

inline bool check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                       const std::string& where, std::vector<std::string>& errors) {
    bool ok = true;
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) {
            errors.push_back(where + ": unknown key '" + it.key() + "'");
            ok = false;
        }
    return ok;
}

template <class T>
bool read_field(const nlohmann::json& obj, const std::string& key, T& out,
                const std::string& where, std::vector<std::string>& errors) {
    if (!obj.contains(key)) return true;
    try {
        out = obj.at(key).get<T>();
        return true;
    } catch (const std::exception&) {
        errors.push_back(where + "." + key + ": wrong type");
        return false;
    }
}

}  // namespace detail

/// Strict parse: unknown keys are rejected, missing required fields and
/// domain violations are reported per field.
inline ParseResult parse_config(const std::string& text) {
    ParseResult result;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        result.errors.push_back(std::string("config: invalid JSON: ") + e.what());
        return result;
    }
    auto& errors = result.errors;
    detail::check_keys(doc, {"model", "task", "numerics", "output"}, "config", errors);
    RunConfig cfg;

    if (!doc.contains("model")) {
        errors.push_back("config.model: missing");
    } else {
        const auto& m = doc["model"];
        detail::check_keys(m, {"sites", "particles", "onsite", "hopping", "interaction",
                               "periodic"},
                           "model", errors);
        int M = 0;
        if (!m.contains("sites"))
            errors.push_back("model.sites: missing");
        else
            detail::read_field(m, "sites", M, "model", errors);
        if (M < 1 && m.contains("sites")) errors.push_back("model.sites: must be >= 1");
        if (!m.contains("particles"))
            errors.push_back("model.particles: missing");
        else
            detail::read_field(m, "particles", cfg.particles, "model", errors);
        if (cfg.particles < 0) errors.push_back("model.particles: must be non-negative");
        std::vector<Real> onsite(std::max(M, 0), 0.0);
        detail::read_field(m, "onsite", onsite, "model", errors);
        if (M >= 1) {
            if (static_cast<int>(onsite.size()) != M)
                errors.push_back("model.onsite: length must equal sites");
            else {
                cfg.model.onsite = VectorXd::Zero(M);
                for (int i = 0; i < M; ++i) cfg.model.onsite[i] = onsite[i];
            }
        }
        detail::read_field(m, "hopping", cfg.model.hopping, "model", errors);
        detail::read_field(m, "interaction", cfg.model.interaction, "model", errors);
        detail::read_field(m, "periodic", cfg.model.periodic, "model", errors);
    }

    if (!doc.contains("task")) {
        errors.push_back("config.task: missing");
    } else {
        const std::string t = doc["task"].is_string() ? doc["task"].get<std::string>() : "";
        bool found = false;
        for (Task task : {Task::Exact, Task::Pde, Task::Ensemble, Task::Thermo,
                          Task::VerifyResidual, Task::VerifyScaling, Task::VerifyIdentity})
            if (t == task_name(task)) {
                cfg.task = task;
                found = true;
            }
        if (!found) errors.push_back("config.task: unknown task '" + t + "'");
    }

    if (doc.contains("numerics")) {
        const auto& n = doc["numerics"];
        auto& num = cfg.numerics;
        detail::check_keys(
            n,
            {"grid_np", "grid_nq", "dt", "t_final", "beta_final", "dt_sample", "samples",
             "trials", "seed", "cfl", "projection", "filter_kq", "filter_kp", "kind", "order",
             "initial_p", "initial_q", "fd_delta", "margin", "residual_threshold",
             "sweep_values", "rel_tol", "abs_tol"},
            "numerics", errors);
        detail::read_field(n, "grid_np", num.grid_np, "numerics", errors);
        detail::read_field(n, "grid_nq", num.grid_nq, "numerics", errors);
        detail::read_field(n, "dt", num.dt, "numerics", errors);
        detail::read_field(n, "t_final", num.t_final, "numerics", errors);
        detail::read_field(n, "beta_final", num.beta_final, "numerics", errors);
        detail::read_field(n, "dt_sample", num.dt_sample, "numerics", errors);
        detail::read_field(n, "samples", num.samples, "numerics", errors);
        detail::read_field(n, "trials", num.trials, "numerics", errors);
        if (n.contains("seed")) {
            detail::read_field(n, "seed", num.seed, "numerics", errors);
            num.seed_set = true;
        }
        detail::read_field(n, "cfl", num.cfl, "numerics", errors);
        detail::read_field(n, "projection", num.projection, "numerics", errors);
        detail::read_field(n, "filter_kq", num.filter_kq, "numerics", errors);
        detail::read_field(n, "filter_kp", num.filter_kp, "numerics", errors);
        detail::read_field(n, "kind", num.kind, "numerics", errors);
        detail::read_field(n, "order", num.order, "numerics", errors);
        detail::read_field(n, "initial_p", num.initial_p, "numerics", errors);
        detail::read_field(n, "initial_q", num.initial_q, "numerics", errors);
        detail::read_field(n, "fd_delta", num.fd_delta, "numerics", errors);
        detail::read_field(n, "margin", num.margin, "numerics", errors);
        detail::read_field(n, "residual_threshold", num.residual_threshold, "numerics", errors);
        detail::read_field(n, "sweep_values", num.sweep_values, "numerics", errors);
        detail::read_field(n, "rel_tol", num.rel_tol, "numerics", errors);
        detail::read_field(n, "abs_tol", num.abs_tol, "numerics", errors);
    }

    if (doc.contains("output")) {
        const auto& o = doc["output"];
        detail::check_keys(o, {"directory", "formats"}, "output", errors);
        detail::read_field(o, "directory", cfg.output.directory, "output", errors);
        if (o.contains("formats")) {
            std::vector<std::string> fmts;
            detail::read_field(o, "formats", fmts, "output", errors);
            cfg.output.csv = cfg.output.json_files = false;
            for (const auto& f : fmts) {
                if (f == "csv")
                    cfg.output.csv = true;
                else if (f == "json")
                    cfg.output.json_files = true;
                else
                    errors.push_back("output.formats: unknown format '" + f + "'");
            }
        }
    }

    // domain checks
    auto positive = [&](Real v, const char* name) {
        if (!(v > 0)) errors.push_back(std::string(name) + ": must be positive");
    };
    positive(cfg.numerics.grid_np, "numerics.grid_np");
    positive(cfg.numerics.grid_nq, "numerics.grid_nq");
    positive(cfg.numerics.samples, "numerics.samples");
    positive(cfg.numerics.cfl, "numerics.cfl");
    positive(cfg.numerics.rel_tol, "numerics.rel_tol");
    if (cfg.numerics.dt < 0) errors.push_back("numerics.dt: must be >= 0");
    if (cfg.numerics.beta_final < 0) errors.push_back("numerics.beta_final: must be >= 0");
    const bool stochastic = cfg.task == Task::Ensemble || cfg.task == Task::VerifyScaling ||
                            cfg.task == Task::VerifyIdentity;
    if (stochastic && !cfg.numerics.seed_set)
        errors.push_back("numerics.seed: required for stochastic tasks");
    if (cfg.numerics.kind != "Q" && cfg.numerics.kind != "P" &&
        cfg.numerics.kind != "liouville" && cfg.numerics.kind != "classical")
        errors.push_back("numerics.kind: must be one of Q, P, liouville, classical");
    if (cfg.numerics.order != "full" && cfg.numerics.order != "first_order")
        errors.push_back("numerics.order: must be 'full' or 'first_order'");
    const int M = cfg.model.sites();
    if (M >= 1) {
        if (!cfg.numerics.initial_p.empty() &&
            static_cast<int>(cfg.numerics.initial_p.size()) != M)
            errors.push_back("numerics.initial_p: length must equal sites");
        if (!cfg.numerics.initial_q.empty() &&
            static_cast<int>(cfg.numerics.initial_q.size()) != M)
            errors.push_back("numerics.initial_q: length must equal sites");
    }

    if (errors.empty()) result.config = cfg;
    return result;
}

/// Canonical re-emission (alphabetically ordered keys, defaults filled).
inline std::string canonical_config(const RunConfig& cfg) {
    nlohmann::json doc;
    doc["model"]["sites"] = cfg.model.sites();
    doc["model"]["particles"] = cfg.particles;
    doc["model"]["onsite"] = std::vector<Real>(cfg.model.onsite.data(),
                                               cfg.model.onsite.data() + cfg.model.sites());
    doc["model"]["hopping"] = cfg.model.hopping;
    doc["model"]["interaction"] = cfg.model.interaction;
    doc["model"]["periodic"] = cfg.model.periodic;
    doc["task"] = task_name(cfg.task);
    const auto& n = cfg.numerics;
    auto& nj = doc["numerics"];
    nj["grid_np"] = n.grid_np;
    nj["grid_nq"] = n.grid_nq;
    nj["dt"] = n.dt;
    nj["t_final"] = n.t_final;
    nj["beta_final"] = n.beta_final;
    nj["dt_sample"] = n.dt_sample;
    nj["samples"] = n.samples;
    nj["trials"] = n.trials;
    if (n.seed_set) nj["seed"] = n.seed;
    nj["cfl"] = n.cfl;
    nj["projection"] = n.projection;
    nj["filter_kq"] = n.filter_kq;
    nj["filter_kp"] = n.filter_kp;
    nj["kind"] = n.kind;
    nj["order"] = n.order;
    if (!n.initial_p.empty()) nj["initial_p"] = n.initial_p;
    if (!n.initial_q.empty()) nj["initial_q"] = n.initial_q;
    nj["fd_delta"] = n.fd_delta;
    nj["margin"] = n.margin;
    nj["residual_threshold"] = n.residual_threshold;
    if (!n.sweep_values.empty()) nj["sweep_values"] = n.sweep_values;
    nj["rel_tol"] = n.rel_tol;
    nj["abs_tol"] = n.abs_tol;
    doc["output"]["directory"] = cfg.output.directory;
    std::vector<std::string> fmts;
    if (cfg.output.csv) fmts.push_back("csv");
    if (cfg.output.json_files) fmts.push_back("json");
    doc["output"]["formats"] = fmts;
    return doc.dump(2);
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace bhps
