// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0
//
// Batch driver for the Bose-Hubbard phase-space toolkit.
//
//   bhps simulate --config cfg.json [--out dir] [--threads n] [--seed s]
//   bhps verify   --config cfg.json ...
//   bhps sweep    --config cfg.json ...
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 verification failure.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bhps/config.hpp"
#include "bhps/parallel.hpp"
#include "bhps/run.hpp"

namespace {

std::string read_file(const std::string& path, bool& ok) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ok = false;
        return {};
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ok = true;
    return buf.str();
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "path to a JSON run configuration")
        ->required();
    cmd->add_option("--out", flags.out_dir, "output directory (overrides output.directory)");
    cmd->add_option("--threads", flags.threads,
                    "worker threads (default: BHPS_THREADS or hardware)");
    cmd->add_option("--seed", flags.seed, "override numerics.seed")
        ->each([&](const std::string&) { flags.seed_given = true; });
}

int execute(const CommonFlags& flags, const char* command) {
    bool ok = true;
    const std::string text = read_file(flags.config_path, ok);
    if (!ok) {
        std::fprintf(stderr, "bhps: cannot read config file '%s'\n", flags.config_path.c_str());
        return bhps::kExitConfigError;
    }
    bhps::ParseResult parsed = bhps::parse_config(text);
    if (!parsed.ok()) {
        std::fprintf(stderr, "bhps: configuration errors:\n");
        for (const auto& e : parsed.errors) std::fprintf(stderr, "  - %s\n", e.c_str());
        return bhps::kExitConfigError;
    }
    bhps::RunConfig cfg = *parsed.config;

    const bool is_verify = cfg.task == bhps::Task::VerifyResidual ||
                           cfg.task == bhps::Task::VerifyScaling ||
                           cfg.task == bhps::Task::VerifyIdentity;
    const std::string cmd(command);
    if (cmd == "verify" && !is_verify) {
        std::fprintf(stderr, "bhps verify: config task '%s' is not a verification task\n",
                     bhps::task_name(cfg.task));
        return bhps::kExitConfigError;
    }
    if (cmd == "simulate" && is_verify) {
        std::fprintf(stderr, "bhps simulate: use the verify command for task '%s'\n",
                     bhps::task_name(cfg.task));
        return bhps::kExitConfigError;
    }
    if (cmd == "sweep" && cfg.numerics.sweep_values.empty()) {
        std::fprintf(stderr, "bhps sweep: numerics.sweep_values must be set\n");
        return bhps::kExitConfigError;
    }

    if (!flags.out_dir.empty()) cfg.output.directory = flags.out_dir;
    if (flags.seed_given) {
        cfg.numerics.seed = flags.seed;
        cfg.numerics.seed_set = true;
    }
    if (flags.threads > 0) bhps::set_thread_count(flags.threads);

    const int code = bhps::run(cfg);
    if (code == bhps::kExitOk)
        std::printf("bhps %s: ok (%s/manifest.json)\n", command, cfg.output.directory.c_str());
    else
        std::fprintf(stderr, "bhps %s: exit code %d\n", command, code);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bose-Hubbard phase-space simulation toolkit"};
    app.require_subcommand(1);

    CommonFlags f_sim, f_ver, f_sweep;
    CLI::App* sim = app.add_subcommand("simulate", "run exact/pde/ensemble/thermo tasks");
    CLI::App* ver = app.add_subcommand("verify", "run verification suites");
    CLI::App* swp = app.add_subcommand("sweep", "run a parameter sweep (numerics.sweep_values)");
    add_common(sim, f_sim);
    add_common(ver, f_ver);
    add_common(swp, f_sweep);

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) return execute(f_sim, "simulate");
    if (ver->parsed()) return execute(f_ver, "verify");
    return execute(f_sweep, "sweep");
}
