// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "bhps/dynamics.hpp"
#include "bhps/expectation.hpp"
#include "bhps/grid.hpp"
#include "bhps/types.hpp"

namespace bhps {

using nlohmann::json;

/// Full-precision scientific notation (17 significant digits) for every
/// numeric CSV field, so emitted data can be compared across languages.
inline std::string format_full(Real v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
}

/// Grid snapshot: CSV body (p_2, q_2, value) ordered row-major in p then q.
inline std::string grid_csv(const PhaseGrid2& grid) {
    std::ostringstream out;
    out << "p2,q2,value\n";
    for (int i = 0; i < grid.np; ++i)
        for (int j = 0; j < grid.nq; ++j)
            out << format_full(grid.p[i]) << ',' << format_full(grid.q[j]) << ','
                << format_full(grid.values(i, j)) << '\n';
    return out.str();
}

inline json grid_header(const PhaseGrid2& grid, int M, int N, Real time_or_beta,
                        const std::string& label) {
    json h;
    h["sites"] = M;
    h["particles"] = N;
    h["np"] = grid.np;
    h["nq"] = grid.nq;
    h["kind"] = label;
    h["time"] = time_or_beta;
    return h;
}

/// Point-cloud / ensemble snapshot: p_2..p_M, q_2..q_M (+ optional weight).
inline std::string points_csv(const std::vector<PhasePoint>& pts, const VectorXd* weights) {
    std::ostringstream out;
    const int M = pts.empty() ? 0 : pts.front().sites();
    for (int k = 2; k <= M; ++k) out << "p" << k << ',';
    for (int k = 2; k <= M; ++k) out << "q" << k << (k < M ? "," : "");
    if (weights) out << ",weight";
    out << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (int k = 1; k < M; ++k) out << format_full(pts[i].p[k]) << ',';
        for (int k = 1; k < M; ++k) out << format_full(pts[i].q[k]) << (k + 1 < M ? "," : "");
        if (weights) out << ',' << format_full((*weights)[static_cast<int>(i)]);
        out << '\n';
    }
    return out.str();
}

inline json report_row(const ObservableReport& rep, int M, int N, Real t) {
    json r;
    r["j"] = rep.j;
    r["k"] = rep.k;
    r["re"] = rep.value.real();
    r["im"] = rep.value.imag();
    r["stderr"] = rep.mc_stderr;
    r["estimator"] = estimator_name(rep.estimator);
    r["N"] = N;
    r["M"] = M;
    r["t"] = t;
    return r;
}

/// Minimal grid CSV reader (round-trip tests and downstream consumers).
inline PhaseGrid2 read_grid_csv(const std::filesystem::path& path, int np, int nq) {
    PhaseGrid2 g(np, nq);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);  // header
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < nq; ++j) {
            if (!std::getline(in, line)) throw std::runtime_error("grid csv truncated");
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            g.values(i, j) = std::stod(line.substr(c2 + 1));
        }
    return g;
}

}  // namespace bhps
