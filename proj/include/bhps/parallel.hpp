// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace bhps {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
    static std::atomic<int> n{0};
    return n;
}
}  // namespace detail

/// Worker count: explicit setting > BHPS_THREADS env > hardware concurrency.
inline int thread_count() {
    int n = detail::thread_count_slot().load();
    if (n > 0) return n;
    if (const char* env = std::getenv("BHPS_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

inline void set_thread_count(int n) { detail::thread_count_slot().store(n); }

/// Static contiguous partition of [0, n); f(i) must only write state owned by
/// index i, which makes the result independent of the worker count.
template <class F>
void parallel_for(std::ptrdiff_t n, F&& f) {
    const int workers = std::min<std::ptrdiff_t>(thread_count(), n);
    if (workers <= 1 || n < 2) {
        for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    const std::ptrdiff_t chunk = (n + workers - 1) / workers;
    for (int w = 1; w < workers; ++w) {
        const std::ptrdiff_t lo = w * chunk;
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(lo + chunk, n);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &f] {
            for (std::ptrdiff_t i = lo; i < hi; ++i) f(i);
        });
    }
    for (std::ptrdiff_t i = 0; i < std::min(chunk, n); ++i) f(i);
    for (auto& t : pool) t.join();
}

/// Fixed-shape pairwise tree reduction: the summation order depends only on
/// the length, never on the worker count.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace bhps
