// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "bhps/types.hpp"

namespace bhps {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 complex FFT. sign = -1: forward, +1: inverse
/// (inverse is unscaled; caller divides by n).
inline void fft_pow2(Complex* a, int n, int sign) {
    if (!is_pow2(n)) throw std::invalid_argument("fft_pow2: length must be a power of two");
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * kPi / len;
        const Complex wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline void fft(std::vector<Complex>& a) { fft_pow2(a.data(), static_cast<int>(a.size()), -1); }

inline void ifft(std::vector<Complex>& a) {
    const int n = static_cast<int>(a.size());
    fft_pow2(a.data(), n, +1);
    for (auto& z : a) z /= static_cast<double>(n);
}

/// Orthonormal DCT-II via one same-length FFT (even/odd reordering).
inline void dct2(const double* x, double* y, int n) {
    std::vector<Complex> v(n);
    for (int i = 0; 2 * i < n; ++i) v[i] = x[2 * i];
    for (int i = 0; 2 * i + 1 < n; ++i) v[n - 1 - i] = x[2 * i + 1];
    fft_pow2(v.data(), n, -1);
    const double s0 = std::sqrt(1.0 / n);
    const double s = std::sqrt(2.0 / n);
    for (int k = 0; k < n; ++k) {
        const Complex w = std::exp(Complex(0.0, -kPi * k / (2.0 * n)));
        y[k] = (k == 0 ? s0 : s) * (w * v[k]).real();
    }
}

/// Orthonormal DCT-III (inverse of dct2): V_k = e^{i pi k/(2n)} (u_k - i u_{n-k}),
/// u = unnormalized DCT-II coefficients, then one inverse FFT and un-reorder.
inline void dct3(const double* y, double* x, int n) {
    const double s0 = std::sqrt(1.0 / n);
    const double s = std::sqrt(2.0 / n);
    std::vector<double> u(n + 1);
    for (int k = 0; k < n; ++k) u[k] = y[k] / (k == 0 ? s0 : s);
    u[n] = 0.0;
    std::vector<Complex> v(n);
    for (int k = 0; k < n; ++k) {
        const Complex w = std::exp(Complex(0.0, kPi * k / (2.0 * n)));
        v[k] = w * Complex(u[k], -u[n - k]);
    }
    fft_pow2(v.data(), n, +1);
    for (auto& z : v) z /= static_cast<double>(n);
    for (int i = 0; 2 * i < n; ++i) x[2 * i] = v[i].real();
    for (int i = 0; 2 * i + 1 < n; ++i) x[2 * i + 1] = v[n - 1 - i].real();
}

}  // namespace bhps
