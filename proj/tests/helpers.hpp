#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "qttagg/tt_core.hpp"

namespace testutil {

using qttagg::cplx;
using qttagg::Core;
using qttagg::TensorTrain;

inline cplx rand_c(std::mt19937_64& g) {
    std::normal_distribution<double> nd;
    return {nd(g), nd(g)};
}

// Random binary TT with the given internal bonds.
inline TensorTrain random_tt(std::mt19937_64& g, int n, long bond, long phys = 2) {
    std::vector<Core> cores;
    for (int k = 0; k < n; ++k) {
        Core c(k == 0 ? 1 : bond, phys, k == n - 1 ? 1 : bond);
        for (auto& z : c.data) z = rand_c(g);
        cores.push_back(std::move(c));
    }
    return TensorTrain(std::move(cores));
}

inline std::vector<cplx> random_vec(std::mt19937_64& g, size_t m) {
    std::vector<cplx> v(m);
    for (auto& z : v) z = rand_c(g);
    return v;
}

inline double l2(const std::vector<cplx>& v) {
    double s = 0;
    for (auto& z : v) s += std::norm(z);
    return std::sqrt(s);
}

inline double l2diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

inline double maxdiff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

// Textbook O(M^2) centred transform, written independently of the library.
inline std::vector<cplx> naive_centered_dft(const std::vector<cplx>& v, bool forward) {
    const size_t M = v.size();
    std::vector<cplx> out(M);
    const double pi = std::numbers::pi;
    for (size_t k = 0; k < M; ++k) {
        cplx acc = 0;
        for (size_t m = 0; m < M; ++m) {
            const double ang = (forward ? 2.0 : -2.0) * pi * static_cast<double>((k * m) % M) / static_cast<double>(M);
            const double sgn = forward && (m & 1) ? -1.0 : 1.0;
            acc += sgn * v[m] * std::polar(1.0, ang);
        }
        if (!forward) acc *= ((k & 1) ? -1.0 : 1.0) / static_cast<double>(M);
        out[k] = acc;
    }
    return out;
}

}  // namespace testutil
