#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qttagg/tt_core.hpp"

namespace qttagg {

// Uniform half-open grid [a, b) with N = 2^n points, big-endian digits.
struct GridSpec {
    double a = 0.0;
    double b = 1.0;
    int n = 1;

    long N() const { return 1L << n; }
    double length() const { return b - a; }
    double dx() const { return (b - a) / static_cast<double>(N()); }
    double point(long j) const { return a + dx() * static_cast<double>(j); }
    void validate() const;
};

// Centred, zero-padded frequency grid: 2N points omega_k = -Omega + k * Omega / N
// encoded with n_pad = n + 1 cores.
struct FrequencyGrid {
    double omega_max = 0.0;
    int n_pad = 2;

    long N() const { return 1L << (n_pad - 1); }
    long M() const { return 1L << n_pad; }
    double d_omega() const { return omega_max / static_cast<double>(N()); }
    double omega(long k) const { return -omega_max + d_omega() * static_cast<double>(k); }
    GridSpec as_grid() const { return GridSpec{-omega_max, omega_max, n_pad}; }
};

// Omega = pi N / L for a spatial grid of N = 2^n points on [0, L).
FrequencyGrid frequency_grid(int n, double L);

double index_to_point(const GridSpec& grid, std::span<const int> digits);
long digits_to_index(std::span<const int> digits);
std::vector<int> index_to_digits(long j, int n);

TensorTrain qtt_constant(int n, cplx c);
TensorTrain qtt_exponential(const GridSpec& grid, cplx c, cplx lambda);
TensorTrain qtt_sum_of_exponentials(const GridSpec& grid, std::span<const cplx> coeffs,
                                    std::span<const cplx> rates);
// alpha + beta * x, bond 2.
TensorTrain qtt_linear(const GridSpec& grid, cplx alpha, cplx beta);

enum class StepSense { AtOrAbove, Below };
TensorTrain qtt_step(int n, long j0, StepSense sense);

struct ChebyshevInfo {
    int order = 0;          // degree actually used
    double estimate = 0.0;  // estimated sup-norm error
};

// Chebyshev interpolant of f on [grid.a, grid.b] evaluated in QTT form with
// Clenshaw's recurrence. Order is doubled from 16 until the last two
// coefficients drop below eps * max|c|.
TensorTrain qtt_chebyshev(const GridSpec& grid, const std::function<cplx(double)>& f, int max_order,
                          double eps, ChebyshevInfo* info = nullptr);
// Coefficients of the degree-K Chebyshev interpolant of f on [-1, 1].
std::vector<cplx> chebyshev_coefficients(const std::function<cplx(double)>& f, int K);

// First digit selects the half: 0 -> neg, 1 -> pos.
TensorTrain qtt_piecewise_halves(const TensorTrain& neg, const TensorTrain& pos);

}  // namespace qttagg
