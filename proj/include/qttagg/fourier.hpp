#pragma once

#include <memory>
#include <span>
#include <vector>

#include "qttagg/qtt_grid.hpp"
#include "qttagg/tt_core.hpp"

namespace qttagg {

// Centred transform pair on M = 2^n points:
//   forward: out_k = sum_m v_m (-1)^m exp(+2 pi i k m / M)
//   inverse: out_m = (-1)^m / M * sum_k v_k exp(-2 pi i k m / M)
// With omega_k = -Omega + k dOmega and x_m = m dx (Omega dx = pi), the forward
// kernel is exp(i omega_k x_m), the characteristic-function sign.
enum class Direction { Forward, Inverse };

std::vector<cplx> dense_dft(std::span<const cplx> values, Direction dir);
void dense_dft_inplace(std::vector<cplx>& values, Direction dir);

// Plain (uncentred) DFT as a QTT operator. Output digits come out in reversed
// site order; apply_fourier undoes this by reversing the cores of the result.
// Cached per (n, direction).
std::shared_ptr<const TtOperator> qft_operator(int n, Direction dir);

TensorTrain apply_fourier(const TensorTrain& tt, Direction dir, double eps, TruncStats* stats = nullptr);

// Reverses core order (and swaps each core's bonds): digit order flips.
TensorTrain reverse_cores(const TensorTrain& tt);

// sum_{j<N} exp(i omega_k j dx) on the padded centred grid, built as the
// forward transform of the first-half indicator.
TensorTrain dirichlet_kernel_qtt(const FrequencyGrid& freq, double eps = 1e-14);
std::vector<cplx> dirichlet_kernel_dense(const FrequencyGrid& freq);

// Keeps entries with leading digit 0 (the first half).
TensorTrain project_lower_half(const TensorTrain& tt);

}  // namespace qttagg
