#pragma once

#include <cstdint>

#include "qttagg/models.hpp"

namespace qttagg {

// Weighted Poisson-binomial on [0, 1]: w_d ~ U(0, 1) normalised to sum 1,
// p_d ~ Beta(2, 10).
WeightedSumModel wpb_instance(int D, uint64_t seed);

// Lognormal sum: mu_d ~ U(-1, 1), sigma_d ~ U(1, 3), w_d ~ U(0, 1) normalised.
WeightedSumModel lognormal_sum_instance(int D, uint64_t seed);

}  // namespace qttagg
