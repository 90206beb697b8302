#pragma once

#include <span>
#include <string>
#include <vector>

#include "qttagg/spectral.hpp"

namespace qttagg {

struct QuantileSearch {
    std::vector<int> digits;
    long index = 0;
    long contractions = 0;  // matrix-vector products with core slices
};

// Binary search for the leftmost index with Re F_j >= alpha on a CDF stored
// as a QTT. Right environments along the all-ones branch are built once, then
// each digit is fixed by one probe.
QuantileSearch qtt_quantile(const TensorTrain& cdf, double alpha);
// The same probe sequence on a dense array.
QuantileSearch dense_quantile(std::span<const double> cdf, double alpha);

// order 1: dx everywhere. order 2: trapezoid, dx with half weights at both ends.
TensorTrain quadrature_weights_qtt(const GridSpec& grid, int order);

struct RiskOptions {
    bool clamp = false;  // search on the running maximum of F
};

struct RiskReport {
    double alpha = 0.0;
    double var = 0.0;
    long var_index = 0;
    double es = 0.0;
    Representation representation = Representation::Dense;
    double seconds = 0.0;
    long contractions = 0;
    double tail_residual = 0.0;  // 1 - F at the last grid point
    bool degenerate_tail = false;
};

struct VarResult {
    double var = 0.0;
    long index = 0;
    long contractions = 0;
};

VarResult value_at_risk(const CdfApproximation& cdf, double alpha, const RiskOptions& opts = {});
// VaR + (1 - alpha)^-1 * integral of (1 - F) from VaR to the end of the grid,
// trapezoid with half weights at the VaR node and at the last node.
double expected_shortfall(const CdfApproximation& cdf, double alpha, long var_index);

RiskReport risk_report(const CdfApproximation& cdf, double alpha, const RiskOptions& opts = {});
std::string risk_json(const std::vector<RiskReport>& reports);

}  // namespace qttagg
