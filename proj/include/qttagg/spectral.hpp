#pragma once

#include <span>
#include <string>
#include <vector>

#include "qttagg/fourier.hpp"
#include "qttagg/models.hpp"
#include "qttagg/qtt_grid.hpp"
#include "qttagg/tt_core.hpp"

namespace qttagg {

enum class Representation { Dense, Qtt };
enum class Quantity { Cdf, Pdf };

struct StepRecord {
    int step = 0;  // component index, or -1 for filter/kernel/transform steps
    std::string label;
    long peak_bond = 0;
    long final_bond = 0;
    double seconds = 0.0;
    size_t bytes = 0;
};

struct Diagnostics {
    std::vector<StepRecord> steps;
    long peak_bond = 0;
    long final_max_bond = 0;
    std::vector<long> final_bonds;
    double wall_seconds = 0.0;
    size_t peak_bytes = 0;
    size_t final_bytes = 0;
    double imag_residue = 0.0;  // ||Im|| / ||Re|| of the reconstruction
    int failed_step = -1;
    std::string error;
};

std::string diagnostics_json(const Diagnostics& d);

struct SpectralOptions {
    double eps = 1e-8;          // QTT truncation tolerance (relative L2)
    bool filter_last = false;   // apply the filter after the CF products
    bool tree = false;          // pairwise product reduction instead of sequential
    double origin = 0.0;        // grid is [origin, origin + L)
    double imag_tol = 1e-6;     // relative imaginary residue that raises NumericFailure (QTT: at least 10 eps)
    int dense_cap = 24;         // largest n accepted by the dense pipeline
};

// Reconstructed CDF or density on the N = 2^n points origin + j L / N.
struct CdfApproximation {
    Quantity quantity = Quantity::Cdf;
    Representation representation = Representation::Dense;
    GridSpec grid;
    FilterSpec filter;
    double eps = 0.0;
    std::vector<double> values;  // dense payload
    TensorTrain tt;              // QTT payload (complex; the real part is the result)
    Diagnostics diag;

    std::vector<double> to_dense() const;
    double at(long j) const;
};

// Filtered CF on the padded frequency grid of frequency_grid(n, L), including
// the origin shift.
std::vector<cplx> model_cf_dense(const WeightedSumModel& model, const FilterSpec& filter, const FrequencyGrid& freq,
                                 double origin = 0.0);

// Inversion of CF samples on the padded grid (length 2^(n+1)).
CdfApproximation dense_spectral_from_cf(std::vector<cplx> phi, int n, double L, Quantity q,
                                        const SpectralOptions& opts = {});

CdfApproximation dense_spectral_cdf(const WeightedSumModel& model, const FilterSpec& filter, int n, double L,
                                    const SpectralOptions& opts = {});
CdfApproximation dense_spectral_pdf(const WeightedSumModel& model, const FilterSpec& filter, int n, double L,
                                    const SpectralOptions& opts = {});

// Filtered CF as a QTT with per-step truncation. Records one StepRecord per
// Hadamard product.
TensorTrain model_cf_qtt(const WeightedSumModel& model, const FilterSpec& filter, const FrequencyGrid& freq,
                         const SpectralOptions& opts, Diagnostics* diag = nullptr);

CdfApproximation qtt_spectral_from_cf(const TensorTrain& phi, int n, double L, Quantity q,
                                      const SpectralOptions& opts = {}, Diagnostics diag = {});

CdfApproximation qtt_spectral_cdf(const WeightedSumModel& model, const FilterSpec& filter, int n, double L,
                                  const SpectralOptions& opts = {});
CdfApproximation qtt_spectral_pdf(const WeightedSumModel& model, const FilterSpec& filter, int n, double L,
                                  const SpectralOptions& opts = {});

struct ErrorMetrics {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double median = 0.0;
    double q90 = 0.0;
    double q99 = 0.0;
};

// L1 and L2 carry dx weights.
ErrorMetrics error_metrics(std::span<const double> approx, std::span<const double> reference, double dx);
ErrorMetrics error_metrics(const CdfApproximation& approx, std::span<const double> reference);
double quantile_of(std::vector<double> values, double q);

// Width of the largest contiguous run of |error| > threshold containing the
// grid cell of each jump.
std::vector<double> gibbs_band_width(std::span<const double> pointwise_error, const GridSpec& grid,
                                     std::span<const double> jumps, double threshold);

// dx-weighted L2 distance between the even nodes of the fine result and the
// coarse result (divided by the coarse norm when relative).
double self_error(const CdfApproximation& fine, const CdfApproximation& coarse, bool relative = false);
double self_error_dense(std::span<const double> fine, std::span<const double> coarse, double dx_coarse,
                        bool relative = false);
// Restriction to even nodes in QTT form: fixes the last digit to 0.
TensorTrain subsample_even(const TensorTrain& tt);

double berry_esseen_bound(const WeightedSumModel& model);
constexpr double kBerryEsseenC = 0.5583;

}  // namespace qttagg
