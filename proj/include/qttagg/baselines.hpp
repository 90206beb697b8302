#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "qttagg/models.hpp"
#include "qttagg/risk.hpp"

namespace qttagg {

struct DiscreteDistribution {
    std::vector<double> support;  // strictly increasing
    std::vector<double> pmf;
    void validate() const;
};

struct SampleSet {
    std::vector<double> samples;
    uint64_t seed = 0;
};

// Counter-based uniform in (0, 1): a pure function of (seed, counter).
double counter_uniform(uint64_t seed, uint64_t counter);

// Draw j uses counters j * D + d for component d, so any subrange of draws can
// be regenerated independently.
SampleSet mc_sample(const WeightedSumModel& model, long S, uint64_t seed);

// Empirical CDF (1/S) #{samples <= x}. Sorts a copy of the samples.
std::vector<double> mc_cdf(std::span<const double> samples, std::span<const double> x);
// F (1 - F) / S for each entry
std::vector<double> mc_cdf_variance(std::span<const double> F, long S);

constexpr size_t kConvolutionCap = size_t{1} << 24;

// Exact PMF of a categorical weighted sum. Support points closer than
// 1e-12 times the support span are merged.
DiscreteDistribution recursive_convolution(const WeightedSumModel& model, size_t cap = kConvolutionCap);
// Right-continuous step CDF.
std::vector<double> exact_cdf(const DiscreteDistribution& dist, std::span<const double> x);
// Leftmost support point with F >= alpha, and the matching tail expectation
// VaR + E[(X - VaR)+] / (1 - alpha).
double exact_var(const DiscreteDistribution& dist, double alpha);
double exact_es(const DiscreteDistribution& dist, double alpha);

// VaR is the ceil(alpha S)-th order statistic. ES splits the VaR atom so the
// tail carries exactly (1 - alpha) S samples of weight.
RiskReport mc_var_es(std::span<const double> samples, double alpha);

struct BootstrapError {
    double var_se = 0.0;
    double es_se = 0.0;
    int resamples = 0;
};
BootstrapError bootstrap_var_es(std::span<const double> samples, double alpha, int resamples = 200,
                                uint64_t seed = 1);

void write_distribution_csv(std::ostream& os, const DiscreteDistribution& dist);
DiscreteDistribution read_distribution_csv(std::istream& is);

}  // namespace qttagg
