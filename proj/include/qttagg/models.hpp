#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qttagg/qtt_grid.hpp"
#include "qttagg/tt_core.hpp"

namespace qttagg {

struct Categorical {
    std::vector<double> values;
    std::vector<double> probs;
};

struct Lognormal {
    double mu = 0.0;
    double sigma = 1.0;
};

using ComponentSpec = std::variant<Categorical, Lognormal>;

Categorical bernoulli(double p);

// X = sum_d w_d X_d with independent components.
struct WeightedSumModel {
    std::vector<ComponentSpec> components;
    std::vector<double> weights;
    bool normalize_weights = false;

    size_t size() const { return components.size(); }
    bool all_categorical() const;
    bool all_lognormal() const;
};

// Checks the invariants, normalises the weights when requested and drops
// zero-weight lognormal components. Errors name the component index.
WeightedSumModel validate_model(WeightedSumModel model);

WeightedSumModel model_from_json(const std::string& text);
std::string model_to_json(const WeightedSumModel& model);

// Binomial(D, p) scaled onto [0, 1]: D Bernoulli(p) components with weight 1/D.
WeightedSumModel binomial_model(int D, double p);

// Characteristic functions --------------------------------------------------

std::vector<cplx> categorical_cf_dense(const Categorical& spec, double w, std::span<const double> omega);
TensorTrain categorical_cf_qtt(const Categorical& spec, double w, const FrequencyGrid& freq, double eps);

struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};
// Rule for the weight exp(-z^2), 1 <= K <= 200.
GaussHermite gauss_hermite(int K);

// Exponential-sum form of the lognormal CF for omega >= 0:
// phi(omega) = sum_k coeffs[k] * exp(-rates[k] * omega), rates > 0.
struct LognormalTerms {
    std::vector<cplx> coeffs;
    std::vector<double> rates;
};
LognormalTerms lognormal_terms(double mu, double sigma, double w, int K = 45);

std::vector<cplx> lognormal_cf_dense(double mu, double sigma, double w, std::span<const double> omega, int K = 45);
TensorTrain lognormal_cf_qtt(double mu, double sigma, double w, const FrequencyGrid& freq, double eps, int K = 45);

std::vector<cplx> gaussian_cf(double mu, double var, std::span<const double> omega);

std::vector<cplx> component_cf_dense(const ComponentSpec& c, double w, std::span<const double> omega);
TensorTrain component_cf_qtt(const ComponentSpec& c, double w, const FrequencyGrid& freq, double eps);

// Gaussian bound on |phi| of a weighted Poisson-binomial model, valid for
// |omega| <= pi / max_d w_d.
double wpb_envelope(const WeightedSumModel& model, double omega);

// Filters --------------------------------------------------------------------

enum class FilterKind { None, RaisedCosine, SharpenedRaisedCosine, Exponential };

struct FilterSpec {
    FilterKind kind = FilterKind::None;
    double alpha = 0.0;  // exponential only; 0 selects -ln(machine epsilon)

    int order() const;
    double effective_alpha() const;
};

FilterSpec filter_from_name(const std::string& name);
std::string filter_name(const FilterSpec& f);

std::vector<double> filter_eval(const FilterSpec& spec, std::span<const double> eta);
TensorTrain filter_qtt(const FilterSpec& spec, const FrequencyGrid& freq, double eps = 1e-12);

// Support bounds ---------------------------------------------------------------

double normal_cdf(double x);
double inv_normal_cdf(double p);
double support_bound_single(double mu, double sigma, double delta);
double support_bound_sum(const WeightedSumModel& model, double delta);

// Moments of w * X used by the Berry-Esseen bound.
struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double abs3 = 0.0;  // E|wX - E wX|^3
};
Moments component_moments(const ComponentSpec& c, double w);

}  // namespace qttagg
