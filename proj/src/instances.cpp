#include "qttagg/instances.hpp"

#include <random>

namespace qttagg {

namespace {

double beta_draw(std::mt19937_64& g, double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    const double x = ga(g);
    const double y = gb(g);
    return x / (x + y);
}

}  // namespace

WeightedSumModel wpb_instance(int D, uint64_t seed) {
    if (D < 1) throw InvalidArgument("wpb_instance: D must be positive");
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    WeightedSumModel m;
    for (int d = 0; d < D; ++d) {
        m.weights.push_back(U(g));
        m.components.emplace_back(bernoulli(beta_draw(g, 2.0, 10.0)));
    }
    m.normalize_weights = true;
    return validate_model(m);
}

WeightedSumModel lognormal_sum_instance(int D, uint64_t seed) {
    if (D < 1) throw InvalidArgument("lognormal_sum_instance: D must be positive");
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    WeightedSumModel m;
    for (int d = 0; d < D; ++d) {
        const double mu = -1.0 + 2.0 * U(g);
        const double sigma = 1.0 + 2.0 * U(g);
        m.components.emplace_back(Lognormal{mu, sigma});
        m.weights.push_back(U(g));
    }
    m.normalize_weights = true;
    return validate_model(m);
}

}  // namespace qttagg
