#include "qttagg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace qttagg {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void check_alpha(double alpha, const char* what) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument(std::string(what) + ": alpha must lie in (0, 1)");
}

// ceil(alpha S) guarded against alpha S landing an ulp above an integer
long order_index(double alpha, size_t S) {
    const double t = alpha * static_cast<double>(S);
    const double r = std::round(t);
    long k = std::abs(t - r) <= 1e-9 * std::max(1.0, t) ? static_cast<long>(r) : static_cast<long>(std::ceil(t));
    return std::clamp(k, 1L, static_cast<long>(S));
}

}  // namespace

void DiscreteDistribution::validate() const {
    if (support.size() != pmf.size() || support.empty()) throw InvalidArgument("distribution: support/pmf size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < pmf.size(); ++i) {
        if (!(pmf[i] >= 0.0)) throw InvalidArgument("distribution: negative probability");
        if (i > 0 && !(support[i] > support[i - 1])) throw InvalidArgument("distribution: support must be strictly increasing");
        s += pmf[i];
    }
    if (std::abs(s - 1.0) > 1e-10) throw InvalidArgument("distribution: pmf does not sum to 1");
}

double counter_uniform(uint64_t seed, uint64_t counter) {
    const uint64_t bits = splitmix64(splitmix64(seed) ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

SampleSet mc_sample(const WeightedSumModel& model, long S, uint64_t seed) {
    if (S < 1) throw InvalidArgument("mc_sample: S must be positive");
    const size_t D = model.size();
    // cumulative probabilities per categorical component
    std::vector<std::vector<double>> cum(D);
    for (size_t d = 0; d < D; ++d) {
        if (const auto* c = std::get_if<Categorical>(&model.components[d])) {
            cum[d].resize(c->probs.size());
            std::partial_sum(c->probs.begin(), c->probs.end(), cum[d].begin());
        }
    }
    SampleSet out;
    out.seed = seed;
    out.samples.resize(static_cast<size_t>(S));
    for (long j = 0; j < S; ++j) {
        double x = 0.0;
        for (size_t d = 0; d < D; ++d) {
            const double u = counter_uniform(seed, static_cast<uint64_t>(j) * D + d);
            const double w = model.weights[d];
            if (const auto* c = std::get_if<Categorical>(&model.components[d])) {
                const size_t k = static_cast<size_t>(std::upper_bound(cum[d].begin(), cum[d].end(), u) - cum[d].begin());
                x += w * c->values[std::min(k, c->values.size() - 1)];
            } else {
                const auto& ln = std::get<Lognormal>(model.components[d]);
                x += w * std::exp(ln.mu + ln.sigma * inv_normal_cdf(u));
            }
        }
        out.samples[static_cast<size_t>(j)] = x;
    }
    return out;
}

std::vector<double> mc_cdf(std::span<const double> samples, std::span<const double> x) {
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    std::vector<double> F(x.size());
    if (s.empty()) return F;
    const double S = static_cast<double>(s.size());
    for (size_t i = 0; i < x.size(); ++i) F[i] = static_cast<double>(std::upper_bound(s.begin(), s.end(), x[i]) - s.begin()) / S;
    return F;
}

std::vector<double> mc_cdf_variance(std::span<const double> F, long S) {
    if (S < 1) throw InvalidArgument("mc_cdf_variance: S must be positive");
    std::vector<double> v(F.size());
    for (size_t i = 0; i < F.size(); ++i) v[i] = F[i] * (1.0 - F[i]) / static_cast<double>(S);
    return v;
}

DiscreteDistribution recursive_convolution(const WeightedSumModel& model, size_t cap) {
    if (!model.all_categorical()) throw InvalidArgument("recursive_convolution: all components must be categorical");
    double span = 0.0;
    for (size_t d = 0; d < model.size(); ++d) {
        const auto& c = std::get<Categorical>(model.components[d]);
        const auto [lo, hi] = std::minmax_element(c.values.begin(), c.values.end());
        span += std::abs(model.weights[d]) * (*hi - *lo);
    }
    const double quantum = 1e-12 * (span > 0.0 ? span : 1.0);

    // key -> (position, mass)
    std::map<long long, std::pair<double, double>> cur{{0, {0.0, 1.0}}};
    for (size_t d = 0; d < model.size(); ++d) {
        const auto& c = std::get<Categorical>(model.components[d]);
        const double w = model.weights[d];
        std::map<long long, std::pair<double, double>> next;
        for (const auto& [key, xp] : cur) {
            for (size_t k = 0; k < c.values.size(); ++k) {
                if (c.probs[k] == 0.0) continue;
                const double x = xp.first + w * c.values[k];
                auto [it, fresh] = next.try_emplace(std::llround(x / quantum), x, 0.0);
                it->second.second += xp.second * c.probs[k];
            }
        }
        if (next.size() > cap) {
            throw ResourceLimitError("recursive_convolution: support size " + std::to_string(next.size()) +
                                         " exceeds the cap " + std::to_string(cap),
                                     0, static_cast<int>(d));
        }
        cur = std::move(next);
    }
    DiscreteDistribution out;
    out.support.reserve(cur.size());
    out.pmf.reserve(cur.size());
    for (const auto& [key, xp] : cur) {
        out.support.push_back(xp.first);
        out.pmf.push_back(xp.second);
    }
    return out;
}

std::vector<double> exact_cdf(const DiscreteDistribution& dist, std::span<const double> x) {
    std::vector<double> cum(dist.pmf.size());
    std::partial_sum(dist.pmf.begin(), dist.pmf.end(), cum.begin());
    std::vector<double> F(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const size_t m = static_cast<size_t>(std::upper_bound(dist.support.begin(), dist.support.end(), x[i]) -
                                             dist.support.begin());
        F[i] = m == 0 ? 0.0 : cum[m - 1];
    }
    return F;
}

double exact_var(const DiscreteDistribution& dist, double alpha) {
    check_alpha(alpha, "exact_var");
    double acc = 0.0;
    for (size_t m = 0; m < dist.pmf.size(); ++m) {
        acc += dist.pmf[m];
        if (acc >= alpha) return dist.support[m];
    }
    return dist.support.back();
}

double exact_es(const DiscreteDistribution& dist, double alpha) {
    const double v = exact_var(dist, alpha);
    double excess = 0.0;
    for (size_t m = 0; m < dist.pmf.size(); ++m)
        if (dist.support[m] > v) excess += dist.pmf[m] * (dist.support[m] - v);
    return v + excess / (1.0 - alpha);
}

RiskReport mc_var_es(std::span<const double> samples, double alpha) {
    check_alpha(alpha, "mc_var_es");
    if (samples.size() < 10) throw InvalidArgument("mc_var_es: at least 10 samples required");
    std::vector<double> s(samples.begin(), samples.end());
    const size_t S = s.size();
    const long k = order_index(alpha, S);
    std::nth_element(s.begin(), s.begin() + (k - 1), s.end());
    const double var = s[static_cast<size_t>(k - 1)];
    double tail = 0.0;
    size_t above = 0;
    for (size_t i = static_cast<size_t>(k); i < S; ++i) {
        tail += s[i];
        if (s[i] > var) ++above;
    }
    RiskReport r;
    r.alpha = alpha;
    r.var = var;
    r.var_index = k - 1;
    r.degenerate_tail = above == 0;
    if (r.degenerate_tail) {
        r.es = var;
    } else {
        const double excess_weight = static_cast<double>(k) - alpha * static_cast<double>(S);
        r.es = (tail + excess_weight * var) / ((1.0 - alpha) * static_cast<double>(S));
    }
    return r;
}

BootstrapError bootstrap_var_es(std::span<const double> samples, double alpha, int resamples, uint64_t seed) {
    if (resamples < 2) throw InvalidArgument("bootstrap_var_es: at least two resamples required");
    const size_t S = samples.size();
    std::vector<double> vars, ess, buf(S);
    for (int b = 0; b < resamples; ++b) {
        for (size_t i = 0; i < S; ++i) {
            const double u = counter_uniform(seed + static_cast<uint64_t>(b) * 0x9e3779b97f4a7c15ULL, i);
            buf[i] = samples[std::min(S - 1, static_cast<size_t>(u * static_cast<double>(S)))];
        }
        const RiskReport r = mc_var_es(buf, alpha);
        vars.push_back(r.var);
        ess.push_back(r.es);
    }
    auto sd = [](const std::vector<double>& v) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double s2 = 0.0;
        for (double x : v) s2 += (x - m) * (x - m);
        return std::sqrt(s2 / static_cast<double>(v.size() - 1));
    };
    return {sd(vars), sd(ess), resamples};
}

void write_distribution_csv(std::ostream& os, const DiscreteDistribution& dist) {
    os << "support,pmf\r\n";
    os.precision(17);
    for (size_t i = 0; i < dist.support.size(); ++i) os << dist.support[i] << ',' << dist.pmf[i] << "\r\n";
}

DiscreteDistribution read_distribution_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidArgument("distribution csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "support,pmf") throw InvalidArgument("distribution csv: unexpected header '" + line + "'");
    DiscreteDistribution d;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos) throw InvalidArgument("distribution csv: malformed row '" + line + "'");
        try {
            d.support.push_back(std::stod(line.substr(0, comma)));
            d.pmf.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw InvalidArgument("distribution csv: malformed row '" + line + "'");
        }
    }
    d.validate();
    return d;
}

}  // namespace qttagg
