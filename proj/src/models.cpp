#include "qttagg/models.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace qttagg {

namespace {

using json = nlohmann::json;

std::string at(size_t d) { return "component " + std::to_string(d) + ": "; }

bool finite(double x) { return std::isfinite(x); }

double beta44(double x) { return std::pow(x, 4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x); }

void check_categorical(const Categorical& c, size_t d) {
    if (c.values.empty()) throw InvalidArgument(at(d) + "categorical needs at least one value");
    if (c.values.size() != c.probs.size()) throw InvalidArgument(at(d) + "values and probs differ in length");
    double s = 0.0;
    for (size_t k = 0; k < c.probs.size(); ++k) {
        if (!finite(c.values[k])) throw InvalidArgument(at(d) + "non-finite support value");
        if (!finite(c.probs[k]) || c.probs[k] < 0.0) throw InvalidArgument(at(d) + "probabilities must be finite and nonnegative");
        s += c.probs[k];
    }
    if (std::abs(s - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << at(d) << "probabilities sum to " << s << ", expected 1";
        throw InvalidArgument(os.str());
    }
}

double get_number(const json& j, const char* key, size_t d) {
    if (!j.contains(key) || !j.at(key).is_number()) throw InvalidArgument(at(d) + "missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

std::vector<double> get_array(const json& j, const char* key, size_t d) {
    if (!j.contains(key) || !j.at(key).is_array()) throw InvalidArgument(at(d) + "missing array field '" + key + "'");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) throw InvalidArgument(at(d) + "non-numeric entry in '" + key + "'");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

Categorical bernoulli(double p) { return Categorical{{0.0, 1.0}, {1.0 - p, p}}; }

bool WeightedSumModel::all_categorical() const {
    for (const auto& c : components)
        if (!std::holds_alternative<Categorical>(c)) return false;
    return true;
}

bool WeightedSumModel::all_lognormal() const {
    for (const auto& c : components)
        if (!std::holds_alternative<Lognormal>(c)) return false;
    return true;
}

WeightedSumModel validate_model(WeightedSumModel m) {
    if (m.components.empty()) throw InvalidArgument("model needs at least one component");
    if (m.weights.size() != m.components.size()) throw InvalidArgument("weights and components differ in length");
    for (size_t d = 0; d < m.size(); ++d) {
        if (!finite(m.weights[d])) throw InvalidArgument(at(d) + "non-finite weight");
        if (const auto* c = std::get_if<Categorical>(&m.components[d])) {
            check_categorical(*c, d);
        } else {
            const auto& ln = std::get<Lognormal>(m.components[d]);
            if (!finite(ln.mu)) throw InvalidArgument(at(d) + "non-finite mu");
            if (!finite(ln.sigma) || ln.sigma <= 0.0) throw InvalidArgument(at(d) + "sigma must be positive");
            if (m.weights[d] < 0.0) throw InvalidArgument(at(d) + "lognormal weight must be nonnegative");
        }
    }
    if (m.normalize_weights) {
        double s = 0.0;
        for (double w : m.weights) s += w;
        if (s == 0.0 || !finite(s)) throw InvalidArgument("cannot normalise weights summing to zero");
        for (double& w : m.weights) w /= s;
    }
    WeightedSumModel out;
    out.normalize_weights = m.normalize_weights;
    for (size_t d = 0; d < m.size(); ++d) {
        // a zero-weight lognormal term is the constant 0 and contributes phi = 1
        if (std::holds_alternative<Lognormal>(m.components[d]) && m.weights[d] == 0.0) continue;
        out.components.push_back(m.components[d]);
        out.weights.push_back(m.weights[d]);
    }
    if (out.components.empty()) throw InvalidArgument("every component has zero weight");
    return out;
}

WeightedSumModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("model JSON: ") + e.what());
    }
    if (!j.is_object()) throw InvalidArgument("model JSON must be an object");
    if (!j.contains("components") || !j["components"].is_array()) throw InvalidArgument("model JSON: missing 'components' array");
    WeightedSumModel m;
    m.normalize_weights = j.value("normalize_weights", false);
    const auto& comps = j["components"];
    for (size_t d = 0; d < comps.size(); ++d) {
        const json& c = comps[d];
        if (!c.is_object() || !c.contains("type") || !c["type"].is_string()) throw InvalidArgument(at(d) + "missing 'type'");
        const std::string type = c["type"];
        if (type == "bernoulli") {
            const double p = get_number(c, "p", d);
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(at(d) + "bernoulli p must lie in [0, 1]");
            m.components.emplace_back(bernoulli(p));
        } else if (type == "categorical") {
            m.components.emplace_back(Categorical{get_array(c, "values", d), get_array(c, "probs", d)});
        } else if (type == "lognormal") {
            m.components.emplace_back(Lognormal{get_number(c, "mu", d), get_number(c, "sigma", d)});
        } else {
            throw InvalidArgument(at(d) + "unknown type '" + type + "'");
        }
    }
    if (j.contains("weights")) {
        if (!j["weights"].is_array()) throw InvalidArgument("model JSON: 'weights' must be an array");
        for (const auto& w : j["weights"]) {
            if (!w.is_number()) throw InvalidArgument("model JSON: non-numeric weight");
            m.weights.push_back(w.get<double>());
        }
    } else {
        m.weights.assign(m.components.size(), 1.0);
    }
    return validate_model(std::move(m));
}

std::string model_to_json(const WeightedSumModel& m) {
    json j;
    j["weights"] = m.weights;
    j["normalize_weights"] = m.normalize_weights;
    j["components"] = json::array();
    for (const auto& c : m.components) {
        if (const auto* cat = std::get_if<Categorical>(&c)) {
            j["components"].push_back({{"type", "categorical"}, {"values", cat->values}, {"probs", cat->probs}});
        } else {
            const auto& ln = std::get<Lognormal>(c);
            j["components"].push_back({{"type", "lognormal"}, {"mu", ln.mu}, {"sigma", ln.sigma}});
        }
    }
    return j.dump(2);
}

WeightedSumModel binomial_model(int D, double p) {
    if (D < 1) throw InvalidArgument("binomial_model: D must be positive");
    WeightedSumModel m;
    for (int d = 0; d < D; ++d) {
        m.components.emplace_back(bernoulli(p));
        m.weights.push_back(1.0 / D);
    }
    return validate_model(std::move(m));
}

std::vector<cplx> categorical_cf_dense(const Categorical& spec, double w, std::span<const double> omega) {
    std::vector<cplx> out(omega.size(), 0.0);
    for (size_t j = 0; j < omega.size(); ++j) {
        cplx acc = 0.0;
        for (size_t k = 0; k < spec.values.size(); ++k) acc += spec.probs[k] * std::polar(1.0, omega[j] * w * spec.values[k]);
        out[j] = acc;
    }
    return out;
}

TensorTrain categorical_cf_qtt(const Categorical& spec, double w, const FrequencyGrid& freq, double eps) {
    std::vector<cplx> coeffs, rates;
    for (size_t k = 0; k < spec.values.size(); ++k) {
        if (spec.probs[k] == 0.0) continue;
        coeffs.emplace_back(spec.probs[k]);
        rates.emplace_back(0.0, w * spec.values[k]);
    }
    return tt_truncate(qtt_sum_of_exponentials(freq.as_grid(), coeffs, rates), eps);
}

GaussHermite gauss_hermite(int K) {
    if (K < 1 || K > 200) throw InvalidArgument("gauss_hermite: K must lie in [1, 200]");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(K, K);
    for (int k = 1; k < K; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericFailure("gauss_hermite: eigenvalue solver did not converge");

    // Orthonormal Hermite functions h_j(z) = psi_j(z) exp(-z^2/2); the
    // Christoffel weight is exp(-z^2) / sum_j h_j(z)^2.
    auto hermite = [K](double z, double& hk, double& hk1, double& sum2) {
        double prev = 0.0, cur = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * z * z);
        sum2 = 0.0;
        for (int j = 0; j < K; ++j) {
            sum2 += cur * cur;
            const double next = std::sqrt(2.0 / (j + 1)) * z * cur - std::sqrt(static_cast<double>(j) / (j + 1)) * prev;
            prev = cur;
            cur = next;
        }
        hk = cur;
        hk1 = prev;
    };
    GaussHermite gh;
    gh.nodes.resize(static_cast<size_t>(K));
    gh.weights.resize(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
        double z = es.eigenvalues()(k);
        double hk, hk1, s2;
        for (int it = 0; it < 3; ++it) {
            hermite(z, hk, hk1, s2);
            if (hk1 == 0.0) break;
            z -= hk / (std::sqrt(2.0 * K) * hk1);
        }
        hermite(z, hk, hk1, s2);
        gh.nodes[static_cast<size_t>(k)] = z;
        gh.weights[static_cast<size_t>(k)] = std::exp(-z * z) / s2;
    }
    // exact symmetry
    for (int k = 0; k < K / 2; ++k) {
        const size_t a = static_cast<size_t>(k), b = static_cast<size_t>(K - 1 - k);
        const double z = 0.5 * (gh.nodes[b] - gh.nodes[a]);
        const double v = 0.5 * (gh.weights[a] + gh.weights[b]);
        gh.nodes[a] = -z;
        gh.nodes[b] = z;
        gh.weights[a] = gh.weights[b] = v;
    }
    if (K % 2 == 1) gh.nodes[static_cast<size_t>(K / 2)] = 0.0;
    return gh;
}

LognormalTerms lognormal_terms(double mu, double sigma, double w, int K) {
    if (!(sigma > 0.0) || !finite(sigma)) throw InvalidArgument("lognormal: sigma must be positive");
    if (!(w > 0.0) || !finite(w)) throw InvalidArgument("lognormal: weight must be positive");
    if (!finite(mu)) throw InvalidArgument("lognormal: mu must be finite");
    const GaussHermite gh = gauss_hermite(K);
    const double a = std::numbers::pi / (std::numbers::sqrt2 * sigma);
    LognormalTerms t;
    cplx total = 0.0;
    for (int k = 0; k < K; ++k) {
        const double z = gh.nodes[static_cast<size_t>(k)];
        const cplx c = gh.weights[static_cast<size_t>(k)] * std::exp(a * a / 4.0) / std::sqrt(std::numbers::pi) *
                       std::polar(1.0, -a * z);
        t.coeffs.push_back(c);
        total += c;
        t.rates.push_back(w * std::exp(mu + std::numbers::sqrt2 * sigma * z));
    }
    // the rule integrates the Gaussian phase to within rounding; rescale so phi(0) = 1 exactly
    for (cplx& c : t.coeffs) c /= total;
    return t;
}

std::vector<cplx> lognormal_cf_dense(double mu, double sigma, double w, std::span<const double> omega, int K) {
    const LognormalTerms t = lognormal_terms(mu, sigma, w, K);
    std::vector<cplx> out(omega.size());
    for (size_t j = 0; j < omega.size(); ++j) {
        const double om = std::abs(omega[j]);
        cplx acc = 0.0;
        for (size_t k = 0; k < t.coeffs.size(); ++k) acc += t.coeffs[k] * std::exp(-t.rates[k] * om);
        out[j] = omega[j] < 0.0 ? std::conj(acc) : acc;
    }
    return out;
}

TensorTrain lognormal_cf_qtt(double mu, double sigma, double w, const FrequencyGrid& freq, double eps, int K) {
    const LognormalTerms t = lognormal_terms(mu, sigma, w, K);
    const int n = freq.n_pad - 1;
    std::vector<cplx> cpos(t.coeffs), rpos, cneg, rneg;
    for (size_t k = 0; k < t.coeffs.size(); ++k) {
        rpos.emplace_back(-t.rates[k]);
        cneg.push_back(std::conj(t.coeffs[k]));
        rneg.emplace_back(t.rates[k]);
    }
    const TensorTrain pos = tt_truncate(qtt_sum_of_exponentials(GridSpec{0.0, freq.omega_max, n}, cpos, rpos), eps);
    const TensorTrain neg = tt_truncate(qtt_sum_of_exponentials(GridSpec{-freq.omega_max, 0.0, n}, cneg, rneg), eps);
    return tt_truncate(qtt_piecewise_halves(neg, pos), eps);
}

std::vector<cplx> gaussian_cf(double mu, double var, std::span<const double> omega) {
    if (!(var >= 0.0)) throw InvalidArgument("gaussian_cf: variance must be nonnegative");
    std::vector<cplx> out(omega.size());
    for (size_t j = 0; j < omega.size(); ++j) out[j] = std::exp(cplx(-0.5 * var * omega[j] * omega[j], mu * omega[j]));
    return out;
}

std::vector<cplx> component_cf_dense(const ComponentSpec& c, double w, std::span<const double> omega) {
    if (const auto* cat = std::get_if<Categorical>(&c)) return categorical_cf_dense(*cat, w, omega);
    const auto& ln = std::get<Lognormal>(c);
    return lognormal_cf_dense(ln.mu, ln.sigma, w, omega);
}

TensorTrain component_cf_qtt(const ComponentSpec& c, double w, const FrequencyGrid& freq, double eps) {
    if (const auto* cat = std::get_if<Categorical>(&c)) return categorical_cf_qtt(*cat, w, freq, eps);
    const auto& ln = std::get<Lognormal>(c);
    return lognormal_cf_qtt(ln.mu, ln.sigma, w, freq, eps);
}

double wpb_envelope(const WeightedSumModel& model, double omega) {
    double var = 0.0;
    for (size_t d = 0; d < model.size(); ++d) var += component_moments(model.components[d], model.weights[d]).var;
    return std::exp(-2.0 * var * omega * omega / (std::numbers::pi * std::numbers::pi));
}

int FilterSpec::order() const {
    switch (kind) {
        case FilterKind::RaisedCosine: return 2;
        case FilterKind::SharpenedRaisedCosine: return 8;
        default: return 0;
    }
}

double FilterSpec::effective_alpha() const {
    return alpha > 0.0 ? alpha : -std::log(std::numeric_limits<double>::epsilon());
}

FilterSpec filter_from_name(const std::string& name) {
    if (name == "none") return {FilterKind::None};
    if (name == "rc" || name == "raised_cosine") return {FilterKind::RaisedCosine};
    if (name == "src" || name == "sharpened_raised_cosine") return {FilterKind::SharpenedRaisedCosine};
    if (name == "exp" || name == "exponential") return {FilterKind::Exponential};
    throw InvalidArgument("unknown filter '" + name + "'");
}

std::string filter_name(const FilterSpec& f) {
    switch (f.kind) {
        case FilterKind::None: return "none";
        case FilterKind::RaisedCosine: return "rc";
        case FilterKind::SharpenedRaisedCosine: return "src";
        case FilterKind::Exponential: return "exp";
    }
    return "?";
}

std::vector<double> filter_eval(const FilterSpec& spec, std::span<const double> eta) {
    std::vector<double> out(eta.size());
    const double alpha = spec.effective_alpha();
    for (size_t j = 0; j < eta.size(); ++j) {
        const double e = eta[j];
        const double c = std::cos(0.5 * std::numbers::pi * e), sn = std::sin(0.5 * std::numbers::pi * e);
        const double rc = c * c;
        switch (spec.kind) {
            case FilterKind::None: out[j] = 1.0; break;
            case FilterKind::RaisedCosine: out[j] = rc; break;
            case FilterKind::SharpenedRaisedCosine:
                // regularised incomplete beta I_rc(4, 4); near the origin use
                // its reflection in 1 - rc to avoid cancellation
                out[j] = rc <= 0.5 ? beta44(rc) : 1.0 - beta44(sn * sn);
                break;
            case FilterKind::Exponential: out[j] = std::exp(-alpha * e * e); break;
            default: throw InvalidArgument("filter_eval: unknown filter kind");
        }
    }
    return out;
}

TensorTrain filter_qtt(const FilterSpec& spec, const FrequencyGrid& freq, double eps) {
    const GridSpec g = freq.as_grid();
    const double k = std::numbers::pi / freq.omega_max;
    auto rc_tt = [&] {
        const cplx c[3] = {0.5, 0.25, 0.25};
        const cplx r[3] = {0.0, cplx(0, k), cplx(0, -k)};
        return tt_truncate(qtt_sum_of_exponentials(g, c, r), eps);
    };
    switch (spec.kind) {
        case FilterKind::None: return qtt_constant(g.n, 1.0);
        case FilterKind::RaisedCosine: return rc_tt();
        case FilterKind::SharpenedRaisedCosine: {
            const TensorTrain r = rc_tt();
            // Horner on 35 - 84 r + 70 r^2 - 20 r^3, then times r^4
            TensorTrain p = tt_add(qtt_constant(g.n, 70.0), tt_scale(r, -20.0));
            p = tt_truncate(tt_add(tt_hadamard_truncate(p, r, eps), qtt_constant(g.n, -84.0)), eps);
            p = tt_truncate(tt_add(tt_hadamard_truncate(p, r, eps), qtt_constant(g.n, 35.0)), eps);
            const TensorTrain r2 = tt_hadamard_truncate(r, r, eps);
            const TensorTrain r4 = tt_hadamard_truncate(r2, r2, eps);
            return tt_hadamard_truncate(r4, p, eps);
        }
        case FilterKind::Exponential: {
            const double alpha = spec.effective_alpha();
            const double om = freq.omega_max;
            return qtt_chebyshev(g, [=](double w) { return cplx(std::exp(-alpha * (w / om) * (w / om))); }, 1024, eps);
        }
    }
    throw InvalidArgument("filter_qtt: unknown filter kind");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inv_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("inv_normal_cdf: p must lie in (0, 1)");
    if (p > 0.5) return -inv_normal_cdf(1.0 - p);
    // Acklam's rational approximation for the lower half, then Halley steps
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    double x;
    if (p < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    for (int it = 0; it < 3; ++it) {
        const double e = normal_cdf(x) - p;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double support_bound_single(double mu, double sigma, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("support bound: delta must lie in (0, 1)");
    if (!(sigma > 0.0)) throw InvalidArgument("support bound: sigma must be positive");
    return std::exp(mu - sigma * inv_normal_cdf(delta));
}

double support_bound_sum(const WeightedSumModel& model, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("support bound: delta must lie in (0, 1)");
    if (!model.all_lognormal()) throw InvalidArgument("support_bound_sum: all components must be lognormal");
    std::vector<double> m, s;
    double smax = 0.0;
    for (size_t d = 0; d < model.size(); ++d) {
        const auto& ln = std::get<Lognormal>(model.components[d]);
        if (!(model.weights[d] > 0.0)) throw InvalidArgument(at(d) + "lognormal weight must be positive");
        m.push_back(ln.mu + std::log(model.weights[d]));
        s.push_back(ln.sigma);
        smax = std::max(smax, ln.sigma);
    }
    auto tail = [&](double lb) {
        double acc = 0.0;
        for (size_t d = 0; d < m.size(); ++d) acc += 0.5 * std::erfc((lb - m[d]) / (s[d] * std::numbers::sqrt2));
        return acc;
    };
    double lo = *std::max_element(m.begin(), m.end());
    while (tail(lo) < delta) lo -= smax;
    double hi = lo + std::numbers::ln2;
    while (tail(hi) >= delta) hi += std::numbers::ln2;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) >= delta ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

Moments component_moments(const ComponentSpec& c, double w) {
    Moments out;
    if (const auto* cat = std::get_if<Categorical>(&c)) {
        for (size_t k = 0; k < cat->values.size(); ++k) out.mean += cat->probs[k] * w * cat->values[k];
        for (size_t k = 0; k < cat->values.size(); ++k) {
            const double dv = std::abs(w * cat->values[k] - out.mean);
            out.var += cat->probs[k] * dv * dv;
            out.abs3 += cat->probs[k] * dv * dv * dv;
        }
        return out;
    }
    const auto& ln = std::get<Lognormal>(c);
    if (w == 0.0) return out;
    if (w < 0.0) {
        Moments m = component_moments(c, -w);
        m.mean = -m.mean;
        return m;
    }
    const double mu = ln.mu + std::log(w), s2 = ln.sigma * ln.sigma;
    auto raw = [&](int k) { return std::exp(k * mu + 0.5 * k * k * s2); };
    // E[X^k ; X < m]
    const double m = raw(1);
    auto lower = [&](int k) { return raw(k) * normal_cdf((std::log(m) - mu - k * s2) / ln.sigma); };
    out.mean = m;
    out.var = raw(2) - m * m;
    const double central3 = raw(3) - 3 * m * raw(2) + 3 * m * m * m - m * m * m;
    const double left3 = m * m * m * lower(0) - 3 * m * m * lower(1) + 3 * m * lower(2) - lower(3);
    out.abs3 = central3 + 2.0 * left3;
    return out;
}

}  // namespace qttagg
