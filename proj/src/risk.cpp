#include "qttagg/risk.hpp"

#include <algorithm>
#include <chrono>

#include "json.hpp"

namespace qttagg {

namespace {

void check_alpha(double alpha, const char* what) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument(std::string(what) + ": alpha must lie in (0, 1)");
}

TensorTrain qtt_delta(int n, long j) {
    const auto d = index_to_digits(j, n);
    std::vector<Core> cores;
    for (int k = 0; k < n; ++k) {
        Core c(1, 2, 1);
        c(0, d[static_cast<size_t>(k)], 0) = 1.0;
        cores.push_back(std::move(c));
    }
    return TensorTrain(std::move(cores));
}

// v <- v * A^s for a core slice
std::vector<cplx> left_step(const std::vector<cplx>& v, const Core& c, int s) {
    std::vector<cplx> out(static_cast<size_t>(c.right), 0.0);
    for (long r = 0; r < c.right; ++r)
        for (long l = 0; l < c.left; ++l) out[static_cast<size_t>(r)] += v[static_cast<size_t>(l)] * c(l, s, r);
    return out;
}

}  // namespace

QuantileSearch qtt_quantile(const TensorTrain& cdf, double alpha) {
    if (cdf.size() == 0) throw InvalidArgument("qtt_quantile: empty tensor train");
    for (const Core& c : cdf.cores)
        if (c.phys != 2) throw InvalidArgument("qtt_quantile: binary cores required");
    const size_t n = cdf.size();
    QuantileSearch out;
    // right environments along digit 1: R[k] contracts cores k..n-1
    std::vector<std::vector<cplx>> R(n + 1);
    R[n] = {1.0};
    for (size_t k = n; k-- > 1;) {
        const Core& c = cdf.cores[k];
        R[k].assign(static_cast<size_t>(c.left), 0.0);
        for (long l = 0; l < c.left; ++l)
            for (long r = 0; r < c.right; ++r) R[k][static_cast<size_t>(l)] += c(l, 1, r) * R[k + 1][static_cast<size_t>(r)];
        ++out.contractions;
    }
    std::vector<cplx> left{1.0};
    for (size_t k = 0; k < n; ++k) {
        const Core& c = cdf.cores[k];
        const std::vector<cplx> probe_left = left_step(left, c, 0);
        cplx y = 0.0;
        for (long r = 0; r < c.right; ++r) y += probe_left[static_cast<size_t>(r)] * R[k + 1][static_cast<size_t>(r)];
        ++out.contractions;
        const int s = y.real() >= alpha ? 0 : 1;
        out.digits.push_back(s);
        left = s == 0 ? probe_left : left_step(left, c, 1);
        ++out.contractions;
    }
    out.index = digits_to_index(out.digits);
    return out;
}

QuantileSearch dense_quantile(std::span<const double> cdf, double alpha) {
    const size_t N = cdf.size();
    if (N == 0 || (N & (N - 1)) != 0) throw InvalidArgument("dense_quantile: length must be a power of two");
    int n = 0;
    while ((size_t{1} << n) < N) ++n;
    QuantileSearch out;
    long prefix = 0;
    for (int k = 0; k < n; ++k) {
        const long half = 1L << (n - k - 1);
        const long probe = prefix * 2 * half + half - 1;  // digit 0 followed by ones
        const int s = cdf[static_cast<size_t>(probe)] >= alpha ? 0 : 1;
        ++out.contractions;
        out.digits.push_back(s);
        prefix = 2 * prefix + s;
    }
    out.index = prefix;
    return out;
}

TensorTrain quadrature_weights_qtt(const GridSpec& grid, int order) {
    grid.validate();
    const double dx = grid.dx();
    if (order == 1) return qtt_constant(grid.n, dx);
    if (order != 2) throw InvalidArgument("quadrature_weights_qtt: order must be 1 or 2");
    TensorTrain w = tt_add(qtt_constant(grid.n, dx), tt_scale(qtt_delta(grid.n, 0), -0.5 * dx));
    w = tt_add(w, tt_scale(qtt_delta(grid.n, grid.N() - 1), -0.5 * dx));
    return tt_truncate(w, 1e-14);
}

VarResult value_at_risk(const CdfApproximation& cdf, double alpha, const RiskOptions& opts) {
    check_alpha(alpha, "value_at_risk");
    QuantileSearch q;
    if (cdf.representation == Representation::Qtt && !opts.clamp) {
        q = qtt_quantile(cdf.tt, alpha);
    } else {
        std::vector<double> F = cdf.to_dense();
        if (opts.clamp)
            for (size_t j = 1; j < F.size(); ++j) F[j] = std::max(F[j], F[j - 1]);
        q = dense_quantile(F, alpha);
    }
    return {cdf.grid.point(q.index), q.index, q.contractions};
}

double expected_shortfall(const CdfApproximation& cdf, double alpha, long var_index) {
    check_alpha(alpha, "expected_shortfall");
    const long N = cdf.grid.N();
    if (var_index < 0 || var_index >= N) throw InvalidArgument("expected_shortfall: var_index out of range");
    const double dx = cdf.grid.dx();
    double integral = 0.0;
    if (cdf.representation == Representation::Dense) {
        for (long j = var_index; j < N; ++j) {
            const double w = (j == var_index ? 0.5 : 1.0) - (j == N - 1 ? 0.5 : 0.0);
            integral += w * (1.0 - cdf.values[static_cast<size_t>(j)]);
        }
        integral *= dx;
    } else {
        const int n = cdf.grid.n;
        TensorTrain w = tt_add(qtt_step(n, var_index, StepSense::AtOrAbove), tt_scale(qtt_delta(n, var_index), -0.5));
        w = tt_add(w, tt_scale(qtt_delta(n, N - 1), -0.5));
        w = tt_scale(tt_truncate(w, 1e-14), dx);
        integral = (tt_sum(w) - tt_inner(w, cdf.tt)).real();
    }
    return cdf.grid.point(var_index) + integral / (1.0 - alpha);
}

RiskReport risk_report(const CdfApproximation& cdf, double alpha, const RiskOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    RiskReport r;
    r.alpha = alpha;
    r.representation = cdf.representation;
    const VarResult v = value_at_risk(cdf, alpha, opts);
    r.var = v.var;
    r.var_index = v.index;
    r.contractions = v.contractions;
    r.es = expected_shortfall(cdf, alpha, v.index);
    r.tail_residual = 1.0 - cdf.at(cdf.grid.N() - 1);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::string risk_json(const std::vector<RiskReport>& reports) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports) {
        j.push_back({{"alpha", r.alpha},
                     {"var", r.var},
                     {"var_index", r.var_index},
                     {"es", r.es},
                     {"representation", r.representation == Representation::Qtt ? "qtt" : "dense"},
                     {"seconds", r.seconds},
                     {"contractions", r.contractions},
                     {"tail_residual", r.tail_residual},
                     {"degenerate_tail", r.degenerate_tail}});
    }
    return j.dump(2);
}

}  // namespace qttagg
