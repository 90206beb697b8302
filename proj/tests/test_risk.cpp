#include "doctest.h"
#include "qttagg/baselines.hpp"
#include "qttagg/instances.hpp"
#include "qttagg/risk.hpp"

#include <random>

#include "json.hpp"

using namespace qttagg;

namespace {

CdfApproximation dense_cdf(const GridSpec& g, std::vector<double> v) {
    CdfApproximation c;
    c.grid = g;
    c.values = std::move(v);
    return c;
}

CdfApproximation as_qtt(const CdfApproximation& d) {
    CdfApproximation q = d;
    q.representation = Representation::Qtt;
    std::vector<cplx> z(d.values.begin(), d.values.end());
    q.tt = tt_from_dense(z, d.grid.n, 1e-14);
    q.values.clear();
    return q;
}

long lower_bound_index(const std::vector<double>& F, double alpha) {
    const auto it = std::lower_bound(F.begin(), F.end(), alpha);
    return it == F.end() ? static_cast<long>(F.size()) - 1 : static_cast<long>(it - F.begin());
}

}  // namespace

TEST_CASE("QTT quantile search") {
    const int n = 10;
    GridSpec g{0.0, 1.0, n};
    const TensorTrain lin = qtt_linear(g, 0.0, 1.0);
    QuantileSearch q = qtt_quantile(lin, 0.5);
    REQUIRE(q.digits.size() == 10);
    CHECK(q.digits[0] == 1);
    for (int k = 1; k < n; ++k) CHECK(q.digits[static_cast<size_t>(k)] == 0);
    CHECK(q.index == 512);
    CHECK(q.contractions == 3 * n - 1);

    const TensorTrain shifted = qtt_linear(g, 0.1, 1.0);
    for (int s : qtt_quantile(shifted, 0.05).digits) CHECK(s == 0);
    CHECK(qtt_quantile(shifted, 5.0).index == 1023);

    // random monotone arrays against std::lower_bound
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(0, 1);
    for (int trial = 0; trial < 30; ++trial) {
        const int m = 4 + trial % 8;
        std::vector<double> F(size_t{1} << m);
        double acc = 0;
        for (auto& v : F) {
            acc += U(rng) < 0.3 ? 0.0 : U(rng);  // plateaus included
            v = acc;
        }
        for (auto& v : F) v /= acc;
        std::vector<cplx> z(F.begin(), F.end());
        const TensorTrain tt = tt_from_dense(z, m, 1e-15);
        for (int r = 0; r < 10; ++r) {
            const double alpha = U(rng);
            const long oracle = lower_bound_index(F, alpha);
            CHECK(qtt_quantile(tt, alpha).index == oracle);
            CHECK(dense_quantile(F, alpha).index == oracle);
        }
    }
    CHECK_THROWS_AS(dense_quantile(std::vector<double>(6, 0.0), 0.5), InvalidArgument);
}

TEST_CASE("QTT and dense search agree on a spectral WPB CDF") {
    const WeightedSumModel m = wpb_instance(10, 21);
    SpectralOptions o;
    o.eps = 1e-8;
    const CdfApproximation q = qtt_spectral_cdf(m, FilterSpec{FilterKind::Exponential}, 14, 1.0, o);
    const CdfApproximation d = dense_spectral_cdf(m, FilterSpec{FilterKind::Exponential}, 14, 1.0);
    for (double alpha : {0.5, 0.9, 0.99}) {
        const long iq = value_at_risk(q, alpha).index;
        const long id = value_at_risk(d, alpha).index;
        CHECK(std::abs(iq - id) <= 1);
        CHECK(std::abs(iq - dense_quantile(q.to_dense(), alpha).index) <= 1);
    }
}

TEST_CASE("value at risk") {
    // Bernoulli(0.5) on {0, 1}, exact step CDF on a grid with a node at 1
    GridSpec g{-0.5, 1.5, 6};
    std::vector<double> F(64);
    for (long j = 0; j < 64; ++j) F[static_cast<size_t>(j)] = g.point(j) >= 1.0 ? 1.0 : (g.point(j) >= 0.0 ? 0.5 : 0.0);
    const auto d = dense_cdf(g, F);
    CHECK(value_at_risk(d, 0.9).var == 1.0);
    CHECK(value_at_risk(as_qtt(d), 0.9).var == 1.0);
    CHECK(value_at_risk(d, 0.5).var == 0.0);
    CHECK_THROWS_AS(value_at_risk(d, 1.0), InvalidArgument);
    CHECK_THROWS_AS(value_at_risk(d, 0.0), InvalidArgument);

    // spectral reconstruction of the same law: VaR inside the Gibbs band at 1
    WeightedSumModel b;
    b.components.emplace_back(bernoulli(0.5));
    b.weights.push_back(1.0);
    SpectralOptions o;
    o.origin = -0.5;
    const auto s = dense_spectral_cdf(validate_model(b), FilterSpec{FilterKind::Exponential}, 12, 2.0, o);
    CHECK(std::abs(value_at_risk(s, 0.9).var - 1.0) < 0.02);

    // monotone in alpha
    const auto w = dense_spectral_cdf(wpb_instance(8, 2), FilterSpec{FilterKind::Exponential}, 12, 1.0);
    double prev = -1;
    for (double a = 0.01; a < 1.0; a += 0.01) {
        const double v = value_at_risk(w, a).var;
        CHECK(v >= prev);
        prev = v;
    }

    // the clamp only changes results where F is non-monotone
    RiskOptions c;
    c.clamp = true;
    CHECK(value_at_risk(d, 0.9, c).var == 1.0);
}

TEST_CASE("quadrature weights") {
    GridSpec g{0.0, 2.0, 8};
    auto w1 = tt_to_dense(quadrature_weights_qtt(g, 1));
    for (auto z : w1) CHECK(std::abs(z - g.dx()) < 1e-15);
    const TensorTrain w2 = quadrature_weights_qtt(g, 2);
    CHECK(w2.max_bond() <= 3);
    CHECK(quadrature_weights_qtt(g, 1).max_bond() <= 2);
    CHECK(std::abs(tt_sum(w2) - g.dx() * (g.N() - 1)) < 1e-12);

    // grid whose last node is exactly 1
    const int n = 10;
    const double N = 1024;
    GridSpec u{0.0, N / (N - 1), n};
    const double integral = tt_inner(quadrature_weights_qtt(u, 2), qtt_linear(u, 0.0, 1.0)).real();
    CHECK(std::abs(integral - 0.5) < 1e-6);
    CHECK_THROWS_AS(quadrature_weights_qtt(g, 3), InvalidArgument);
}

TEST_CASE("expected shortfall") {
    GridSpec g{-0.5, 1.5, 6};
    std::vector<double> F(64);
    for (long j = 0; j < 64; ++j) F[static_cast<size_t>(j)] = g.point(j) >= 1.0 ? 1.0 : (g.point(j) >= 0.0 ? 0.5 : 0.0);
    const auto d = dense_cdf(g, F);
    const VarResult v = value_at_risk(d, 0.9);
    CHECK(expected_shortfall(d, 0.9, v.index) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(expected_shortfall(as_qtt(d), 0.9, v.index) == doctest::Approx(1.0).epsilon(1e-12));
    // alpha = 0.4 has VaR 0 and tail expectation 0 + 0.5 / 0.6; the trapezoid
    // smears the jump at 1 over one cell
    CHECK(std::abs(expected_shortfall(d, 0.4, value_at_risk(d, 0.4).index) - 0.5 / 0.6) < 2 * g.dx());

    GridSpec u{0.0, 1.0, 12};
    std::vector<double> lin(4096);
    for (long j = 0; j < 4096; ++j) lin[static_cast<size_t>(j)] = u.point(j);
    const auto ud = dense_cdf(u, lin);
    const RiskReport r = risk_report(ud, 0.5);
    CHECK(std::abs(r.es - 0.75) < 2 * u.dx());
    // alpha off the grid values so rounding in the QTT cannot move the index
    const RiskReport r3 = risk_report(ud, 0.3);
    const RiskReport rq = risk_report(as_qtt(ud), 0.3);
    CHECK(std::abs(r3.es - 0.65) < 2 * u.dx());
    CHECK(rq.var_index == r3.var_index);
    CHECK(std::abs(rq.es - r3.es) < 1e-10);
    CHECK_THROWS_AS(expected_shortfall(ud, 1.0, 0), InvalidArgument);
    CHECK_THROWS_AS(expected_shortfall(ud, 0.5, 4096), InvalidArgument);
}

TEST_CASE("risk metrics against the exact PMF") {
    const WeightedSumModel m = wpb_instance(12, 3);
    const auto dist = recursive_convolution(m);
    SpectralOptions o;
    o.eps = 1e-8;
    const CdfApproximation q = qtt_spectral_cdf(m, FilterSpec{FilterKind::Exponential}, 14, 1.0, o);
    const CdfApproximation d = dense_spectral_cdf(m, FilterSpec{FilterKind::Exponential}, 14, 1.0);
    const double alpha = 0.99;
    const double dx = d.grid.dx();
    const double ev = exact_var(dist, alpha), ee = exact_es(dist, alpha);
    for (const CdfApproximation* c : {&q, &d}) {
        const RiskReport r = risk_report(*c, alpha);
        CHECK(std::abs(r.var - ev) <= dx);
        CHECK(std::abs(r.es - ee) / ee < 1e-3);
    }

    // ES >= VaR and ES non-decreasing over an alpha scan
    double prev = -1;
    for (double a = 0.05; a < 0.999; a += 0.05) {
        const RiskReport r = risk_report(d, a);
        CHECK(r.es >= r.var - 2 * dx);
        CHECK(r.es >= prev - 2 * dx);
        prev = r.es;
    }
}

TEST_CASE("risk JSON") {
    GridSpec u{0.0, 1.0, 8};
    std::vector<double> lin(256);
    for (long j = 0; j < 256; ++j) lin[static_cast<size_t>(j)] = u.point(j);
    const auto ud = dense_cdf(u, lin);
    const auto j = nlohmann::json::parse(risk_json({risk_report(ud, 0.5), risk_report(ud, 0.9)}));
    REQUIRE(j.size() == 2);
    CHECK(j[1]["alpha"].get<double>() == 0.9);
    CHECK(j[0]["representation"] == "dense");
    CHECK(j[0].contains("es"));
    CHECK(j[0].contains("var_index"));
}
