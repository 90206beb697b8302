#include "qttagg/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "json.hpp"

namespace qttagg {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void check_finite(std::span<const cplx> v, const char* what) {
    for (const cplx& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw NumericFailure(std::string(what) + ": non-finite value");
}

void check_finite(const TensorTrain& t, const char* what) {
    for (const Core& c : t.cores) check_finite(c.data, what);
}

std::vector<double> omega_values(const FrequencyGrid& f) {
    std::vector<double> w(static_cast<size_t>(f.M()));
    for (long k = 0; k < f.M(); ++k) w[static_cast<size_t>(k)] = f.omega(k);
    return w;
}

void record(Diagnostics* d, int step, std::string label, const TruncStats& st, const TensorTrain& t,
            Clock::time_point t0) {
    if (!d) return;
    StepRecord r{step, std::move(label), st.peak_bond, t.max_bond(), since(t0), t.bytes()};
    d->peak_bond = std::max(d->peak_bond, std::max(r.peak_bond, r.final_bond));
    d->peak_bytes = std::max(d->peak_bytes, r.bytes);
    d->steps.push_back(std::move(r));
}

// Relative imaginary residue max|Im| / max|Re|. Above 2^22 points the ratio of
// L2 norms stands in for the L-infinity ratio.
double imag_residue(const TensorTrain& t) {
    if (t.size() <= 22) {
        double re = 0.0, im = 0.0;
        for (const cplx& z : tt_to_dense(t)) {
            re = std::max(re, std::abs(z.real()));
            im = std::max(im, std::abs(z.imag()));
        }
        return re > 0.0 ? im / re : (im > 0.0 ? INFINITY : 0.0);
    }
    const TensorTrain c = tt_conj(t);
    const double im = 0.5 * tt_norm(tt_add(t, tt_scale(c, -1.0)));
    const double re = 0.5 * tt_norm(tt_add(t, c));
    return re > 0.0 ? im / re : (im > 0.0 ? INFINITY : 0.0);
}

bool same_component(const ComponentSpec& a, const ComponentSpec& b) {
    if (a.index() != b.index()) return false;
    if (const auto* ca = std::get_if<Categorical>(&a)) {
        const auto& cb = std::get<Categorical>(b);
        return ca->values == cb.values && ca->probs == cb.probs;
    }
    const auto& la = std::get<Lognormal>(a);
    const auto& lb = std::get<Lognormal>(b);
    return la.mu == lb.mu && la.sigma == lb.sigma;
}

}  // namespace

std::string diagnostics_json(const Diagnostics& d) {
    nlohmann::json j;
    j["peak_bond"] = d.peak_bond;
    j["final_max_bond"] = d.final_max_bond;
    j["final_bonds"] = d.final_bonds;
    j["wall_seconds"] = d.wall_seconds;
    j["peak_bytes"] = d.peak_bytes;
    j["final_bytes"] = d.final_bytes;
    j["imag_residue"] = d.imag_residue;
    j["failed_step"] = d.failed_step;
    if (!d.error.empty()) j["error"] = d.error;
    j["steps"] = nlohmann::json::array();
    for (const auto& s : d.steps) {
        j["steps"].push_back({{"step", s.step},
                              {"label", s.label},
                              {"peak_bond", s.peak_bond},
                              {"final_bond", s.final_bond},
                              {"seconds", s.seconds},
                              {"bytes", s.bytes}});
    }
    return j.dump(2);
}

std::vector<double> CdfApproximation::to_dense() const {
    if (representation == Representation::Dense) return values;
    const auto d = tt_to_dense(tt);
    std::vector<double> out(d.size());
    for (size_t i = 0; i < d.size(); ++i) out[i] = d[i].real();
    return out;
}

double CdfApproximation::at(long j) const {
    if (j < 0 || j >= grid.N()) throw InvalidArgument("CdfApproximation::at: index out of range");
    if (representation == Representation::Dense) return values[static_cast<size_t>(j)];
    const auto digits = index_to_digits(j, grid.n);
    return tt_element(tt, digits).real();
}

std::vector<cplx> model_cf_dense(const WeightedSumModel& model, const FilterSpec& filter, const FrequencyGrid& freq,
                                 double origin) {
    const std::vector<double> w = omega_values(freq);
    std::vector<cplx> phi(w.size(), 1.0);
    if (filter.kind != FilterKind::None) {
        std::vector<double> eta(w.size());
        for (size_t k = 0; k < w.size(); ++k) eta[k] = w[k] / freq.omega_max;
        const auto s = filter_eval(filter, eta);
        for (size_t k = 0; k < w.size(); ++k) phi[k] = s[k];
    }
    for (size_t d = 0; d < model.size(); ++d) {
        const auto cf = component_cf_dense(model.components[d], model.weights[d], w);
        for (size_t k = 0; k < w.size(); ++k) phi[k] *= cf[k];
    }
    if (origin != 0.0)
        for (size_t k = 0; k < w.size(); ++k) phi[k] *= std::polar(1.0, -w[k] * origin);
    check_finite(phi, "characteristic function");
    return phi;
}

CdfApproximation dense_spectral_from_cf(std::vector<cplx> phi, int n, double L, Quantity q,
                                        const SpectralOptions& opts) {
    const auto t0 = Clock::now();
    if (n < 1) throw InvalidArgument("dense spectral: n must be positive");
    if (n > opts.dense_cap) {
        throw ResourceLimitError("dense spectral: n = " + std::to_string(n) + " exceeds the dense cap " +
                                 std::to_string(opts.dense_cap));
    }
    const FrequencyGrid freq = frequency_grid(n, L);
    if (phi.size() != static_cast<size_t>(freq.M())) throw InvalidArgument("dense spectral: CF length must be 2^(n+1)");
    check_finite(phi, "characteristic function");
    const long N = freq.N();
    const double dx = L / static_cast<double>(N);
    if (q == Quantity::Cdf) {
        // Dirichlet kernel sum_{j<N} exp(i omega_k j dx) in closed form
        for (long k = 0; k < freq.M(); ++k) {
            if (k == N) {
                phi[static_cast<size_t>(k)] *= static_cast<double>(N);
                continue;
            }
            const double h = 0.5 * freq.omega(k) * dx;
            phi[static_cast<size_t>(k)] *=
                std::sin(static_cast<double>(N) * h) / std::sin(h) * std::polar(1.0, h * static_cast<double>(N - 1));
        }
    }
    dense_dft_inplace(phi, Direction::Inverse);

    CdfApproximation out;
    out.quantity = q;
    out.representation = Representation::Dense;
    out.grid = GridSpec{opts.origin, opts.origin + L, n};
    out.values.resize(static_cast<size_t>(N));
    const double scale = q == Quantity::Pdf ? 1.0 / dx : 1.0;
    double re = 0.0, im = 0.0;
    for (long j = 0; j < N; ++j) {
        const cplx z = phi[static_cast<size_t>(j)] * scale;
        out.values[static_cast<size_t>(j)] = z.real();
        re = std::max(re, std::abs(z.real()));
        im = std::max(im, std::abs(z.imag()));
    }
    out.diag.imag_residue = re > 0.0 ? im / re : 0.0;
    out.diag.peak_bytes = out.diag.final_bytes = 16 * static_cast<size_t>(freq.M());
    out.diag.wall_seconds = since(t0);
    if (out.diag.imag_residue > opts.imag_tol) {
        throw NumericFailure("dense spectral: imaginary residue " + std::to_string(out.diag.imag_residue) +
                             " exceeds tolerance");
    }
    return out;
}

namespace {

CdfApproximation dense_pipeline(const WeightedSumModel& model, const FilterSpec& filter, int n, double L,
                                const SpectralOptions& opts, Quantity q) {
    const auto t0 = Clock::now();
    if (n > opts.dense_cap) {
        throw ResourceLimitError("dense spectral: n = " + std::to_string(n) + " exceeds the dense cap " +
                                 std::to_string(opts.dense_cap));
    }
    const FrequencyGrid freq = frequency_grid(n, L);
    CdfApproximation out = dense_spectral_from_cf(model_cf_dense(model, filter, freq, opts.origin), n, L, q, opts);
    out.filter = filter;
    out.diag.wall_seconds = since(t0);
    return out;
}

}  // namespace

CdfApproximation dense_spectral_cdf(const WeightedSumModel& model, const FilterSpec& filter, int n, double L,
                                    const SpectralOptions& opts) {
    return dense_pipeline(model, filter, n, L, opts, Quantity::Cdf);
}

CdfApproximation dense_spectral_pdf(const WeightedSumModel& model, const FilterSpec& filter, int n, double L,
                                    const SpectralOptions& opts) {
    return dense_pipeline(model, filter, n, L, opts, Quantity::Pdf);
}

TensorTrain model_cf_qtt(const WeightedSumModel& model, const FilterSpec& filter, const FrequencyGrid& freq,
                         const SpectralOptions& opts, Diagnostics* diag) {
    if (!(opts.eps > 0.0)) throw InvalidArgument("qtt spectral: eps must be positive");
    const int np = freq.n_pad;
    const int D = static_cast<int>(model.size());
    const bool use_filter = filter.kind != FilterKind::None;
    // Steps: components are 0..D-1, a trailing filter is D. A leading filter
    // and the origin shift carry no index of their own (-1 in the records).
    auto at_step = [&](int step, auto&& fn) {
        try {
            return fn();
        } catch (const ResourceLimitError& e) {
            if (diag) diag->failed_step = step;
            throw e.with_step(step);
        }
    };
    auto build_filter = [&] { return filter_qtt(filter, freq, std::min(opts.eps, 1e-12)); };
    auto component = [&](int d) {
        return component_cf_qtt(model.components[static_cast<size_t>(d)], model.weights[static_cast<size_t>(d)], freq,
                                opts.eps);
    };

    if (opts.tree) {
        std::vector<TensorTrain> level;
        if (use_filter && !opts.filter_last) level.push_back(at_step(-1, build_filter));
        for (int d = 0; d < D; ++d) level.push_back(at_step(d, [&] { return component(d); }));
        if (use_filter && opts.filter_last) level.push_back(at_step(D, build_filter));
        if (opts.origin != 0.0) level.push_back(qtt_exponential(freq.as_grid(), 1.0, cplx(0, -opts.origin)));
        int step = 0;
        while (level.size() > 1) {
            std::vector<TensorTrain> next;
            for (size_t i = 0; i + 1 < level.size(); i += 2) {
                const auto t0 = Clock::now();
                TruncStats st;
                next.push_back(at_step(step, [&] { return tt_hadamard_truncate(level[i], level[i + 1], opts.eps, &st); }));
                record(diag, step++, "tree", st, next.back(), t0);
            }
            if (level.size() % 2 == 1) next.push_back(std::move(level.back()));
            level = std::move(next);
        }
        check_finite(level.front(), "characteristic function");
        return level.front();
    }

    TensorTrain phi = use_filter && !opts.filter_last ? at_step(-1, build_filter) : qtt_constant(np, 1.0);
    if (diag && use_filter && !opts.filter_last) {
        diag->steps.push_back({-1, "filter", phi.max_bond(), phi.max_bond(), 0.0, phi.bytes()});
    }
    TensorTrain cf;
    for (int d = 0; d < D; ++d) {
        const auto& comp = model.components[static_cast<size_t>(d)];
        const double w = model.weights[static_cast<size_t>(d)];
        const auto t0 = Clock::now();
        // identical consecutive components reuse the previous local CF
        if (d == 0 || !same_component(comp, model.components[static_cast<size_t>(d - 1)]) ||
            w != model.weights[static_cast<size_t>(d - 1)]) {
            cf = at_step(d, [&] { return component(d); });
        }
        TruncStats st;
        phi = at_step(d, [&] { return tt_hadamard_truncate(phi, cf, opts.eps, &st); });
        record(diag, d, "component", st, phi, t0);
    }
    if (use_filter && opts.filter_last) {
        const auto t0 = Clock::now();
        TruncStats st;
        phi = at_step(D, [&] { return tt_hadamard_truncate(phi, build_filter(), opts.eps, &st); });
        record(diag, D, "filter", st, phi, t0);
    }
    if (opts.origin != 0.0) {
        phi = at_step(-1, [&] {
            return tt_hadamard_truncate(phi, qtt_exponential(freq.as_grid(), 1.0, cplx(0, -opts.origin)), opts.eps);
        });
    }
    check_finite(phi, "characteristic function");
    return phi;
}

CdfApproximation qtt_spectral_from_cf(const TensorTrain& phi_in, int n, double L, Quantity q,
                                      const SpectralOptions& opts, Diagnostics diag) {
    const auto t0 = Clock::now();
    const FrequencyGrid freq = frequency_grid(n, L);
    if (static_cast<int>(phi_in.size()) != freq.n_pad) throw InvalidArgument("qtt spectral: CF must have n + 1 cores");
    int step = static_cast<int>(diag.steps.size());
    auto guarded = [&](auto&& fn) {
        try {
            return fn();
        } catch (const ResourceLimitError& e) {
            diag.failed_step = step;
            throw e.with_step(step);
        }
    };
    TensorTrain phi = phi_in;
    if (q == Quantity::Cdf) {
        const auto t1 = Clock::now();
        TruncStats st;
        phi = guarded([&] { return tt_hadamard_truncate(phi, dirichlet_kernel_qtt(freq), opts.eps, &st); });
        record(&diag, step++, "dirichlet", st, phi, t1);
    }
    const auto t2 = Clock::now();
    TruncStats st;
    TensorTrain x = guarded([&] { return apply_fourier(phi, Direction::Inverse, opts.eps, &st); });
    record(&diag, step++, "inverse_transform", st, x, t2);
    x = project_lower_half(x);
    if (q == Quantity::Pdf) x = tt_scale(x, static_cast<double>(freq.N()) / L);
    check_finite(x, "reconstruction");

    CdfApproximation out;
    out.quantity = q;
    out.representation = Representation::Qtt;
    out.grid = GridSpec{opts.origin, opts.origin + L, n};
    out.eps = opts.eps;
    out.tt = std::move(x);
    diag.imag_residue = imag_residue(out.tt);
    diag.final_bonds = out.tt.bond_dims();
    diag.final_max_bond = out.tt.max_bond();
    diag.final_bytes = out.tt.bytes();
    diag.wall_seconds += since(t0);
    out.diag = std::move(diag);
    // truncation perturbs the Hermitian symmetry of the CF at the eps level
    if (out.diag.imag_residue > std::max(opts.imag_tol, 10.0 * opts.eps)) {
        throw NumericFailure("qtt spectral: imaginary residue " + std::to_string(out.diag.imag_residue) +
                             " exceeds tolerance");
    }
    return out;
}

namespace {

CdfApproximation qtt_pipeline(const WeightedSumModel& model, const FilterSpec& filter, int n, double L,
                              const SpectralOptions& opts, Quantity q) {
    const auto t0 = Clock::now();
    const FrequencyGrid freq = frequency_grid(n, L);
    Diagnostics diag;
    TensorTrain phi = model_cf_qtt(model, filter, freq, opts, &diag);
    diag.wall_seconds = since(t0);
    CdfApproximation out = qtt_spectral_from_cf(phi, n, L, q, opts, std::move(diag));
    out.filter = filter;
    return out;
}

}  // namespace

CdfApproximation qtt_spectral_cdf(const WeightedSumModel& model, const FilterSpec& filter, int n, double L,
                                  const SpectralOptions& opts) {
    return qtt_pipeline(model, filter, n, L, opts, Quantity::Cdf);
}

CdfApproximation qtt_spectral_pdf(const WeightedSumModel& model, const FilterSpec& filter, int n, double L,
                                  const SpectralOptions& opts) {
    return qtt_pipeline(model, filter, n, L, opts, Quantity::Pdf);
}

double quantile_of(std::vector<double> v, double q) {
    if (v.empty()) throw InvalidArgument("quantile_of: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile_of: q must lie in [0, 1]");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const size_t i = static_cast<size_t>(std::floor(pos));
    if (i + 1 >= v.size()) return v.back();
    const double t = pos - static_cast<double>(i);
    return v[i] * (1.0 - t) + v[i + 1] * t;
}

ErrorMetrics error_metrics(std::span<const double> approx, std::span<const double> reference, double dx) {
    if (approx.size() != reference.size() || approx.empty()) throw InvalidArgument("error_metrics: grid mismatch");
    ErrorMetrics m;
    std::vector<double> e(approx.size());
    double s1 = 0.0, s2 = 0.0;
    for (size_t j = 0; j < e.size(); ++j) {
        e[j] = std::abs(approx[j] - reference[j]);
        s1 += e[j];
        s2 += e[j] * e[j];
        m.linf = std::max(m.linf, e[j]);
    }
    m.l1 = s1 * dx;
    m.l2 = std::sqrt(s2 * dx);
    std::sort(e.begin(), e.end());
    m.median = quantile_of(e, 0.5);
    m.q90 = quantile_of(e, 0.9);
    m.q99 = quantile_of(std::move(e), 0.99);
    return m;
}

ErrorMetrics error_metrics(const CdfApproximation& approx, std::span<const double> reference) {
    const auto a = approx.to_dense();
    return error_metrics(a, reference, approx.grid.dx());
}

std::vector<double> gibbs_band_width(std::span<const double> err, const GridSpec& grid, std::span<const double> jumps,
                                     double threshold) {
    if (!(threshold > 0.0)) throw InvalidArgument("gibbs_band_width: threshold must be positive");
    if (static_cast<long>(err.size()) != grid.N()) throw InvalidArgument("gibbs_band_width: grid mismatch");
    const long N = grid.N();
    std::vector<double> out;
    for (double x : jumps) {
        const long j = static_cast<long>(std::floor((x - grid.a) / grid.dx()));
        // seed from the nearest grid points on either side of the jump
        long lo = -1, hi = -2;
        for (long s : {j, j + 1, j - 1}) {
            if (s >= 0 && s < N && std::abs(err[static_cast<size_t>(s)]) > threshold) {
                lo = hi = s;
                break;
            }
        }
        if (lo < 0) {
            out.push_back(0.0);
            continue;
        }
        while (lo > 0 && std::abs(err[static_cast<size_t>(lo - 1)]) > threshold) --lo;
        while (hi + 1 < N && std::abs(err[static_cast<size_t>(hi + 1)]) > threshold) ++hi;
        out.push_back(static_cast<double>(hi - lo + 1) * grid.dx());
    }
    return out;
}

TensorTrain subsample_even(const TensorTrain& tt) {
    tt.validate();
    if (tt.size() < 2) throw InvalidArgument("subsample_even: need at least two cores");
    const Core& last = tt.cores.back();
    const Core& prev = tt.cores[tt.size() - 2];
    Core merged(prev.left, prev.phys, 1);
    for (long l = 0; l < prev.left; ++l)
        for (long s = 0; s < prev.phys; ++s) {
            cplx acc = 0.0;
            for (long m = 0; m < prev.right; ++m) acc += prev(l, s, m) * last(m, 0, 0);
            merged(l, s, 0) = acc;
        }
    std::vector<Core> cores(tt.cores.begin(), tt.cores.end() - 2);
    cores.push_back(std::move(merged));
    return TensorTrain(std::move(cores));
}

double self_error_dense(std::span<const double> fine, std::span<const double> coarse, double dx_coarse, bool relative) {
    if (fine.size() != 2 * coarse.size()) throw InvalidArgument("self_error: grids are not consecutive");
    double e2 = 0.0, c2 = 0.0;
    for (size_t j = 0; j < coarse.size(); ++j) {
        const double d = fine[2 * j] - coarse[j];
        e2 += d * d;
        c2 += coarse[j] * coarse[j];
    }
    if (relative) return c2 > 0.0 ? std::sqrt(e2 / c2) : std::sqrt(e2);
    return std::sqrt(e2 * dx_coarse);
}

double self_error(const CdfApproximation& fine, const CdfApproximation& coarse, bool relative) {
    if (fine.grid.a != coarse.grid.a || fine.grid.b != coarse.grid.b || fine.grid.n != coarse.grid.n + 1) {
        throw InvalidArgument("self_error: grids are not consecutive refinements of the same interval");
    }
    const double dx = coarse.grid.dx();
    if (fine.representation == Representation::Qtt && coarse.representation == Representation::Qtt) {
        const TensorTrain diff = tt_add(subsample_even(fine.tt), tt_scale(coarse.tt, -1.0));
        const double e = tt_norm(diff);
        if (relative) {
            const double c = tt_norm(coarse.tt);
            return c > 0.0 ? e / c : e;
        }
        return e * std::sqrt(dx);
    }
    const auto f = fine.to_dense(), c = coarse.to_dense();
    return self_error_dense(f, c, dx, relative);
}

double berry_esseen_bound(const WeightedSumModel& model) {
    double var = 0.0, rho = 0.0;
    for (size_t d = 0; d < model.size(); ++d) {
        const Moments m = component_moments(model.components[d], model.weights[d]);
        var += m.var;
        rho += m.abs3;
    }
    if (!(var > 0.0)) throw InvalidArgument("berry_esseen_bound: model has zero variance");
    return kBerryEsseenC * rho / std::pow(var, 1.5);
}

}  // namespace qttagg
