#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qttagg/baselines.hpp"
#include "qttagg/instances.hpp"
#include "qttagg/risk.hpp"
#include "qttagg/spectral.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace qttagg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitResource = 3;
constexpr int kExitNumeric = 4;
constexpr const char* kBenchSchema = "qttagg-bench-1";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(what + ": " + e.what());
    }
}

// Writes through a temporary file so readers never see a partial file.
template <class Fn>
void write_atomic(const fs::path& p, Fn&& body) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw InvalidArgument("cannot write " + p.string());
        body(out);
        if (!out) throw InvalidArgument("write failed for " + p.string());
    }
    fs::rename(tmp, p);
}

std::string num(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

void csv_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << csv_field(fields[i]);
    }
    os << "\r\n";
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument(std::string("config: field '") + key + "' has the wrong type");
    }
}

FilterSpec filter_from_json(const json& j) {
    if (j.is_null()) return {};
    if (j.is_string()) return filter_from_name(j.get<std::string>());
    if (j.is_object()) {
        FilterSpec f = filter_from_name(get_or<std::string>(j, "kind", "none"));
        f.alpha = get_or<double>(j, "alpha", 0.0);
        return f;
    }
    throw InvalidArgument("config: 'filter' must be a name or an object");
}

enum class Method { Dense, Qtt, Mc, Rc };

Method method_from_name(const std::string& s) {
    if (s == "dense") return Method::Dense;
    if (s == "qtt") return Method::Qtt;
    if (s == "mc") return Method::Mc;
    if (s == "rc") return Method::Rc;
    throw InvalidArgument("unknown method '" + s + "' (dense, qtt, mc, rc)");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Dense: return "dense";
        case Method::Qtt: return "qtt";
        case Method::Mc: return "mc";
        case Method::Rc: return "rc";
    }
    return "?";
}

struct RunConfig {
    WeightedSumModel model;
    Method method = Method::Dense;
    int n = 12;
    double eps = 1e-8;
    FilterSpec filter;
    double delta = 1e-8;
    double L = 0.0;
    double origin = 0.0;
    std::vector<double> alphas;
    long samples = 100000;
    uint64_t seed = 1;
    fs::path output = ".";
    bool density = false;
    SpectralOptions spectral;
};

RunConfig load_run_config(const fs::path& path) {
    const json j = parse_json(read_file(path), "config JSON");
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    const fs::path base = path.parent_path();
    RunConfig c;
    if (!j.contains("model")) throw InvalidArgument("config: missing 'model'");
    if (j["model"].is_string()) {
        c.model = model_from_json(read_file(base / j["model"].get<std::string>()));
    } else {
        c.model = model_from_json(j["model"].dump());
    }
    c.method = method_from_name(get_or<std::string>(j, "method", "dense"));
    c.n = get_or<int>(j, "n", 12);
    if (c.n < 1 || c.n > 40) throw InvalidArgument("config: n must lie in [1, 40]");
    c.eps = get_or<double>(j, "eps", 1e-8);
    if (!(c.eps > 0.0)) throw InvalidArgument("config: eps must be positive");
    c.filter = filter_from_json(j.value("filter", json()));
    c.delta = get_or<double>(j, "delta", 1e-8);
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw InvalidArgument("config: delta must lie in (0, 1)");
    c.origin = get_or<double>(j, "origin", 0.0);
    if (j.contains("L")) {
        c.L = get_or<double>(j, "L", 0.0);
    } else if (c.model.all_lognormal()) {
        c.L = support_bound_sum(c.model, c.delta) - c.origin;
    } else {
        throw InvalidArgument("config: 'L' is required unless every component is lognormal");
    }
    if (!(c.L > 0.0)) throw InvalidArgument("config: L must be positive");
    if (j.contains("alpha")) {
        const json& a = j["alpha"];
        if (a.is_number()) {
            c.alphas.push_back(a.get<double>());
        } else if (a.is_array()) {
            for (const auto& v : a) {
                if (!v.is_number()) throw InvalidArgument("config: alpha entries must be numbers");
                c.alphas.push_back(v.get<double>());
            }
        } else {
            throw InvalidArgument("config: 'alpha' must be a number or an array");
        }
    }
    for (double a : c.alphas)
        if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("config: alpha values must lie in (0, 1)");
    c.samples = get_or<long>(j, "samples", 100000);
    if (c.samples < 10) throw InvalidArgument("config: samples must be at least 10");
    c.seed = get_or<uint64_t>(j, "seed", 1);
    c.output = base / get_or<std::string>(j, "output", ".");
    c.density = get_or<bool>(j, "density", false);
    c.spectral.eps = c.eps;
    c.spectral.origin = c.origin;
    c.spectral.filter_last = get_or<bool>(j, "filter_last", false);
    c.spectral.tree = get_or<bool>(j, "tree", false);
    c.spectral.imag_tol = get_or<double>(j, "imag_tol", 1e-6);
    c.spectral.dense_cap = get_or<int>(j, "dense_cap", 24);
    if (c.method == Method::Dense && c.n > c.spectral.dense_cap) {
        throw ResourceLimitError("config: n = " + std::to_string(c.n) + " exceeds the dense cap");
    }
    if (c.method == Method::Rc && !c.model.all_categorical()) {
        throw InvalidArgument("config: method rc needs an all-categorical model");
    }
    if (c.density && c.method == Method::Mc) throw InvalidArgument("config: density output is not available for mc");
    return c;
}

GridSpec grid_of(const RunConfig& c) { return GridSpec{c.origin, c.origin + c.L, c.n}; }

std::vector<double> grid_points(const GridSpec& g) {
    std::vector<double> x(static_cast<size_t>(g.N()));
    for (long j = 0; j < g.N(); ++j) x[static_cast<size_t>(j)] = g.point(j);
    return x;
}

void write_curve(const fs::path& p, const char* header, const GridSpec& g, const std::vector<double>& v) {
    write_atomic(p, [&](std::ostream& os) {
        os << header << "\r\n";
        for (long j = 0; j < g.N(); ++j) os << num(g.point(j)) << ',' << num(v[static_cast<size_t>(j)]) << "\r\n";
    });
}

void write_json(const fs::path& p, const json& j) {
    write_atomic(p, [&](std::ostream& os) { os << j.dump(2) << "\n"; });
}

struct RunResult {
    std::optional<CdfApproximation> cdf;
    std::vector<RiskReport> risk;
    json diagnostics;
};

CdfApproximation spectral(const RunConfig& c, Quantity q) {
    if (c.method == Method::Dense) {
        return q == Quantity::Cdf ? dense_spectral_cdf(c.model, c.filter, c.n, c.L, c.spectral)
                                  : dense_spectral_pdf(c.model, c.filter, c.n, c.L, c.spectral);
    }
    return q == Quantity::Cdf ? qtt_spectral_cdf(c.model, c.filter, c.n, c.L, c.spectral)
                              : qtt_spectral_pdf(c.model, c.filter, c.n, c.L, c.spectral);
}

int execute(const RunConfig& c, bool write_curves) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(c.output);
    const GridSpec g = grid_of(c);
    json diag = {{"method", method_name(c.method)}, {"n", c.n}, {"L", c.L}, {"origin", c.origin}};
    std::vector<RiskReport> risk;
    try {
        if (c.method == Method::Dense || c.method == Method::Qtt) {
            diag["eps"] = c.eps;
            diag["filter"] = filter_name(c.filter);
            const CdfApproximation F = spectral(c, Quantity::Cdf);
            diag["cdf"] = json::parse(diagnostics_json(F.diag));
            if (write_curves) write_curve(c.output / "cdf.csv", "x,F", g, F.to_dense());
            if (write_curves && c.density) {
                const CdfApproximation f = spectral(c, Quantity::Pdf);
                diag["density"] = json::parse(diagnostics_json(f.diag));
                write_curve(c.output / "density.csv", "x,f", g, f.to_dense());
            }
            for (double a : c.alphas) risk.push_back(risk_report(F, a));
        } else if (c.method == Method::Mc) {
            diag["samples"] = c.samples;
            diag["seed"] = c.seed;
            const SampleSet s = mc_sample(c.model, c.samples, c.seed);
            if (write_curves) write_curve(c.output / "cdf.csv", "x,F", g, mc_cdf(s.samples, grid_points(g)));
            for (double a : c.alphas) {
                RiskReport r = mc_var_es(s.samples, a);
                const BootstrapError be = bootstrap_var_es(s.samples, a, 200, c.seed);
                risk.push_back(r);
                diag["bootstrap"].push_back({{"alpha", a}, {"var_se", be.var_se}, {"es_se", be.es_se}, {"resamples", be.resamples}});
            }
        } else {
            const DiscreteDistribution d = recursive_convolution(c.model);
            diag["support_size"] = d.support.size();
            if (write_curves) {
                write_curve(c.output / "cdf.csv", "x,F", g, exact_cdf(d, grid_points(g)));
                if (c.density) write_atomic(c.output / "pmf.csv", [&](std::ostream& os) { write_distribution_csv(os, d); });
            }
            for (double a : c.alphas) {
                RiskReport r;
                r.alpha = a;
                r.var = exact_var(d, a);
                r.es = exact_es(d, a);
                r.var_index = -1;
                risk.push_back(r);
            }
        }
    } catch (const ResourceLimitError& e) {
        diag["error"] = e.what();
        diag["failed_step"] = e.step();
        diag["bond"] = e.bond();
        write_json(c.output / "diagnostics.json", diag);
        throw;
    } catch (const NumericFailure& e) {
        diag["error"] = e.what();
        write_json(c.output / "diagnostics.json", diag);
        throw;
    }
    diag["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json rj = json::parse(risk_json(risk));
    if (c.method == Method::Mc || c.method == Method::Rc)
        for (auto& r : rj) r["representation"] = method_name(c.method);
    write_json(c.output / "risk.json", rj);
    write_json(c.output / "diagnostics.json", diag);
    return kExitOk;
}

// ---- bench ----

struct Instance {
    std::string family;
    int D = 0;
    uint64_t seed = 0;
    WeightedSumModel model;
};

std::vector<Instance> expand_instances(const json& spec) {
    std::vector<Instance> out;
    if (!spec.is_array()) throw InvalidArgument("sweep: 'instances' must be an array");
    for (const json& e : spec) {
        const std::string family = get_or<std::string>(e, "family", "");
        std::vector<int> Ds;
        if (e.contains("D")) {
            if (e["D"].is_array()) Ds = e["D"].get<std::vector<int>>();
            else Ds.push_back(e["D"].get<int>());
        } else {
            Ds.push_back(1);
        }
        const int count = get_or<int>(e, "seeds", 1);
        const uint64_t seed0 = get_or<uint64_t>(e, "seed", 1);
        for (int D : Ds) {
            if (D < 1) throw InvalidArgument("sweep: D must be positive");
            for (int s = 0; s < count; ++s) {
                Instance in{family, D, seed0 + static_cast<uint64_t>(s), {}};
                if (family == "binomial") {
                    in.model = binomial_model(D, get_or<double>(e, "p", 0.5));
                } else if (family == "wpb") {
                    in.model = wpb_instance(D, in.seed);
                } else if (family == "lognormal_sum") {
                    in.model = lognormal_sum_instance(D, in.seed);
                } else if (family == "lognormal") {
                    WeightedSumModel m;
                    m.components.emplace_back(Lognormal{get_or<double>(e, "mu", 0.0), get_or<double>(e, "sigma", 1.0)});
                    m.weights.push_back(1.0);
                    in.model = validate_model(m);
                    in.D = 1;
                } else {
                    throw InvalidArgument("sweep: unknown family '" + family + "'");
                }
                out.push_back(std::move(in));
                if (family == "binomial" || family == "lognormal") break;  // deterministic families
            }
        }
    }
    return out;
}

template <class T>
std::vector<T> list_of(const json& j, const char* key, std::vector<T> fallback) {
    if (!j.contains(key)) return fallback;
    if (j[key].is_array()) return j[key].get<std::vector<T>>();
    return {j[key].get<T>()};
}

const std::vector<std::string> kBenchColumns = {
    "schema", "family", "D", "seed", "method", "quantity", "n", "eps", "filter", "L", "status", "error_l1", "error_l2",
    "error_linf", "error_median", "error_q90", "peak_bond", "final_max_bond", "wall_seconds", "peak_bytes",
    "final_bytes", "message"};

struct BenchRow {
    std::map<std::string, std::string> f;
    bool ok = false;
    bool resource = false;
};

std::vector<double> reference_curve(const Instance& in, const GridSpec& g, Quantity q, bool& have) {
    have = false;
    if (in.model.all_categorical() && q == Quantity::Cdf) {
        try {
            const auto d = recursive_convolution(in.model);
            have = true;
            return exact_cdf(d, grid_points(g));
        } catch (const ResourceLimitError&) {
            return {};
        }
    }
    if (in.family == "lognormal") {
        const auto& ln = std::get<Lognormal>(in.model.components[0]);
        std::vector<double> r(static_cast<size_t>(g.N()));
        for (long j = 0; j < g.N(); ++j) {
            const double x = g.point(j);
            if (x <= 0.0) continue;
            const double z = (std::log(x) - ln.mu) / ln.sigma;
            r[static_cast<size_t>(j)] = q == Quantity::Cdf ? normal_cdf(z)
                                                           : std::exp(-0.5 * z * z) / (x * ln.sigma * std::sqrt(2 * M_PI));
        }
        have = true;
        return r;
    }
    return {};
}

BenchRow bench_row(const Instance& in, Method m, Quantity q, int n, double eps, const FilterSpec& filter, double L,
                   double origin, long samples, int dense_cap) {
    BenchRow row;
    auto& f = row.f;
    f["schema"] = kBenchSchema;
    f["family"] = in.family;
    f["D"] = std::to_string(in.D);
    f["seed"] = std::to_string(in.seed);
    f["method"] = method_name(m);
    f["quantity"] = q == Quantity::Cdf ? "cdf" : "pdf";
    f["n"] = std::to_string(n);
    f["eps"] = m == Method::Qtt ? num(eps) : "";
    f["filter"] = m == Method::Dense || m == Method::Qtt ? filter_name(filter) : "";
    f["L"] = num(L);
    const GridSpec g{origin, origin + L, n};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::vector<double> values;
        bool have_values = n <= 24;
        if (m == Method::Dense || m == Method::Qtt) {
            SpectralOptions o;
            o.eps = eps;
            o.origin = origin;
            o.dense_cap = dense_cap;
            CdfApproximation c;
            if (m == Method::Dense) {
                c = q == Quantity::Cdf ? dense_spectral_cdf(in.model, filter, n, L, o) : dense_spectral_pdf(in.model, filter, n, L, o);
                f["peak_bytes"] = std::to_string(c.diag.peak_bytes);
                f["final_bytes"] = std::to_string(c.diag.final_bytes);
            } else {
                c = q == Quantity::Cdf ? qtt_spectral_cdf(in.model, filter, n, L, o) : qtt_spectral_pdf(in.model, filter, n, L, o);
                f["peak_bond"] = std::to_string(c.diag.peak_bond);
                f["final_max_bond"] = std::to_string(c.diag.final_max_bond);
                f["peak_bytes"] = std::to_string(c.diag.peak_bytes);
                f["final_bytes"] = std::to_string(c.diag.final_bytes);
            }
            f["wall_seconds"] = num(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            if (have_values) values = c.to_dense();
        } else if (m == Method::Mc) {
            if (q != Quantity::Cdf) throw InvalidArgument("mc supports cdf only");
            const SampleSet s = mc_sample(in.model, samples, in.seed);
            values = mc_cdf(s.samples, grid_points(g));
            f["wall_seconds"] = num(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            f["final_bytes"] = std::to_string(8 * s.samples.size());
        } else {
            if (q != Quantity::Cdf) throw InvalidArgument("rc supports cdf only");
            const auto d = recursive_convolution(in.model);
            f["wall_seconds"] = num(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            f["final_bytes"] = std::to_string(16 * d.support.size());
            values = exact_cdf(d, grid_points(g));
        }
        bool have_ref = false;
        const auto ref = have_values ? reference_curve(in, g, q, have_ref) : std::vector<double>{};
        if (have_ref) {
            const ErrorMetrics e = error_metrics(values, ref, g.dx());
            f["error_l1"] = num(e.l1);
            f["error_l2"] = num(e.l2);
            f["error_linf"] = num(e.linf);
            f["error_median"] = num(e.median);
            f["error_q90"] = num(e.q90);
        }
        f["status"] = "ok";
        row.ok = true;
    } catch (const ResourceLimitError& e) {
        f["status"] = "resource_limit";
        f["message"] = std::string(e.what()) + " (step " + std::to_string(e.step()) + ")";
        row.resource = true;
    } catch (const NumericFailure& e) {
        f["status"] = "numeric_failure";
        f["message"] = e.what();
    } catch (const InvalidArgument& e) {
        f["status"] = "invalid";
        f["message"] = e.what();
    }
    return row;
}

int cmd_bench(const fs::path& path) {
    const json j = parse_json(read_file(path), "sweep JSON");
    if (!j.is_object()) throw InvalidArgument("sweep must be a JSON object");
    const std::vector<Instance> instances = expand_instances(j.value("instances", json::array()));
    std::vector<Method> methods;
    for (const auto& s : list_of<std::string>(j, "methods", {"dense"})) methods.push_back(method_from_name(s));
    const auto ns = list_of<int>(j, "n", {});
    const auto epss = list_of<double>(j, "eps", {1e-8});
    std::vector<FilterSpec> filters;
    for (const auto& s : list_of<std::string>(j, "filters", {"none"})) filters.push_back(filter_from_name(s));
    const Quantity q = get_or<std::string>(j, "quantity", "cdf") == "pdf" ? Quantity::Pdf : Quantity::Cdf;
    const double delta = get_or<double>(j, "delta", 1e-8);
    const long samples = get_or<long>(j, "samples", 100000);
    const int dense_cap = get_or<int>(j, "dense_cap", 24);
    if (instances.empty() || methods.empty() || ns.empty() || epss.empty() || filters.empty()) {
        throw InvalidArgument("sweep is empty: instances, methods and n must be non-empty");
    }
    const fs::path out = path.parent_path() / get_or<std::string>(j, "output", "bench.csv");
    if (out.has_parent_path()) fs::create_directories(out.parent_path());

    std::vector<BenchRow> rows;
    for (const Instance& in : instances) {
        const bool continuous = in.model.all_lognormal();
        const double origin = get_or<double>(j, "origin", 0.0);
        const double L = j.contains("L") ? get_or<double>(j, "L", 1.0)
                                          : (continuous ? support_bound_sum(in.model, delta) - origin : 1.0);
        for (Method m : methods) {
            // filters and eps only vary the spectral methods
            const bool spectral = m == Method::Dense || m == Method::Qtt;
            const std::vector<FilterSpec> fls = spectral ? filters : std::vector<FilterSpec>{FilterSpec{}};
            const std::vector<double> es = m == Method::Qtt ? epss : std::vector<double>{epss.front()};
            for (int n : ns)
                for (const FilterSpec& fl : fls)
                    for (double eps : es) rows.push_back(bench_row(in, m, q, n, eps, fl, L, origin, samples, dense_cap));
        }
    }
    write_atomic(out, [&](std::ostream& os) {
        csv_row(os, kBenchColumns);
        for (const auto& r : rows) {
            std::vector<std::string> fields;
            for (const auto& c : kBenchColumns) {
                const auto it = r.f.find(c);
                fields.push_back(it == r.f.end() ? "" : it->second);
            }
            csv_row(os, fields);
        }
    });

    // ensemble mean and standard deviation over seeds
    struct Acc {
        std::vector<double> l1, median, bond, wall;
        int ok = 0, total = 0;
    };
    std::map<std::vector<std::string>, Acc> groups;
    auto val = [](const BenchRow& r, const char* k) {
        const auto it = r.f.find(k);
        return it == r.f.end() || it->second.empty() ? NAN : std::stod(it->second);
    };
    for (const auto& r : rows) {
        const std::vector<std::string> key = {r.f.at("family"), r.f.at("D"), r.f.at("method"), r.f.at("quantity"),
                                              r.f.at("n"), r.f.at("eps"), r.f.at("filter")};
        Acc& a = groups[key];
        ++a.total;
        if (!r.ok) continue;
        ++a.ok;
        a.l1.push_back(val(r, "error_l1"));
        a.median.push_back(val(r, "error_median"));
        a.bond.push_back(val(r, "final_max_bond"));
        a.wall.push_back(val(r, "wall_seconds"));
    }
    auto stats = [](const std::vector<double>& v) {
        double s = 0, s2 = 0;
        int k = 0;
        for (double x : v)
            if (!std::isnan(x)) {
                s += x;
                s2 += x * x;
                ++k;
            }
        if (k == 0) return std::pair<double, double>{NAN, NAN};
        const double m = s / k;
        return std::pair<double, double>{m, k > 1 ? std::sqrt(std::max(0.0, (s2 - k * m * m) / (k - 1))) : 0.0};
    };
    fs::path summary = out;
    summary.replace_filename(out.stem().string() + "_summary.csv");
    write_atomic(summary, [&](std::ostream& os) {
        csv_row(os, {"schema", "family", "D", "method", "quantity", "n", "eps", "filter", "rows", "ok", "error_l1_mean",
                     "error_l1_std", "error_median_mean", "error_median_std", "final_max_bond_mean",
                     "final_max_bond_std", "wall_seconds_mean", "wall_seconds_std"});
        for (const auto& [key, a] : groups) {
            std::vector<std::string> fields{kBenchSchema};
            fields.insert(fields.end(), key.begin(), key.end());
            fields.push_back(std::to_string(a.total));
            fields.push_back(std::to_string(a.ok));
            for (const auto* v : {&a.l1, &a.median, &a.bond, &a.wall}) {
                const auto [m, s] = stats(*v);
                fields.push_back(num(m));
                fields.push_back(num(s));
            }
            csv_row(os, fields);
        }
    });

    size_t ok = 0, resource = 0;
    for (const auto& r : rows) {
        ok += r.ok;
        resource += r.resource;
    }
    std::cout << "bench: " << ok << "/" << rows.size() << " rows succeeded, wrote " << out.string() << "\n";
    if (ok > 0) return kExitOk;
    return resource == rows.size() ? kExitResource : kExitNumeric;
}

int cmd_validate(const fs::path& path) {
    const WeightedSumModel m = model_from_json(read_file(path));
    size_t cat = 0;
    for (const auto& c : m.components) cat += std::holds_alternative<Categorical>(c);
    std::cout << "valid: " << m.size() << " components (" << cat << " categorical, " << m.size() - cat
              << " lognormal)\n";
    return kExitOk;
}

template <class Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const ResourceLimitError& e) {
        std::cerr << "resource limit: " << e.what();
        if (e.step() >= 0) std::cerr << " (step " << e.step() << ")";
        std::cerr << "\n";
        return kExitResource;
    } catch (const NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributions and tail risk of weighted sums via tensor-train Fourier inversion"};
    app.require_subcommand(1);
    std::string path;
    auto* validate = app.add_subcommand("validate", "Check a model file");
    validate->add_option("model", path, "model JSON")->required();
    auto* run = app.add_subcommand("run", "Compute CDF, optional density, risk and diagnostics");
    run->add_option("config", path, "run configuration JSON")->required();
    auto* risk = app.add_subcommand("risk", "Compute VaR and ES only");
    risk->add_option("config", path, "run configuration JSON")->required();
    auto* bench = app.add_subcommand("bench", "Run a benchmark sweep into CSV");
    bench->add_option("sweep", path, "sweep JSON")->required();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }
    if (*validate) return guarded([&] { return cmd_validate(path); });
    if (*run) return guarded([&] { return execute(load_run_config(path), true); });
    if (*risk) {
        return guarded([&] {
            RunConfig c = load_run_config(path);
            if (c.alphas.empty()) throw InvalidArgument("config: risk needs at least one alpha");
            return execute(c, false);
        });
    }
    return guarded([&] { return cmd_bench(path); });
}
