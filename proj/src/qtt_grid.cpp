#include "qttagg/qtt_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qttagg {

void GridSpec::validate() const {
    if (n < 1 || n > 62) throw InvalidArgument("grid core count out of range");
    if (!(b > a) || !std::isfinite(a) || !std::isfinite(b)) throw InvalidArgument("grid needs finite a < b");
}

FrequencyGrid frequency_grid(int n, double L) {
    if (n < 1) throw InvalidArgument("frequency grid needs n >= 1");
    if (!(L > 0)) throw InvalidArgument("frequency grid needs L > 0");
    FrequencyGrid f;
    f.n_pad = n + 1;
    f.omega_max = std::numbers::pi * static_cast<double>(1L << n) / L;
    return f;
}

double index_to_point(const GridSpec& grid, std::span<const int> digits) {
    if (static_cast<int>(digits.size()) != grid.n) throw InvalidArgument("index_to_point: wrong digit count");
    double frac = 0.0, w = 0.5;
    for (int d : digits) {
        if (d != 0 && d != 1) throw InvalidArgument("index_to_point: digits must be 0 or 1");
        frac += w * d;
        w *= 0.5;
    }
    return grid.a + grid.length() * frac;
}

long digits_to_index(std::span<const int> digits) {
    long j = 0;
    for (int d : digits) j = 2 * j + d;
    return j;
}

std::vector<int> index_to_digits(long j, int n) {
    std::vector<int> d(static_cast<size_t>(n));
    for (int i = n - 1; i >= 0; --i) {
        d[static_cast<size_t>(i)] = static_cast<int>(j & 1);
        j >>= 1;
    }
    return d;
}

TensorTrain qtt_constant(int n, cplx c) {
    std::vector<Core> cores;
    for (int k = 0; k < n; ++k) {
        Core core(1, 2, 1);
        const cplx v = k == 0 ? c : cplx(1.0);
        core(0, 0, 0) = v;
        core(0, 1, 0) = v;
        cores.push_back(std::move(core));
    }
    return TensorTrain(std::move(cores));
}

TensorTrain qtt_exponential(const GridSpec& grid, cplx c, cplx lambda) {
    const cplx cs[1] = {c};
    const cplx ls[1] = {lambda};
    return qtt_sum_of_exponentials(grid, cs, ls);
}

TensorTrain qtt_sum_of_exponentials(const GridSpec& grid, std::span<const cplx> coeffs,
                                    std::span<const cplx> rates) {
    grid.validate();
    if (coeffs.empty() || coeffs.size() != rates.size()) {
        throw InvalidArgument("qtt_sum_of_exponentials: need K >= 1 matching coefficients and rates");
    }
    const long K = static_cast<long>(coeffs.size());
    const int n = grid.n;
    const double L = grid.length();
    const double last = grid.b - grid.dx();
    // Growing terms are anchored at the last grid point so that every digit
    // factor has modulus <= 1.
    std::vector<cplx> front(static_cast<size_t>(K));
    std::vector<bool> right_anchor(static_cast<size_t>(K));
    for (long k = 0; k < K; ++k) {
        const cplx lam = rates[static_cast<size_t>(k)];
        const bool ra = lam.real() > 0;
        right_anchor[static_cast<size_t>(k)] = ra;
        front[static_cast<size_t>(k)] = coeffs[static_cast<size_t>(k)] * std::exp(lam * (ra ? last : grid.a));
    }
    std::vector<Core> cores;
    for (int i = 0; i < n; ++i) {
        const double h = L * std::ldexp(1.0, -(i + 1));
        const long left = i == 0 ? 1 : K;
        const long right = i == n - 1 ? 1 : K;
        Core core(left, 2, right);
        for (long k = 0; k < K; ++k) {
            const cplx lam = rates[static_cast<size_t>(k)];
            cplx f0, f1;
            if (right_anchor[static_cast<size_t>(k)]) {
                f0 = std::exp(-lam * h);
                f1 = 1.0;
            } else {
                f0 = 1.0;
                f1 = std::exp(lam * h);
            }
            if (i == 0) {
                f0 *= front[static_cast<size_t>(k)];
                f1 *= front[static_cast<size_t>(k)];
            }
            const long l = i == 0 ? 0 : k;
            const long r = i == n - 1 ? 0 : k;
            core(l, 0, r) += f0;
            core(l, 1, r) += f1;
        }
        cores.push_back(std::move(core));
    }
    return TensorTrain(std::move(cores));
}

TensorTrain qtt_linear(const GridSpec& grid, cplx alpha, cplx beta) {
    grid.validate();
    const int n = grid.n;
    const double L = grid.length();
    if (n == 1) {
        Core c(1, 2, 1);
        c(0, 0, 0) = alpha + beta * grid.a;
        c(0, 1, 0) = alpha + beta * (grid.a + 0.5 * L);
        return TensorTrain({c});
    }
    std::vector<Core> cores;
    for (int i = 0; i < n; ++i) {
        const double h = L * std::ldexp(1.0, -(i + 1));
        if (i == 0) {
            Core c(1, 2, 2);
            for (int s = 0; s < 2; ++s) {
                c(0, s, 0) = 1.0;
                c(0, s, 1) = alpha + beta * (grid.a + h * s);
            }
            cores.push_back(std::move(c));
        } else if (i == n - 1) {
            Core c(2, 2, 1);
            for (int s = 0; s < 2; ++s) {
                c(0, s, 0) = beta * (h * s);
                c(1, s, 0) = 1.0;
            }
            cores.push_back(std::move(c));
        } else {
            Core c(2, 2, 2);
            for (int s = 0; s < 2; ++s) {
                c(0, s, 0) = 1.0;
                c(0, s, 1) = beta * (h * s);
                c(1, s, 1) = 1.0;
            }
            cores.push_back(std::move(c));
        }
    }
    return TensorTrain(std::move(cores));
}

TensorTrain qtt_step(int n, long j0, StepSense sense) {
    if (n < 1) throw InvalidArgument("qtt_step: n must be positive");
    const long N = 1L << n;
    if (j0 < 0 || j0 > N) throw InvalidArgument("qtt_step: threshold index out of range");
    if (j0 == N) return qtt_constant(n, sense == StepSense::AtOrAbove ? 0.0 : 1.0);
    // Digit-by-digit comparison of j with j0. State 0: prefix equal so far;
    // state 1: already decided in favour of the selected side.
    const std::vector<int> t = index_to_digits(j0, n);
    const bool above = sense == StepSense::AtOrAbove;
    std::vector<Core> cores;
    for (int i = 0; i < n; ++i) {
        const long left = i == 0 ? 1 : 2;
        const long right = i == n - 1 ? 1 : 2;
        Core c(left, 2, right);
        for (int s = 0; s < 2; ++s) {
            const int ti = t[static_cast<size_t>(i)];
            const bool decides = above ? s > ti : s < ti;
            // transitions into (equal, decided)
            double eq_to_eq = s == ti ? 1.0 : 0.0;
            double eq_to_dec = decides ? 1.0 : 0.0;
            if (i == n - 1) {
                // accept: decided, plus equal when the relation is non-strict
                const double acc_eq = above ? 1.0 : 0.0;
                c(0, s, 0) = eq_to_eq * acc_eq + eq_to_dec;
                if (i > 0) c(1, s, 0) = 1.0;
            } else {
                c(0, s, 0) = eq_to_eq;
                c(0, s, 1) = eq_to_dec;
                if (i > 0) c(1, s, 1) = 1.0;
            }
        }
        cores.push_back(std::move(c));
    }
    return TensorTrain(std::move(cores));
}

std::vector<cplx> chebyshev_coefficients(const std::function<cplx(double)>& f, int K) {
    if (K < 0) throw InvalidArgument("chebyshev order must be non-negative");
    const int m = K + 1;
    std::vector<cplx> vals(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double x = std::cos(std::numbers::pi * (j + 0.5) / m);
        vals[static_cast<size_t>(j)] = f(x);
        if (!std::isfinite(vals[static_cast<size_t>(j)].real()) || !std::isfinite(vals[static_cast<size_t>(j)].imag())) {
            throw NumericFailure("chebyshev: function is not finite at x = " + std::to_string(x));
        }
    }
    std::vector<cplx> c(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k) {
        cplx acc = 0.0;
        for (int j = 0; j < m; ++j) acc += vals[static_cast<size_t>(j)] * std::cos(std::numbers::pi * k * (j + 0.5) / m);
        c[static_cast<size_t>(k)] = acc * (2.0 / m);
    }
    c[0] *= 0.5;
    return c;
}

TensorTrain qtt_chebyshev(const GridSpec& grid, const std::function<cplx(double)>& f, int max_order,
                          double eps, ChebyshevInfo* info) {
    grid.validate();
    if (max_order < 1) throw InvalidArgument("qtt_chebyshev: max_order must be >= 1");
    if (!(eps > 0)) throw InvalidArgument("qtt_chebyshev: eps must be positive");
    const double a = grid.a, b = grid.b;
    auto g = [&](double t) { return f(0.5 * (a + b) + 0.5 * (b - a) * t); };

    std::vector<cplx> c;
    double estimate = 0.0;
    bool converged = false;
    for (int K = std::min(16, max_order);; K = std::min(2 * K, max_order)) {
        c = chebyshev_coefficients(g, K);
        double cmax = 0.0;
        for (const cplx& z : c) cmax = std::max(cmax, std::abs(z));
        const double thr = eps * std::max(cmax, 1e-300);
        const double last2 = std::abs(c.back()) + (K >= 1 ? std::abs(c[c.size() - 2]) : 0.0);
        const bool tail_small = std::abs(c.back()) < thr && (K < 1 || std::abs(c[c.size() - 2]) < thr);
        if (cmax == 0.0 || tail_small) {
            // chop trailing coefficients whose accumulated magnitude stays under the threshold
            const double aliasing = std::abs(c.back());
            double dropped = 0.0;
            size_t keep = c.size();
            while (keep > 1 && dropped + std::abs(c[keep - 1]) < 0.25 * thr) {
                dropped += std::abs(c[keep - 1]);
                --keep;
            }
            c.resize(keep);
            // chopped tail, a same-size allowance for aliasing, and the
            // Clenshaw truncation budget
            estimate = 2.0 * (dropped + aliasing) + 0.1 * thr;
            converged = true;
            break;
        }
        estimate = last2;
        if (K >= max_order) break;
    }
    if (!converged) {
        throw ConvergenceFailure("qtt_chebyshev: coefficients did not decay by order " + std::to_string(max_order),
                                 estimate);
    }
    const int deg = static_cast<int>(c.size()) - 1;
    if (info) {
        info->order = deg;
        info->estimate = estimate;
    }
    const int n = grid.n;
    if (deg == 0) return qtt_constant(n, c[0]);

    // Absolute truncation so the pointwise error is bounded by the L2 error.
    // An error injected at step k is amplified by at most k + 1 in the
    // recurrence and there are two truncations per step.
    double cmax = 0.0;
    for (const cplx& z : c) cmax = std::max(cmax, std::abs(z));
    // Floored at the rounding level of a length-2^n vector, below which the
    // SVD only resolves noise and the bonds saturate.
    const double tol = std::max(0.1 * eps * cmax / (static_cast<double>(deg + 1) * (deg + 1)),
                                1e-15 * cmax * std::sqrt(static_cast<double>(grid.N())));
    const TensorTrain t = qtt_linear(grid, -(a + b) / (b - a), 2.0 / (b - a));
    TensorTrain b1 = qtt_constant(n, c[static_cast<size_t>(deg)]);
    TensorTrain b2 = qtt_constant(n, 0.0);
    for (int k = deg - 1; k >= 1; --k) {
        TensorTrain tb = tt_hadamard_truncate(t, b1, tol, nullptr, true);
        TensorTrain next = tt_add(tt_add(qtt_constant(n, c[static_cast<size_t>(k)]), tt_scale(tb, 2.0)), tt_scale(b2, -1.0));
        next = tt_truncate(next, tol, true);
        b2 = std::move(b1);
        b1 = std::move(next);
    }
    TensorTrain tb = tt_hadamard_truncate(t, b1, tol, nullptr, true);
    TensorTrain out = tt_add(tt_add(qtt_constant(n, c[0]), tb), tt_scale(b2, -1.0));
    return tt_truncate(out, tol, true);
}

TensorTrain qtt_piecewise_halves(const TensorTrain& neg, const TensorTrain& pos) {
    if (neg.size() != pos.size() || neg.size() == 0) {
        throw InvalidArgument("qtt_piecewise_halves: halves must have the same nonzero core count");
    }
    auto lift = [](const TensorTrain& half, int digit) {
        std::vector<Core> cores;
        Core sel(1, 2, 1);
        sel(0, digit, 0) = 1.0;
        cores.push_back(std::move(sel));
        for (const Core& c : half.cores) cores.push_back(c);
        return TensorTrain(std::move(cores));
    };
    return tt_add(lift(neg, 0), lift(pos, 1));
}

}  // namespace qttagg
