#include "qttagg/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace qttagg {

namespace {

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

bool is_pow2(size_t m) { return m >= 1 && (m & (m - 1)) == 0; }

// Layer r of the phase circuit as a phys-4 TT over p = q + 2 s, where q is the
// output digit stored at site r and s the input digits.
TensorTrain phase_layer(int n, int r, double sign) {
    std::vector<Core> cores;
    for (int t = 0; t < n; ++t) {
        if (t < r) {
            Core c(1, 4, 1);
            for (int p = 0; p < 4; ++p) c(0, p, 0) = 1.0;
            cores.push_back(std::move(c));
        } else if (t == r) {
            const long right = t == n - 1 ? 1 : 2;
            Core c(1, 4, right);
            for (int q = 0; q < 2; ++q)
                for (int s = 0; s < 2; ++s) {
                    const cplx v = (q && s) ? cplx(-1.0) : cplx(1.0);
                    c(0, q + 2 * s, right == 1 ? 0 : q) = v;
                }
            cores.push_back(std::move(c));
        } else {
            const long right = t == n - 1 ? 1 : 2;
            Core c(2, 4, right);
            const double frac = std::ldexp(1.0, -(t - r + 1));
            for (int b = 0; b < 2; ++b)
                for (int q = 0; q < 2; ++q)
                    for (int s = 0; s < 2; ++s) {
                        const double ang = sign * 2.0 * std::numbers::pi * b * s * frac;
                        c(b, q + 2 * s, right == 1 ? 0 : b) = std::polar(1.0, ang);
                    }
            cores.push_back(std::move(c));
        }
    }
    return TensorTrain(std::move(cores));
}

std::shared_ptr<const TtOperator> build_qft(int n, Direction dir) {
    const double sign = dir == Direction::Forward ? 1.0 : -1.0;
    const double tol = 1e-12;
    TensorTrain w = phase_layer(n, 0, sign);
    for (int r = 1; r < n; ++r) {
        w = tt_hadamard_truncate(w, phase_layer(n, r, sign), tol);
    }
    if (!std::isfinite(tt_norm(w))) throw ConvergenceFailure("qft_operator: non-finite operator", INFINITY);
    auto op = std::make_shared<TtOperator>();
    for (Core& c : w.cores) {
        OpCore oc(c.left, 2, 2, c.right);
        oc.data = std::move(c.data);
        if (dir == Direction::Inverse)
            for (cplx& z : oc.data) z *= 0.5;
        op->cores.push_back(std::move(oc));
    }
    return op;
}

void negate_odd(TensorTrain& tt) {
    Core& c = tt.cores.back();
    for (long r = 0; r < c.right; ++r)
        for (long l = 0; l < c.left; ++l) c(l, 1, r) = -c(l, 1, r);
}

}  // namespace

void dense_dft_inplace(std::vector<cplx>& buf, Direction dir) {
    const size_t M = buf.size();
    if (!is_pow2(M)) throw InvalidArgument("dense_dft: length must be a power of two");
    if (dir == Direction::Forward) {
        for (size_t m = 1; m < M; m += 2) buf[m] = -buf[m];
    }
    auto* data = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(M), data, data,
                                dir == Direction::Forward ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan);
    }
    if (dir == Direction::Inverse) {
        const double inv = 1.0 / static_cast<double>(M);
        for (size_t m = 0; m < M; ++m) buf[m] *= (m & 1) ? -inv : inv;
    }
}

std::vector<cplx> dense_dft(std::span<const cplx> values, Direction dir) {
    std::vector<cplx> buf(values.begin(), values.end());
    dense_dft_inplace(buf, dir);
    return buf;
}

std::shared_ptr<const TtOperator> qft_operator(int n, Direction dir) {
    if (n < 1) throw InvalidArgument("qft_operator: n must be positive");
    static std::mutex mtx;
    static std::map<std::pair<int, int>, std::shared_ptr<const TtOperator>> cache;
    const auto key = std::make_pair(n, static_cast<int>(dir));
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto op = build_qft(n, dir);
    std::lock_guard<std::mutex> lock(mtx);
    auto [it, inserted] = cache.emplace(key, op);
    return it->second;
}

TensorTrain reverse_cores(const TensorTrain& tt) {
    std::vector<Core> out;
    for (size_t k = tt.size(); k-- > 0;) {
        const Core& c = tt.cores[k];
        Core r(c.right, c.phys, c.left);
        for (long a = 0; a < c.left; ++a)
            for (long s = 0; s < c.phys; ++s)
                for (long b = 0; b < c.right; ++b) r(b, s, a) = c(a, s, b);
        out.push_back(std::move(r));
    }
    return TensorTrain(std::move(out));
}

TensorTrain apply_fourier(const TensorTrain& tt, Direction dir, double eps, TruncStats* stats) {
    tt.validate();
    for (const Core& c : tt.cores)
        if (c.phys != 2) throw InvalidArgument("apply_fourier: binary QTT required");
    const int n = static_cast<int>(tt.size());
    auto op = qft_operator(n, dir);
    TensorTrain x = tt;
    if (dir == Direction::Forward) negate_odd(x);
    TensorTrain y = reverse_cores(apply_operator(*op, x, eps, stats));
    if (dir == Direction::Inverse) negate_odd(y);
    return y;
}

TensorTrain dirichlet_kernel_qtt(const FrequencyGrid& freq, double eps) {
    const TensorTrain half = qtt_step(freq.n_pad, freq.N(), StepSense::Below);
    return apply_fourier(half, Direction::Forward, eps);
}

std::vector<cplx> dirichlet_kernel_dense(const FrequencyGrid& freq) {
    std::vector<cplx> ind(static_cast<size_t>(freq.M()), 0.0);
    for (long j = 0; j < freq.N(); ++j) ind[static_cast<size_t>(j)] = 1.0;
    return dense_dft(ind, Direction::Forward);
}

TensorTrain project_lower_half(const TensorTrain& tt) {
    tt.validate();
    if (tt.size() < 2) throw InvalidArgument("project_lower_half: need at least two cores");
    const Core& c0 = tt.cores[0];
    const Core& c1 = tt.cores[1];
    Core merged(1, c1.phys, c1.right);
    for (long r = 0; r < c1.right; ++r)
        for (long s = 0; s < c1.phys; ++s) {
            cplx acc = 0.0;
            for (long m = 0; m < c1.left; ++m) acc += c0(0, 0, m) * c1(m, s, r);
            merged(0, s, r) = acc;
        }
    std::vector<Core> out;
    out.push_back(std::move(merged));
    for (size_t k = 2; k < tt.size(); ++k) out.push_back(tt.cores[k]);
    return TensorTrain(std::move(out));
}

}  // namespace qttagg
