#include "qttagg/tt_core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "linalg.hpp"

namespace qttagg {

using linalg::Mat;
using MapM = Eigen::Map<Mat>;
using CMapM = Eigen::Map<const Mat>;
using CStrided = Eigen::Map<const Mat, 0, Eigen::OuterStride<>>;

namespace {

long initial_bond_cap() {
    if (const char* env = std::getenv("QTTAGG_BOND_CAP")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return v;
    }
    return 4096;
}

std::atomic<long>& cap_storage() {
    static std::atomic<long> cap{initial_bond_cap()};
    return cap;
}

CMapM left_unfold(const Core& c) { return CMapM(c.data.data(), c.left * c.phys, c.right); }
CMapM right_unfold(const Core& c) { return CMapM(c.data.data(), c.left, c.phys * c.right); }

// Slice s of a core as a (left x right) matrix.
CStrided slice(const Core& c, long s) {
    return CStrided(c.data.data() + c.left * s, c.left, c.right, Eigen::OuterStride<>(c.left * c.phys));
}

Core core_from(const Mat& m, long left, long phys, long right) {
    Core c(left, phys, right);
    std::copy(m.data(), m.data() + m.size(), c.data.begin());
    return c;
}

void check_same_shape(const TensorTrain& a, const TensorTrain& b, const char* what) {
    if (a.size() != b.size() || a.size() == 0) {
        throw InvalidArgument(std::string(what) + ": core count mismatch");
    }
    for (size_t k = 0; k < a.size(); ++k) {
        if (a.cores[k].phys != b.cores[k].phys) {
            throw InvalidArgument(std::string(what) + ": physical dimension mismatch at core " +
                                  std::to_string(k));
        }
    }
}

// Builds a right-orthogonal TT from right to left. `contract(k, G)` must
// return the right unfolding (combined-left x phys*cols(G)) of core k with the
// carry G absorbed into its right bond. Returns the TT whose first core holds
// the whole norm.
template <class Contract>
TensorTrain zip_right(size_t n, const std::vector<long>& phys, Contract&& contract, long& peak) {
    std::vector<Core> out(n);
    Mat G = Mat::Identity(1, 1);
    for (size_t kk = n; kk-- > 0;) {
        const long P = phys[kk];
        const long rcols = G.cols();
        Mat M = contract(kk, G);
        if (kk == 0) {
            out[0] = core_from(M, 1, P, rcols);
            break;
        }
        Mat mh = M.adjoint();
        Mat q, r;
        linalg::thin_qr(mh, q, r);
        const long rank = q.cols();
        peak = std::max(peak, rank);
        Mat qh = q.adjoint();
        out[kk] = core_from(qh, rank, P, rcols);
        G = r.adjoint();
    }
    return TensorTrain(std::move(out));
}

// Left-to-right SVD sweep on a right-orthogonal TT.
TensorTrain svd_sweep(TensorTrain tt, double eps, bool absolute, TruncStats* stats) {
    const size_t n = tt.size();
    double norm2 = 0.0;
    for (const cplx& z : tt.cores[0].data) norm2 += std::norm(z);
    const double total = absolute ? eps * eps : eps * eps * norm2;
    const double budget = n > 1 ? total / static_cast<double>(n - 1) : total;
    const long cap = bond_cap();
    long final_bond = 1;
    for (size_t k = 0; k + 1 < n; ++k) {
        Core& c = tt.cores[k];
        Core& nx = tt.cores[k + 1];
        linalg::Svd s = linalg::svd(Mat(left_unfold(c)));
        const long r = static_cast<long>(linalg::truncation_rank(s.S, budget));
        if (r > cap) {
            throw ResourceLimitError("bond dimension " + std::to_string(r) + " exceeds cap " +
                                         std::to_string(cap),
                                     r);
        }
        final_bond = std::max(final_bond, r);
        Mat u = s.U.leftCols(r);
        c = core_from(u, c.left, c.phys, r);
        Mat sv = s.S.head(r).cast<cplx>().asDiagonal() * s.Vh.topRows(r);
        Mat rest = sv * right_unfold(nx);
        nx = core_from(rest, r, nx.phys, nx.right);
    }
    if (stats) stats->final_bond = std::max(stats->final_bond, final_bond);
    return tt;
}

}  // namespace

std::vector<long> TensorTrain::physical_dims() const {
    std::vector<long> p;
    p.reserve(cores.size());
    for (const auto& c : cores) p.push_back(c.phys);
    return p;
}

std::vector<long> TensorTrain::bond_dims() const {
    std::vector<long> b;
    for (size_t k = 0; k + 1 < cores.size(); ++k) b.push_back(cores[k].right);
    return b;
}

long TensorTrain::max_bond() const {
    long m = 1;
    for (long b : bond_dims()) m = std::max(m, b);
    return m;
}

size_t TensorTrain::bytes() const {
    size_t s = 0;
    for (const auto& c : cores) s += c.data.size() * sizeof(cplx);
    return s;
}

void TensorTrain::validate() const {
    if (cores.empty()) throw InvalidArgument("tensor train has no cores");
    if (cores.front().left != 1 || cores.back().right != 1) {
        throw InvalidArgument("boundary bonds must be 1");
    }
    for (size_t k = 0; k < cores.size(); ++k) {
        const Core& c = cores[k];
        if (c.left < 1 || c.phys < 1 || c.right < 1 ||
            c.data.size() != static_cast<size_t>(c.left * c.phys * c.right)) {
            throw InvalidArgument("malformed core " + std::to_string(k));
        }
        if (k + 1 < cores.size() && c.right != cores[k + 1].left) {
            throw InvalidArgument("bond mismatch between cores " + std::to_string(k) + " and " +
                                  std::to_string(k + 1));
        }
    }
}

std::vector<long> TtOperator::bond_dims() const {
    std::vector<long> b;
    for (size_t k = 0; k + 1 < cores.size(); ++k) b.push_back(cores[k].right);
    return b;
}

long TtOperator::max_bond() const {
    long m = 1;
    for (long b : bond_dims()) m = std::max(m, b);
    return m;
}

long bond_cap() { return cap_storage().load(); }

void set_bond_cap(long cap) {
    if (cap < 1) throw InvalidArgument("bond cap must be positive");
    cap_storage().store(cap);
}

cplx tt_element(const TensorTrain& tt, std::span<const int> digits) {
    if (digits.size() != tt.size()) throw InvalidArgument("tt_element: wrong number of digits");
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
    for (size_t k = 0; k < tt.size(); ++k) {
        const Core& c = tt.cores[k];
        if (digits[k] < 0 || digits[k] >= c.phys) {
            throw InvalidArgument("tt_element: digit out of range at core " + std::to_string(k));
        }
        v = v * slice(c, digits[k]);
    }
    return v(0);
}

TensorTrain tt_from_dense(std::span<const cplx> values, const std::vector<long>& phys, double eps) {
    if (phys.empty()) throw InvalidArgument("tt_from_dense: no physical dims");
    if (eps < 0) throw InvalidArgument("tt_from_dense: negative tolerance");
    size_t total = 1;
    for (long p : phys) {
        if (p < 1) throw InvalidArgument("tt_from_dense: physical dims must be positive");
        total *= static_cast<size_t>(p);
    }
    if (total != values.size()) throw InvalidArgument("tt_from_dense: length mismatch");
    const size_t n = phys.size();
    double norm2 = 0.0;
    for (const cplx& z : values) norm2 += std::norm(z);
    const double budget = n > 1 ? eps * eps * norm2 / static_cast<double>(n - 1) : 0.0;
    const long cap = bond_cap();

    std::vector<Core> cores(n);
    // rem: r_prev x remaining, remaining index big-endian over digits k..n-1
    Mat rem = CMapM(values.data(), static_cast<long>(total), 1).transpose();
    long rprev = 1;
    long remaining = static_cast<long>(total);
    for (size_t k = 0; k < n; ++k) {
        const long P = phys[k];
        const long Q = remaining / P;
        if (k + 1 == n) {
            cores[k] = core_from(rem, rprev, P, 1);
            break;
        }
        Mat W(rprev * P, Q);
        for (long q = 0; q < Q; ++q)
            for (long s = 0; s < P; ++s)
                for (long l = 0; l < rprev; ++l) W(l + rprev * s, q) = rem(l, s * Q + q);
        linalg::Svd sv = linalg::svd(W);
        const long r = static_cast<long>(linalg::truncation_rank(sv.S, budget));
        if (r > cap) throw ResourceLimitError("tt_from_dense: bond exceeds cap", r);
        cores[k] = core_from(Mat(sv.U.leftCols(r)), rprev, P, r);
        rem = sv.S.head(r).cast<cplx>().asDiagonal() * sv.Vh.topRows(r);
        rprev = r;
        remaining = Q;
    }
    return TensorTrain(std::move(cores));
}

TensorTrain tt_from_dense(std::span<const cplx> values, int n, double eps) {
    return tt_from_dense(values, std::vector<long>(static_cast<size_t>(n), 2), eps);
}

std::vector<cplx> tt_to_dense(const TensorTrain& tt, size_t cap) {
    tt.validate();
    size_t total = 1;
    for (const auto& c : tt.cores) {
        total *= static_cast<size_t>(c.phys);
        if (total > cap) throw ResourceLimitError("tt_to_dense: size exceeds dense cap");
    }
    Mat T = Mat::Ones(1, 1);
    for (const Core& c : tt.cores) {
        Mat next(T.rows() * c.phys, c.right);
        for (long s = 0; s < c.phys; ++s) {
            Mat part = T * slice(c, s);
            for (long p = 0; p < T.rows(); ++p) next.row(p * c.phys + s) = part.row(p);
        }
        T = std::move(next);
    }
    return std::vector<cplx>(T.data(), T.data() + T.size());
}

TensorTrain tt_truncate(const TensorTrain& tt, double eps, bool absolute, TruncStats* stats) {
    tt.validate();
    if (eps < 0) throw InvalidArgument("tt_truncate: negative tolerance");
    long peak = tt.max_bond();
    auto contract = [&](size_t k, const Mat& G) -> Mat {
        const Core& c = tt.cores[k];
        Mat m = left_unfold(c) * G;
        return MapM(m.data(), c.left, c.phys * G.cols());
    };
    TensorTrain r = zip_right(tt.size(), tt.physical_dims(), contract, peak);
    if (stats) stats->peak_bond = std::max(stats->peak_bond, peak);
    return svd_sweep(std::move(r), eps, absolute, stats);
}

TensorTrain tt_hadamard(const TensorTrain& a, const TensorTrain& b) {
    check_same_shape(a, b, "tt_hadamard");
    std::vector<Core> out;
    out.reserve(a.size());
    for (size_t k = 0; k < a.size(); ++k) {
        const Core& A = a.cores[k];
        const Core& B = b.cores[k];
        Core C(A.left * B.left, A.phys, A.right * B.right);
        for (long rb = 0; rb < B.right; ++rb)
            for (long ra = 0; ra < A.right; ++ra)
                for (long s = 0; s < A.phys; ++s)
                    for (long lb = 0; lb < B.left; ++lb)
                        for (long la = 0; la < A.left; ++la)
                            C(la + A.left * lb, s, ra + A.right * rb) = A(la, s, ra) * B(lb, s, rb);
        out.push_back(std::move(C));
    }
    return TensorTrain(std::move(out));
}

TensorTrain tt_hadamard_truncate(const TensorTrain& a, const TensorTrain& b, double eps,
                                 TruncStats* stats, bool absolute) {
    check_same_shape(a, b, "tt_hadamard");
    if (eps < 0) throw InvalidArgument("tt_hadamard_truncate: negative tolerance");
    long peak = 1;
    auto contract = [&](size_t k, const Mat& G) -> Mat {
        const Core& A = a.cores[k];
        const Core& B = b.cores[k];
        const long La = A.left, Lb = B.left, Ra = A.right, Rb = B.right, P = A.phys;
        const long Rp = G.cols();
        Mat M(La * Lb, P * Rp);
        CMapM Gr(G.data(), Ra, Rb * Rp);
        for (long s = 0; s < P; ++s) {
            Mat X = slice(A, s) * Gr;  // La x (Rb*Rp)
            const auto Bs = slice(B, s);
            for (long r = 0; r < Rp; ++r) {
                Mat Y = X.middleCols(Rb * r, Rb) * Bs.transpose();  // La x Lb
                M.col(s + P * r) = MapM(Y.data(), La * Lb, 1);
            }
        }
        return M;
    };
    TensorTrain r = zip_right(a.size(), a.physical_dims(), contract, peak);
    if (stats) stats->peak_bond = std::max(stats->peak_bond, peak);
    return svd_sweep(std::move(r), eps, absolute, stats);
}

TensorTrain tt_add(const TensorTrain& a, const TensorTrain& b) {
    check_same_shape(a, b, "tt_add");
    const size_t n = a.size();
    std::vector<Core> out(n);
    if (n == 1) {
        Core c = a.cores[0];
        for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.cores[0].data[i];
        out[0] = std::move(c);
        return TensorTrain(std::move(out));
    }
    for (size_t k = 0; k < n; ++k) {
        const Core& A = a.cores[k];
        const Core& B = b.cores[k];
        const bool first = k == 0, last = k + 1 == n;
        const long L = first ? 1 : A.left + B.left;
        const long R = last ? 1 : A.right + B.right;
        Core C(L, A.phys, R);
        const long lo = first ? 0 : A.left;
        const long ro = last ? 0 : A.right;
        for (long s = 0; s < A.phys; ++s) {
            for (long r = 0; r < A.right; ++r)
                for (long l = 0; l < A.left; ++l) C(l, s, r) = A(l, s, r);
            for (long r = 0; r < B.right; ++r)
                for (long l = 0; l < B.left; ++l) C(l + lo, s, r + ro) += B(l, s, r);
        }
        out[k] = std::move(C);
    }
    return TensorTrain(std::move(out));
}

TensorTrain tt_scale(const TensorTrain& a, cplx c) {
    TensorTrain r = a;
    if (r.cores.empty()) return r;
    for (cplx& z : r.cores.back().data) z *= c;
    return r;
}

TensorTrain tt_conj(const TensorTrain& a) {
    TensorTrain r = a;
    for (auto& core : r.cores)
        for (cplx& z : core.data) z = std::conj(z);
    return r;
}

cplx tt_inner(const TensorTrain& a, const TensorTrain& b) {
    check_same_shape(a, b, "tt_inner");
    Mat E = Mat::Ones(1, 1);
    for (size_t k = 0; k < a.size(); ++k) {
        const Core& A = a.cores[k];
        const Core& B = b.cores[k];
        Mat next = Mat::Zero(A.right, B.right);
        for (long s = 0; s < A.phys; ++s) next.noalias() += slice(A, s).adjoint() * (E * slice(B, s));
        E = std::move(next);
    }
    return E(0, 0);
}

double tt_norm(const TensorTrain& a) {
    a.validate();
    Mat R = Mat::Ones(1, 1);
    for (size_t k = 0; k < a.size(); ++k) {
        const Core& c = a.cores[k];
        Mat m = R * right_unfold(c);  // r x (P*right)
        MapM lu(m.data(), R.rows() * c.phys, c.right);
        if (k + 1 == a.size()) return lu.norm();
        Mat q, r;
        linalg::thin_qr(Mat(lu), q, r);
        R = std::move(r);
    }
    return R.norm();
}

cplx tt_sum(const TensorTrain& a) {
    a.validate();
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
    for (const Core& c : a.cores) {
        Eigen::RowVectorXcd next = Eigen::RowVectorXcd::Zero(c.right);
        for (long s = 0; s < c.phys; ++s) next += v * slice(c, s);
        v = next;
    }
    return v(0);
}

TtOperator identity_operator(int n) {
    TtOperator op;
    for (int k = 0; k < n; ++k) {
        OpCore c(1, 2, 2, 1);
        c(0, 0, 0, 0) = 1.0;
        c(0, 1, 1, 0) = 1.0;
        op.cores.push_back(std::move(c));
    }
    return op;
}

namespace {

void check_operator(const TtOperator& op, const TensorTrain& x) {
    if (op.size() != x.size() || x.size() == 0) {
        throw InvalidArgument("apply_operator: core count mismatch");
    }
    for (size_t k = 0; k < x.size(); ++k) {
        if (op.cores[k].in != x.cores[k].phys) {
            throw InvalidArgument("apply_operator: input dimension mismatch at core " + std::to_string(k));
        }
    }
}

}  // namespace

TensorTrain apply_operator_raw(const TtOperator& op, const TensorTrain& x) {
    check_operator(op, x);
    std::vector<Core> out;
    for (size_t k = 0; k < x.size(); ++k) {
        const OpCore& W = op.cores[k];
        const Core& X = x.cores[k];
        Core C(W.left * X.left, W.out, W.right * X.right);
        for (long rx = 0; rx < X.right; ++rx)
            for (long rw = 0; rw < W.right; ++rw)
                for (long o = 0; o < W.out; ++o)
                    for (long i = 0; i < W.in; ++i)
                        for (long lx = 0; lx < X.left; ++lx)
                            for (long lw = 0; lw < W.left; ++lw)
                                C(lw + W.left * lx, o, rw + W.right * rx) += W(lw, o, i, rw) * X(lx, i, rx);
        out.push_back(std::move(C));
    }
    return TensorTrain(std::move(out));
}

TensorTrain apply_operator(const TtOperator& op, const TensorTrain& x, double eps, TruncStats* stats) {
    check_operator(op, x);
    long peak = 1;
    std::vector<long> phys;
    for (const auto& c : op.cores) phys.push_back(c.out);
    auto contract = [&](size_t k, const Mat& G) -> Mat {
        const OpCore& W = op.cores[k];
        const Core& X = x.cores[k];
        const long Lw = W.left, Rw = W.right, Lx = X.left, Rx = X.right, O = W.out, I = W.in;
        const long Rp = G.cols();
        Mat M = Mat::Zero(Lw * Lx, O * Rp);
        std::vector<Mat> U(static_cast<size_t>(I));
        for (long r = 0; r < Rp; ++r) {
            CMapM Gr(G.data() + Rw * Rx * r, Rw, Rx);
            for (long i = 0; i < I; ++i) U[static_cast<size_t>(i)] = Gr * slice(X, i).transpose();  // Rw x Lx
            for (long o = 0; o < O; ++o) {
                Mat V = Mat::Zero(Lw, Lx);
                for (long i = 0; i < I; ++i) {
                    CStrided Woi(W.data.data() + Lw * (o + O * i), Lw, Rw, Eigen::OuterStride<>(Lw * O * I));
                    V.noalias() += Woi * U[static_cast<size_t>(i)];
                }
                M.col(o + O * r) = MapM(V.data(), Lw * Lx, 1);
            }
        }
        return M;
    };
    TensorTrain r = zip_right(x.size(), phys, contract, peak);
    if (stats) stats->peak_bond = std::max(stats->peak_bond, peak);
    return svd_sweep(std::move(r), eps, false, stats);
}

std::vector<cplx> operator_to_dense(const TtOperator& op, size_t cap) {
    TensorTrain t;
    size_t rows = 1, cols = 1;
    for (const OpCore& c : op.cores) {
        Core k(c.left, c.out * c.in, c.right);
        k.data = c.data;
        t.cores.push_back(std::move(k));
        rows *= static_cast<size_t>(c.out);
        cols *= static_cast<size_t>(c.in);
        if (rows * cols > cap) throw ResourceLimitError("operator_to_dense: size exceeds cap");
    }
    std::vector<cplx> flat = tt_to_dense(t, cap);
    std::vector<cplx> dense(rows * cols);
    const size_t n = op.size();
    for (size_t j = 0; j < flat.size(); ++j) {
        size_t rest = j, row = 0, col = 0, rmul = 1, cmul = 1;
        for (size_t k = n; k-- > 0;) {
            const size_t O = static_cast<size_t>(op.cores[k].out);
            const size_t I = static_cast<size_t>(op.cores[k].in);
            const size_t p = rest % (O * I);
            rest /= O * I;
            row += (p % O) * rmul;
            col += (p / O) * cmul;
            rmul *= O;
            cmul *= I;
        }
        dense[row * cols + col] = flat[j];
    }
    return dense;
}

}  // namespace qttagg
