#include <Eigen/Dense>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "qttagg/qtt_grid.hpp"
#include "qttagg/tt_core.hpp"

using namespace qttagg;
using namespace testutil;

namespace {

std::vector<cplx> dense_product(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<cplx> r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
    return r;
}

}  // namespace

TEST_CASE("element of a rank-1 train is the product of per-digit factors") {
    std::vector<Core> cores;
    const double g[3][2] = {{2.0, 3.0}, {5.0, 7.0}, {11.0, 13.0}};
    for (int k = 0; k < 3; ++k) {
        Core c(1, 2, 1);
        c(0, 0, 0) = g[k][0];
        c(0, 1, 0) = g[k][1];
        cores.push_back(c);
    }
    TensorTrain tt(cores);
    const int d[3] = {1, 0, 1};
    CHECK(tt_element(tt, d) == cplx(3.0 * 5.0 * 13.0));
}

TEST_CASE("element uses big-endian digits") {
    std::vector<cplx> v(8);
    for (int i = 0; i < 8; ++i) v[static_cast<size_t>(i)] = static_cast<double>(i);
    TensorTrain tt = tt_from_dense(v, 3, 0.0);
    const int d[3] = {1, 0, 1};
    CHECK(std::abs(tt_element(tt, d) - cplx(5.0)) < 1e-12);
    const int bad[3] = {1, 2, 0};
    CHECK_THROWS_AS(tt_element(tt, bad), InvalidArgument);
}

TEST_CASE("element agrees with dense contraction on every digit string") {
    std::mt19937_64 g(11);
    TensorTrain tt = random_tt(g, 6, 3);
    auto dense = tt_to_dense(tt);
    for (long j = 0; j < 64; ++j) {
        auto d = index_to_digits(j, 6);
        CHECK(std::abs(tt_element(tt, d) - dense[static_cast<size_t>(j)]) < 1e-12 * (1 + std::abs(dense[static_cast<size_t>(j)])));
    }
}

TEST_CASE("from_dense on a geometric sequence has unit bonds") {
    std::vector<cplx> v(8);
    for (int j = 0; j < 8; ++j) v[static_cast<size_t>(j)] = std::pow(cplx(0.7, 0.2), j);
    TensorTrain tt = tt_from_dense(v, 3, 1e-12);
    for (long b : tt.bond_dims()) CHECK(b == 1);
}

TEST_CASE("from_dense on a one-hot vector is a product state") {
    std::vector<cplx> v(8, 0.0);
    v[3] = 1.0;
    TensorTrain tt = tt_from_dense(v, 3, 0.0);
    for (long b : tt.bond_dims()) CHECK(b == 1);
    CHECK(maxdiff(tt_to_dense(tt), v) < 1e-14);
}

TEST_CASE("from_dense round trip and tolerance contract") {
    std::mt19937_64 g(5);
    auto v = random_vec(g, 64);
    CHECK(l2diff(tt_to_dense(tt_from_dense(v, 6, 0.0)), v) < 1e-12 * l2(v));
    for (double eps : {1e-1, 1e-3}) {
        TensorTrain tt = tt_from_dense(v, 6, eps);
        CHECK(l2diff(tt_to_dense(tt), v) <= eps * l2(v) * (1 + 1e-10));
    }
    CHECK_THROWS_AS(tt_from_dense(std::span<const cplx>(v.data(), 63), 6, 0.0), InvalidArgument);
}

TEST_CASE("to_dense of a constant and the size cap") {
    TensorTrain c = qtt_constant(3, cplx(2.5, -1.0));
    for (auto z : tt_to_dense(c)) CHECK(std::abs(z - cplx(2.5, -1.0)) < 1e-15);
    CHECK_THROWS_AS(tt_to_dense(qtt_constant(25, 1.0)), ResourceLimitError);
    CHECK_THROWS_AS(tt_to_dense(qtt_constant(5, 1.0), 16), ResourceLimitError);
}

TEST_CASE("truncate collapses an inflated exponential") {
    GridSpec grid{0.0, 1.0, 8};
    TensorTrain e = qtt_exponential(grid, 1.0, cplx(-0.3, 2.0));
    // (a+a+a+a)/4 has bond 4 and the same entries
    TensorTrain inflated = tt_scale(tt_add(tt_add(e, e), tt_add(e, e)), 0.25);
    CHECK(inflated.max_bond() == 4);
    TensorTrain t = tt_truncate(inflated, 1e-10);
    CHECK(t.max_bond() == 1);
    CHECK(l2diff(tt_to_dense(t), tt_to_dense(e)) < 1e-12 * l2(tt_to_dense(e)));
}

TEST_CASE("truncate of two distinct exponentials keeps bond 2") {
    GridSpec grid{0.0, 1.0, 6};
    const cplx cs[2] = {1.0, 0.5};
    const cplx ls[2] = {cplx(0, 3.0), cplx(-1.0, 0)};
    TensorTrain s = qtt_sum_of_exponentials(grid, cs, ls);
    TensorTrain t = tt_truncate(tt_add(s, tt_scale(s, 0.0)), 1e-12);
    CHECK(t.max_bond() == 2);
    // dense TT-SVD oracle gives the same ranks
    CHECK(tt_from_dense(tt_to_dense(s), 6, 1e-12).bond_dims() == t.bond_dims());
}

TEST_CASE("truncation contract and norm preservation on random trains") {
    std::mt19937_64 g(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(g() % 8);
        const long bond = 1 + static_cast<long>(g() % 6);
        TensorTrain t = random_tt(g, n, bond);
        auto dense = tt_to_dense(t);
        const double nrm = l2(dense);
        TensorTrain z = tt_truncate(t, 0.0);
        CHECK(std::abs(tt_norm(z) - nrm) <= 1e-12 * nrm);
        CHECK(l2diff(tt_to_dense(z), dense) <= 1e-12 * nrm);
        const double eps = std::pow(10.0, -static_cast<double>(1 + g() % 6));
        TensorTrain tr = tt_truncate(t, eps);
        CHECK(l2diff(tt_to_dense(tr), dense) <= eps * nrm * (1 + 1e-9));
        auto b0 = t.bond_dims();
        auto b1 = tr.bond_dims();
        for (size_t i = 0; i < b0.size(); ++i) CHECK(b1[i] <= b0[i]);
    }
}

TEST_CASE("truncate output is left-canonical") {
    std::mt19937_64 g(3);
    TensorTrain t = tt_truncate(random_tt(g, 6, 4), 1e-8);
    for (size_t k = 0; k + 1 < t.size(); ++k) {
        const Core& c = t.cores[k];
        for (long a = 0; a < c.right; ++a)
            for (long b = 0; b < c.right; ++b) {
                cplx acc = 0;
                for (long l = 0; l < c.left; ++l)
                    for (long s = 0; s < c.phys; ++s) acc += std::conj(c(l, s, a)) * c(l, s, b);
                CHECK(std::abs(acc - cplx(a == b ? 1.0 : 0.0)) < 1e-12);
            }
    }
}

TEST_CASE("hadamard identities, raw bonds and dense agreement") {
    std::mt19937_64 g(9);
    TensorTrain f = random_tt(g, 6, 3);
    TensorTrain one = qtt_constant(6, 1.0);
    CHECK(maxdiff(tt_to_dense(tt_hadamard(one, f)), tt_to_dense(f)) < 1e-12);
    TensorTrain a = random_tt(g, 6, 2), b = random_tt(g, 6, 3);
    TensorTrain h = tt_hadamard(a, b);
    for (long bd : h.bond_dims()) CHECK(bd == 6);
    auto ref = dense_product(tt_to_dense(a), tt_to_dense(b));
    CHECK(l2diff(tt_to_dense(h), ref) < 1e-12 * l2(ref));
    TensorTrain ht = tt_hadamard_truncate(a, b, 0.0);
    CHECK(l2diff(tt_to_dense(ht), ref) < 1e-12 * l2(ref));
    TensorTrain ht2 = tt_hadamard_truncate(a, b, 1e-3);
    CHECK(l2diff(tt_to_dense(ht2), ref) <= 1e-3 * l2(ref) * (1 + 1e-9));
    CHECK_THROWS_AS(tt_hadamard(a, random_tt(g, 5, 2)), InvalidArgument);
}

TEST_CASE("hadamard of exponentials is an exponential after truncation") {
    GridSpec grid{-2.0, 3.0, 9};
    TensorTrain p = tt_hadamard_truncate(qtt_exponential(grid, 2.0, cplx(0.1, 1.0)),
                                         qtt_exponential(grid, cplx(0, 1), cplx(-0.4, 2.0)), 1e-12);
    TensorTrain q = qtt_exponential(grid, cplx(0, 2.0), cplx(-0.3, 3.0));
    CHECK(p.max_bond() == 1);
    auto dq = tt_to_dense(q);
    CHECK(l2diff(tt_to_dense(p), dq) < 1e-11 * l2(dq));
}

TEST_CASE("add and scale") {
    std::mt19937_64 g(17);
    TensorTrain f = random_tt(g, 7, 3);
    TensorTrain z = tt_add(f, tt_scale(f, -1.0));
    CHECK(l2(tt_to_dense(z)) <= 1e-12 * l2(tt_to_dense(f)));
    TensorTrain a = random_tt(g, 6, 2), b = random_tt(g, 6, 3);
    TensorTrain s = tt_add(a, b);
    for (long bd : s.bond_dims()) CHECK(bd == 5);
    auto da = tt_to_dense(a), db = tt_to_dense(b), ds = tt_to_dense(s);
    for (size_t i = 0; i < da.size(); ++i) CHECK(std::abs(ds[i] - da[i] - db[i]) < 1e-12 * (1 + std::abs(da[i]) + std::abs(db[i])));
    auto sc = tt_to_dense(tt_scale(a, cplx(0.5, -2)));
    for (size_t i = 0; i < da.size(); ++i) CHECK(std::abs(sc[i] - cplx(0.5, -2) * da[i]) < 1e-12 * (1 + std::abs(da[i])));
    CHECK_THROWS_AS(tt_add(a, random_tt(g, 5, 1)), InvalidArgument);
}

TEST_CASE("inner product and norm") {
    for (long i = 0; i < 8; ++i)
        for (long j = 0; j < 8; ++j) {
            std::vector<cplx> ei(8, 0.0), ej(8, 0.0);
            ei[static_cast<size_t>(i)] = 1.0;
            ej[static_cast<size_t>(j)] = 1.0;
            CHECK(std::abs(tt_inner(tt_from_dense(ei, 3, 0), tt_from_dense(ej, 3, 0)) - cplx(i == j ? 1.0 : 0.0)) < 1e-14);
        }
    std::mt19937_64 g(23);
    TensorTrain a = random_tt(g, 6, 3), b = random_tt(g, 6, 2);
    auto da = tt_to_dense(a), db = tt_to_dense(b);
    cplx ref = 0;
    for (size_t i = 0; i < da.size(); ++i) ref += std::conj(da[i]) * db[i];
    CHECK(std::abs(tt_inner(a, b) - ref) < 1e-12 * std::abs(ref));
    cplx aa = tt_inner(a, a);
    CHECK(aa.real() >= 0);
    CHECK(std::abs(aa.imag()) <= 1e-14 * aa.real());
    CHECK(std::abs(tt_norm(a) - l2(da)) < 1e-12 * l2(da));
    // conjugate-linear in the first argument
    CHECK(std::abs(tt_inner(tt_scale(a, cplx(0, 2)), b) - cplx(0, -2) * ref) < 1e-11 * std::abs(ref));
}

TEST_CASE("operators: identity, dense agreement, raw bonds") {
    std::mt19937_64 g(31);
    TensorTrain f = random_tt(g, 5, 3);
    CHECK(maxdiff(tt_to_dense(apply_operator(identity_operator(5), f, 0.0)), tt_to_dense(f)) < 1e-12);

    TtOperator op;
    const int n = 4;
    for (int k = 0; k < n; ++k) {
        OpCore c(k == 0 ? 1 : 2, 2, 2, k == n - 1 ? 1 : 2);
        for (auto& z : c.data) z = rand_c(g);
        op.cores.push_back(c);
    }
    TensorTrain x = random_tt(g, n, 3);
    auto A = operator_to_dense(op);
    auto dx = tt_to_dense(x);
    std::vector<cplx> ref(16, 0.0);
    for (size_t r = 0; r < 16; ++r)
        for (size_t c = 0; c < 16; ++c) ref[r] += A[r * 16 + c] * dx[c];
    // operator_to_dense itself is checked against element-wise evaluation
    for (size_t r = 0; r < 16; ++r)
        for (size_t c = 0; c < 16; ++c) {
            auto dr = index_to_digits(static_cast<long>(r), n), dc = index_to_digits(static_cast<long>(c), n);
            Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
            for (int k = 0; k < n; ++k) {
                const OpCore& oc = op.cores[static_cast<size_t>(k)];
                Eigen::MatrixXcd m(oc.left, oc.right);
                for (long l = 0; l < oc.left; ++l)
                    for (long rr = 0; rr < oc.right; ++rr) m(l, rr) = oc(l, dr[static_cast<size_t>(k)], dc[static_cast<size_t>(k)], rr);
                v = v * m;
            }
            CHECK(std::abs(v(0) - A[r * 16 + c]) < 1e-12 * (1 + std::abs(v(0))));
        }
    CHECK(l2diff(tt_to_dense(apply_operator(op, x, 0.0)), ref) < 1e-10 * l2(ref));
    TensorTrain raw = apply_operator_raw(op, x);
    for (long b : raw.bond_dims()) CHECK(b == 6);
    CHECK(l2diff(tt_to_dense(raw), ref) < 1e-10 * l2(ref));
}

TEST_CASE("bond cap raises resource-limit") {
    std::mt19937_64 g(41);
    TensorTrain t = random_tt(g, 8, 8);
    const long old = bond_cap();
    set_bond_cap(3);
    CHECK_THROWS_AS(tt_truncate(t, 1e-12), ResourceLimitError);
    set_bond_cap(old);
    CHECK_NOTHROW(tt_truncate(t, 1e-12));
}

TEST_CASE("binary and JSON serialisation round trip") {
    std::mt19937_64 g(43);
    TensorTrain t = random_tt(g, 5, 3);
    std::stringstream ss;
    write_binary(ss, t);
    const std::string bytes = ss.str();
    CHECK(bytes.substr(0, 4) == "QTT1");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(static_cast<unsigned char>(bytes[6]) == 5);
    // first core header: left=1 (u32), phys=2 (u16), right=3 (u32)
    CHECK(static_cast<unsigned char>(bytes[8]) == 1);
    CHECK(static_cast<unsigned char>(bytes[12]) == 2);
    CHECK(static_cast<unsigned char>(bytes[14]) == 3);
    TensorTrain back = read_binary(ss);
    CHECK(back.bond_dims() == t.bond_dims());
    CHECK(maxdiff(tt_to_dense(back), tt_to_dense(t)) == 0.0);
    TensorTrain fromj = from_json(to_json(t));
    CHECK(maxdiff(tt_to_dense(fromj), tt_to_dense(t)) == 0.0);
    std::stringstream bad("QTT2xxxx");
    CHECK_THROWS_AS(read_binary(bad), InvalidArgument);
}
