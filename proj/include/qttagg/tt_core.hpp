#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qttagg/errors.hpp"

namespace qttagg {

using cplx = std::complex<double>;

// Three-index core (left, phys, right). Storage is column-major with the left
// bond fastest: element (l, s, r) lives at l + left * (s + phys * r).
struct Core {
    long left = 1;
    long phys = 2;
    long right = 1;
    std::vector<cplx> data;

    Core() = default;
    Core(long l, long p, long r) : left(l), phys(p), right(r), data(static_cast<size_t>(l * p * r)) {}

    cplx& operator()(long l, long s, long r) { return data[static_cast<size_t>(l + left * (s + phys * r))]; }
    const cplx& operator()(long l, long s, long r) const {
        return data[static_cast<size_t>(l + left * (s + phys * r))];
    }
};

struct TensorTrain {
    std::vector<Core> cores;

    TensorTrain() = default;
    explicit TensorTrain(std::vector<Core> c) : cores(std::move(c)) {}

    size_t size() const { return cores.size(); }
    std::vector<long> physical_dims() const;
    // Internal bond dimensions chi_1..chi_{n-1}.
    std::vector<long> bond_dims() const;
    long max_bond() const;
    // Total number of stored complex entries times 16.
    size_t bytes() const;
    // Throws InvalidArgument if boundary or adjacency invariants fail.
    void validate() const;
};

// Operator core (left, out, in, right); element at l + L*(o + O*(i + I*r)).
struct OpCore {
    long left = 1;
    long out = 2;
    long in = 2;
    long right = 1;
    std::vector<cplx> data;

    OpCore() = default;
    OpCore(long l, long o, long i, long r)
        : left(l), out(o), in(i), right(r), data(static_cast<size_t>(l * o * i * r)) {}

    cplx& operator()(long l, long o, long i, long r) {
        return data[static_cast<size_t>(l + left * (o + out * (i + in * r)))];
    }
    const cplx& operator()(long l, long o, long i, long r) const {
        return data[static_cast<size_t>(l + left * (o + out * (i + in * r)))];
    }
};

struct TtOperator {
    std::vector<OpCore> cores;
    size_t size() const { return cores.size(); }
    std::vector<long> bond_dims() const;
    long max_bond() const;
};

// Process-wide hard cap on truncated bond dimensions. Initialised from the
// QTTAGG_BOND_CAP environment variable (default 4096).
long bond_cap();
void set_bond_cap(long cap);

constexpr size_t kDenseCap = size_t{1} << 24;

// Diagnostics filled by the truncating kernels.
struct TruncStats {
    long peak_bond = 0;   // largest bond before SVD truncation
    long final_bond = 0;  // largest bond after truncation
};

cplx tt_element(const TensorTrain& tt, std::span<const int> digits);

TensorTrain tt_from_dense(std::span<const cplx> values, const std::vector<long>& phys, double eps);
TensorTrain tt_from_dense(std::span<const cplx> values, int n, double eps);
std::vector<cplx> tt_to_dense(const TensorTrain& tt, size_t cap = kDenseCap);

// TT rounding: right-to-left orthogonalisation followed by a left-to-right
// SVD sweep. Output is left-canonical. With absolute=true the budget is eps
// in absolute L2 terms instead of eps * ||tt||.
TensorTrain tt_truncate(const TensorTrain& tt, double eps, bool absolute = false,
                        TruncStats* stats = nullptr);

TensorTrain tt_hadamard(const TensorTrain& a, const TensorTrain& b);
// Same as tt_truncate(tt_hadamard(a, b), eps) without materialising the
// Kronecker-product cores.
TensorTrain tt_hadamard_truncate(const TensorTrain& a, const TensorTrain& b, double eps,
                                 TruncStats* stats = nullptr, bool absolute = false);

TensorTrain tt_add(const TensorTrain& a, const TensorTrain& b);
TensorTrain tt_scale(const TensorTrain& a, cplx c);
TensorTrain tt_conj(const TensorTrain& a);

cplx tt_inner(const TensorTrain& a, const TensorTrain& b);
// Computed by orthogonalisation, so it stays accurate when ||a|| is tiny
// compared to the magnitude of individual cores.
double tt_norm(const TensorTrain& a);
// sum_j a_j (no conjugation)
cplx tt_sum(const TensorTrain& a);

TtOperator identity_operator(int n);
// Raw contraction, bond dims multiply.
TensorTrain apply_operator_raw(const TtOperator& op, const TensorTrain& x);
TensorTrain apply_operator(const TtOperator& op, const TensorTrain& x, double eps,
                           TruncStats* stats = nullptr);
// Dense matrix (row = output index, column = input index), big-endian digits.
std::vector<cplx> operator_to_dense(const TtOperator& op, size_t cap = 1 << 20);

// Serialisation: binary container and JSON debug form.
void write_binary(std::ostream& os, const TensorTrain& tt);
TensorTrain read_binary(std::istream& is);
std::string to_json(const TensorTrain& tt);
TensorTrain from_json(const std::string& text);

}  // namespace qttagg
