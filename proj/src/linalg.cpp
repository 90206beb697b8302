#include "linalg.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qttagg/errors.hpp"

namespace qttagg::linalg {

namespace {

// zgesvd rather than zgesdd: the divide-and-conquer driver returned factors
// with relative errors near 1e-5 on ill-conditioned unfoldings (graded
// singular values down to the rounding level).
bool run_gesvd(Mat& a, Svd& out) {
    const lapack_int m = static_cast<lapack_int>(a.rows());
    const lapack_int n = static_cast<lapack_int>(a.cols());
    const lapack_int k = std::min(m, n);
    out.U.resize(m, k);
    out.S.resize(k);
    out.Vh.resize(k, n);
    std::vector<double> superb(std::max<lapack_int>(k, 1));
    const lapack_int info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, a.data(), m, out.S.data(), out.U.data(),
                                           m, out.Vh.data(), k, superb.data());
    return info == 0;
}

}  // namespace

Svd svd(const Mat& a) {
    Svd out;
    if (a.rows() == 0 || a.cols() == 0) {
        throw InvalidArgument("svd of an empty matrix");
    }
    if (!a.allFinite()) {
        throw NumericFailure("svd input contains NaN or Inf");
    }
    Mat work = a;
    if (run_gesvd(work, out)) return out;
    throw NumericFailure("SVD failed to converge");
}

void thin_qr(const Mat& a, Mat& q, Mat& r) {
    const Eigen::Index m = a.rows(), n = a.cols(), k = std::min(m, n);
    Eigen::HouseholderQR<Mat> qr(a);
    q = qr.householderQ() * Mat::Identity(m, k);
    r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
}

Eigen::Index truncation_rank(const Vec& s, double budget2) {
    Eigen::Index r = s.size();
    double tail = 0.0;
    while (r > 1) {
        const double next = tail + s[r - 1] * s[r - 1];
        if (next > budget2) break;
        tail = next;
        --r;
    }
    return r;
}

}  // namespace qttagg::linalg
