#pragma once

#include <Eigen/Dense>
#include <complex>

namespace qttagg::linalg {

using cplx = std::complex<double>;
using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::VectorXd;

struct Svd {
    Mat U;   // m x k
    Vec S;   // k, descending
    Mat Vh;  // k x n
};

// Thin SVD through LAPACK's divide-and-conquer driver, falling back to the
// QR-iteration driver if it fails to converge.
Svd svd(const Mat& a);

// Thin QR of a (m x n): a = Q R with Q m x k orthonormal columns, k = min(m,n).
void thin_qr(const Mat& a, Mat& q, Mat& r);

// Smallest rank r >= 1 such that the discarded tail sum_{i>=r} s_i^2 <= budget2.
Eigen::Index truncation_rank(const Vec& s, double budget2);

}  // namespace qttagg::linalg
