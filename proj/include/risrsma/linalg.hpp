#pragma once

// Small dense Hermitian helpers shared by the rate and surrogate code.

#include "risrsma/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace risrsma::linalg {

inline CMat hermitian_part(const CMat& a) { return 0.5 * (a + a.adjoint()); }

/// Inverse of a Hermitian positive definite matrix. Adds diagonal jitter
/// 1e-12 * jitter_scale when the condition number exceeds 1e12.
inline CMat hpd_inverse(const CMat& a, double jitter_scale) {
    const CMat h = hermitian_part(a);
    const auto n = h.rows();
    Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    CMat work = h;
    if (!(lmin > 0.0) || lmax / lmin > 1e12) {
        work += (1e-12 * jitter_scale) * CMat::Identity(n, n);
    }
    Eigen::LLT<CMat> llt(work);
    if (llt.info() != Eigen::Success) throw NumericError("hpd_inverse: matrix not positive definite");
    return hermitian_part(llt.solve(CMat::Identity(n, n)));
}

/// ln det of a Hermitian positive definite matrix.
inline double hpd_logdet(const CMat& a) {
    Eigen::LLT<CMat> llt(hermitian_part(a));
    if (llt.info() != Eigen::Success) throw NumericError("hpd_logdet: matrix not positive definite");
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::log(llt.matrixL()(i, i).real());
    return 2.0 * s;
}

/// ln |I + C| for C = W^{-1} S with W HPD and S Hermitian PSD, computed as
/// ln|W + S| - ln|W|.
inline double logdet_ratio(const CMat& w, const CMat& s) { return hpd_logdet(w + s) - hpd_logdet(w); }

/// Factor L with B = L L^H for a Hermitian PSD B. Negative eigenvalues from
/// rounding are clipped to zero.
inline CMat psd_factor(const CMat& b) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(b));
    RVec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

inline double min_eigenvalue(const CMat& a) {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Re Tr(A B^H) = sum of Re(a_ij conj(b_ij)).
inline double re_inner(const CMat& a, const CMat& b) { return (a.array() * b.array().conjugate()).real().sum(); }

} // namespace risrsma::linalg
