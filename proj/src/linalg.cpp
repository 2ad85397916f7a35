#include "gppca/linalg.hpp"

#include <Eigen/QR>
#include <cmath>

namespace gppca {

namespace {
template <typename Fact>
Fact factor_jittered(const Matrix& A, double* jitter_used, const char* what) {
    const int n = int(A.rows());
    const double base = 1e-10 * A.trace() / double(n);
    double jitter = 0.0;
    for (int attempt = 0; attempt <= 11; ++attempt) {
        Fact f;
        if (jitter == 0.0) {
            f.compute(A);
        } else {
            f.compute(Matrix(A + jitter * Matrix::Identity(n, n)));
        }
        if (f.info() == Eigen::Success) {
            if (jitter_used) *jitter_used = jitter;
            return f;
        }
        jitter = (jitter == 0.0) ? std::max(base, 1e-300) : 2.0 * jitter;
        if (attempt == 11)
            throw NumericError(std::string(what) +
                               ": factorization failed after 10 jitter doublings (final jitter " +
                               std::to_string(jitter) + ")");
    }
    throw NumericError(what);  // unreachable
}
}  // namespace

Eigen::LLT<Matrix> llt_jittered(const Matrix& A, double* jitter_used) {
    return factor_jittered<Eigen::LLT<Matrix>>(A, jitter_used, "llt_jittered");
}

Eigen::LDLT<Matrix> ldlt_jittered(const Matrix& A, double* jitter_used) {
    // LDLT reports Success even for semidefinite input; treat non-finite or
    // negative pivots beyond roundoff as failure so jitter kicks in.
    const int n = int(A.rows());
    const double base = 1e-10 * A.trace() / double(n);
    double jitter = 0.0;
    for (int attempt = 0; attempt <= 11; ++attempt) {
        Eigen::LDLT<Matrix> f;
        f.compute(jitter == 0.0 ? A : Matrix(A + jitter * Matrix::Identity(n, n)));
        const double dmin = f.vectorD().minCoeff();
        const double dmax = f.vectorD().maxCoeff();
        if (f.info() == Eigen::Success && std::isfinite(dmin) && dmin > -1e-12 * std::max(1.0, dmax)) {
            if (jitter_used) *jitter_used = jitter;
            return f;
        }
        jitter = (jitter == 0.0) ? std::max(base, 1e-300) : 2.0 * jitter;
    }
    throw NumericError("ldlt_jittered: factorization failed after 10 jitter doublings");
}

double log_det(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void sign_normalize_columns(Matrix& A) {
    for (int j = 0; j < A.cols(); ++j) {
        int imax = 0;
        A.col(j).cwiseAbs().maxCoeff(&imax);
        if (A(imax, j) < 0.0) A.col(j) = -A.col(j);
    }
}

Matrix orthonormalize(const Matrix& A) {
    Eigen::HouseholderQR<Matrix> qr(A);
    return qr.householderQ() * Matrix::Identity(A.rows(), A.cols());
}

double orthonormality_defect(const Matrix& A) {
    const int d = int(A.cols());
    return (A.transpose() * A - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

Matrix orthonormal_complement(const Matrix& H) {
    const int n = int(H.rows());
    const int q = int(H.cols());
    Eigen::HouseholderQR<Matrix> qr(H);
    Matrix Qfull = qr.householderQ() * Matrix::Identity(n, n);
    return Qfull.rightCols(n - q);
}

}  // namespace gppca
