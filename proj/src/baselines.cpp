#include "gppca/baselines.hpp"

#include "gppca/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cstdio>
#include <cmath>

namespace gppca {

namespace {
Matrix top_eigenvectors(const Matrix& S, int d) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    if (eig.info() != Eigen::Success) throw NumericError("top_eigenvectors: eigensolver failed");
    const int k = int(S.rows());
    Matrix U(k, d);
    for (int j = 0; j < d; ++j) U.col(j) = eig.eigenvectors().col(k - 1 - j);
    sign_normalize_columns(U);
    return U;
}
}  // namespace

SubspaceEstimate pca_loadings(const Matrix& Y, int d) {
    const int k = int(Y.rows());
    const int n = int(Y.cols());
    if (d < 1 || d > std::min(k, n))
        throw std::invalid_argument("pca_loadings: need 1 <= d <= min(k, n)");
    return {top_eigenvectors(Y * Y.transpose(), d), EstimatorKind::pca};
}

SubspaceEstimate ppca_loadings(const Matrix& Y, int d) {
    const int k = int(Y.rows());
    const int n = int(Y.cols());
    if (d < 1 || d >= std::min(k, n))
        throw std::invalid_argument("ppca_loadings: need 1 <= d < min(k, n)");
    // U0 (D0 - sigma0^2 I) R spans the same subspace as U0; return the
    // orthonormal basis.
    SubspaceEstimate est = pca_loadings(Y, d);
    est.method = EstimatorKind::ppca;
    return est;
}

double ppca_noise_variance(const Matrix& Y, int d) {
    const int k = int(Y.rows());
    const int n = int(Y.cols());
    if (d < 1 || d >= k) throw std::invalid_argument("ppca_noise_variance: need 1 <= d < k");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(Y * Y.transpose() / double(n)));
    if (eig.info() != Eigen::Success) throw NumericError("ppca_noise_variance: eigensolver failed");
    return std::max(eig.eigenvalues().head(k - d).mean(), 0.0);
}

SubspaceEstimate ly_loadings(const Matrix& Y, int d, int q0) {
    const int k = int(Y.rows());
    const int n = int(Y.cols());
    if (d < 1 || d > k) throw std::invalid_argument("ly_loadings: need 1 <= d <= k");
    if (q0 < 1) throw std::invalid_argument("ly_loadings: q0 must be >= 1");
    if (q0 >= n) throw std::invalid_argument("ly_loadings: q0 must be < n");
    Matrix M = Matrix::Zero(k, k);
    for (int q = 1; q <= q0; ++q) {
        Matrix S = Matrix::Zero(k, k);
        for (int t = 0; t + q < n; ++t) S += Y.col(t + q) * Y.col(t).transpose();
        S /= double(n);
        M += S * S.transpose();
    }
    return {top_eigenvectors(M, d), EstimatorKind::ly};
}

double largest_principal_angle(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::invalid_argument("largest_principal_angle: shape mismatch");
    if (orthonormality_defect(A) > 1e-8 || orthonormality_defect(B) > 1e-8)
        throw std::invalid_argument("largest_principal_angle: inputs must have orthonormal columns");
    const Matrix AtB = A.transpose() * B;
    Eigen::JacobiSVD<Matrix> svd(AtB);
    const double c = std::min(std::max(svd.singularValues().minCoeff(), 0.0), 1.0);
    if (c * c < 0.5) return std::acos(c);
    // Near-zero angles: acos of a cosine close to 1 loses half the digits, so
    // switch to the principal sine of the residual projection.
    Eigen::JacobiSVD<Matrix> sine_svd(Matrix(B - A * AtB));
    const double s = std::min(std::max(sine_svd.singularValues().maxCoeff(), 0.0), 1.0);
    return std::asin(s);
}

double avg_mse(const std::vector<Matrix>& estimates, const std::vector<Matrix>& truths) {
    if (estimates.size() != truths.size() || estimates.empty())
        throw std::invalid_argument("avg_mse: need equal nonempty lists");
    double total = 0.0;
    double count = 0.0;
    for (size_t i = 0; i < estimates.size(); ++i) {
        if (estimates[i].rows() != truths[i].rows() || estimates[i].cols() != truths[i].cols())
            throw std::invalid_argument("avg_mse: shape mismatch at experiment " + std::to_string(i));
        total += (estimates[i] - truths[i]).squaredNorm();
        count += double(estimates[i].size());
    }
    return total / count;
}

std::string ScoreReport::csv_header() {
    return "scenario,method,rmse,coverage_95,avg_interval_length,avg_mse,largest_angle";
}

std::string ScoreReport::csv_row(const std::string& scenario, const std::string& method) const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g", scenario.c_str(),
                  method.c_str(), rmse, coverage_95, avg_interval_length, avg_mse, largest_angle);
    return buf;
}

ScoreReport prediction_scores(const Matrix& mean, const Matrix& sd, const Matrix& truth) {
    if (mean.rows() != truth.rows() || mean.cols() != truth.cols() || sd.rows() != truth.rows() ||
        sd.cols() != truth.cols())
        throw std::invalid_argument("prediction_scores: shape mismatch");
    ScoreReport r;
    r.rmse = std::sqrt((mean - truth).squaredNorm() / double(truth.size()));
    const Matrix half = 1.96 * sd;
    r.coverage_95 = double(((truth - mean).cwiseAbs().array() <= half.array()).count()) /
                    double(truth.size());
    r.avg_interval_length = 2.0 * half.mean();
    return r;
}

}  // namespace gppca
