#pragma once

#include "gppca/types.hpp"

#include <string>
#include <vector>

namespace gppca {

enum class EstimatorKind { pca, ppca, gppca, ly };

struct SubspaceEstimate {
    Matrix loadings;  // k x d, orthonormal columns
    EstimatorKind method = EstimatorKind::pca;
};

/// Top-d eigenvectors of Y Y', sign-normalized.
SubspaceEstimate pca_loadings(const Matrix& Y, int d);

/// Probabilistic PCA loadings; the spanned subspace coincides with PCA's.
SubspaceEstimate ppca_loadings(const Matrix& Y, int d);

/// PPCA noise estimate: mean of the k-d trailing eigenvalues of Y Y'/n.
double ppca_noise_variance(const Matrix& Y, int d);

/// Lag-covariance estimator: top-d eigenvectors of
/// sum_{q=1..q0} S_y(q) S_y(q)' with S_y(q) the lag-q sample covariance of
/// the columns of Y. q0 = 1 and q0 = 5 are the usual variants.
SubspaceEstimate ly_loadings(const Matrix& Y, int d, int q0);

/// arccos of the smallest singular value of A'B, in [0, pi/2]. Both inputs
/// must have orthonormal columns of equal shape.
double largest_principal_angle(const Matrix& A, const Matrix& B);

/// Mean squared error pooled over a list of experiments (equal shapes).
double avg_mse(const std::vector<Matrix>& estimates, const std::vector<Matrix>& truths);

struct ScoreReport {
    double rmse = 0.0;
    double coverage_95 = 0.0;
    double avg_interval_length = 0.0;
    double avg_mse = 0.0;        // filled by harness callers
    double largest_angle = 0.0;  // filled by harness callers

    static std::string csv_header();
    /// One CSV row per (scenario, method), matching csv_header().
    std::string csv_row(const std::string& scenario, const std::string& method) const;
};

/// Out-of-sample scores for central 95 percent intervals mean +/- 1.96 sd.
ScoreReport prediction_scores(const Matrix& mean, const Matrix& sd, const Matrix& truth);

}  // namespace gppca
