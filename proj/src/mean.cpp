#include "gppca/mean.hpp"

#include "gppca/core.hpp"
#include "gppca/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <sstream>

namespace gppca {

RowVector MeanBasis::eval(const Vector& x) const {
    if (x.size() != input_dim)
        throw std::invalid_argument("MeanBasis: input dimension mismatch");
    RowVector h(q());
    int j = 0;
    if (config.intercept) h[j++] = 1.0;
    if (config.linear_input)
        for (int m = 0; m < input_dim; ++m) h[j++] = x[m];
    for (int c : config.covariate_columns) {
        if (c < 0 || c >= input_dim)
            throw std::invalid_argument("MeanBasis: covariate column index out of range");
        h[j++] = x[c];
    }
    return h;
}

MeanDesign build_mean_design(const MeanBasis& basis, const InputGrid& grid) {
    grid.validate();
    if (basis.input_dim != grid.dim())
        throw std::invalid_argument("build_mean_design: basis input dimension does not match grid");
    const int n = grid.size();
    const int q = basis.q();
    if (q < 1) throw std::invalid_argument("build_mean_design: empty basis (q = 0)");
    if (n <= q) throw std::invalid_argument("build_mean_design: need n > q");

    Matrix H(n, q);
    for (int i = 0; i < n; ++i) H.row(i) = basis.eval(grid.points.row(i).transpose());

    Eigen::ColPivHouseholderQR<Matrix> qr(H);
    qr.setThreshold(1e-10);
    if (qr.rank() < q) {
        // The non-pivot columns are the linearly dependent ones.
        const auto& perm = qr.colsPermutation().indices();
        std::ostringstream oss;
        oss << "build_mean_design: rank-deficient basis; dependent column(s):";
        for (int j = qr.rank(); j < q; ++j) oss << ' ' << perm[j];
        throw std::invalid_argument(oss.str());
    }

    // M = I - Q1 Q1' with Q1 the thin orthonormal basis of col(H).
    Eigen::HouseholderQR<Matrix> thin(H);
    Matrix Q1 = thin.householderQ() * Matrix::Identity(n, q);
    Matrix M = Matrix::Identity(n, n) - Q1 * Q1.transpose();
    M = 0.5 * (M + M.transpose());
    return MeanDesign{std::move(H), std::move(M), basis};
}

Matrix mean_factor_transform(const Matrix& Y, const Matrix& K, double tau, const MeanDesign& design) {
    const FactorTransform t = factor_transform(Y, K, tau, &design);
    return t.G;
}

double noise_variance_mean(const Matrix& Y, const Matrix& A, const std::vector<Matrix>& K_list,
                           const Vector& taus, const MeanDesign& design) {
    const int k = int(Y.rows());
    const int n = int(Y.cols());
    const int d = int(A.cols());
    if (int(K_list.size()) != d || taus.size() != d)
        throw std::invalid_argument("noise_variance_mean: need one (K, tau) per loading column");
    if (orthonormality_defect(A) > 1e-8)
        throw std::invalid_argument("noise_variance_mean: loadings must have orthonormal columns");
    const Matrix YM = Y * design.M;
    double s2 = (YM * Y.transpose()).trace();
    for (int l = 0; l < d; ++l) {
        const Matrix G = mean_factor_transform(Y, K_list[l], taus[l], design);
        s2 -= A.col(l).dot(G * A.col(l));
    }
    return std::max(s2, 0.0) / double(k * (n - design.q()));
}

Matrix estimate_loadings_mean_shared(const Matrix& Y, const Matrix& K, double tau,
                                     const MeanDesign& design, int d, double* objective) {
    const int k = int(Y.rows());
    if (d > k || d < 1) throw std::invalid_argument("estimate_loadings_mean_shared: need 1 <= d <= k");
    const Matrix G = mean_factor_transform(Y, K, tau, design);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
    if (eig.info() != Eigen::Success)
        throw NumericError("estimate_loadings_mean_shared: eigensolver failed");
    Matrix U(k, d);
    for (int j = 0; j < d; ++j) U.col(j) = eig.eigenvectors().col(k - 1 - j);
    sign_normalize_columns(U);
    if (objective) *objective = eig.eigenvalues().tail(d).sum();
    return U;
}

Matrix estimate_loadings_mean(const Matrix& Y, const std::vector<Matrix>& K_list, const Vector& taus,
                              const MeanDesign& design, const Matrix& init, const StiefelOptions& opts) {
    const int d = int(init.cols());
    if (int(K_list.size()) != d || taus.size() != d)
        throw std::invalid_argument("estimate_loadings_mean: need one (K, tau) per loading column");
    std::vector<Matrix> G_list;
    G_list.reserve(d);
    for (int l = 0; l < d; ++l) G_list.push_back(mean_factor_transform(Y, K_list[l], taus[l], design));
    StiefelProblem problem{
        [&](const Matrix& A) { return stiefel_objective(A, G_list); },
        [&](const Matrix& A) { return stiefel_gradient(A, G_list); },
    };
    auto [A, rep] = optimize_on_stiefel(problem, init, opts);
    sign_normalize_columns(A);
    return A;
}

Matrix regression_posterior_mean(const FittedModel& model) {
    if (!model.mean)
        throw std::invalid_argument("regression_posterior_mean: model has no mean structure");
    return model.mean->B_hat;
}

double profile_log_likelihood_mean(const OutputMatrix& Y, const Vector& taus,
                                   const std::vector<Vector>& gammas, const MeanDesign& design,
                                   const LikelihoodConfig& config) {
    LikelihoodConfig cfg = config;
    cfg.design = &design;
    return profile_log_likelihood(Y, taus, gammas, cfg);
}

}  // namespace gppca
