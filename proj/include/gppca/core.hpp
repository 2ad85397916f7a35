#pragma once

#include "gppca/kernels.hpp"
#include "gppca/mean.hpp"
#include "gppca/stiefel.hpp"
#include "gppca/types.hpp"

#include <Eigen/Cholesky>
#include <cstdint>
#include <optional>
#include <vector>

namespace gppca {

/// Estimated covariance parameters. tau_l = sigma_l^2 / sigma0^2 is the
/// per-factor signal-to-noise ratio; sigma_l^2 is recovered as tau_l*sigma0^2.
struct HyperParams {
    double sigma0_sq = 0.0;
    Vector taus;
    std::vector<KernelSpec> kernel_specs;  // one per factor
    bool shared_covariance = true;
    std::optional<double> fixed_noise;

    Vector sigma_sq() const { return taus * sigma0_sq; }
    void validate() const;
};

struct FitOptions {
    int max_iters = 100;      // quasi-Newton iterations over (log tau, log gamma)
    double rel_tol = 1e-8;    // relative objective tolerance
    double fd_step = 1e-4;    // central-difference step for numerical gradients
    int stiefel_starts = 5;   // multi-start count for the loading solve (PCA + random)
    StiefelOptions stiefel;
    std::uint64_t seed = 0;   // seeds the random multi-starts
};

struct FitConfig {
    int d = 1;
    KernelFamily family = KernelFamily::matern_5_2;
    bool shared_covariance = true;
    std::optional<double> fixed_noise;
    MeanConfig mean;
    FitOptions optim;
};

struct FitReport {
    bool converged = false;
    int iterations = 0;
    int likelihood_evals = 0;
    double objective = 0.0;  // maximized marginal log likelihood (up to constants)
};

/// Per-factor cached state used by prediction; immutable after fit.
struct FactorCache {
    Matrix corr;                 // K_l at the fitted ranges, n x n
    Eigen::LLT<Matrix> chol_C;   // C_l = tau_l K_l + I_n
    Vector weights;              // no mean: C^{-1} Y' a_l ; mean: (M tau K + I)^{-1} M Y' a_l
    Matrix CinvH;                // C^{-1} H (mean structure only)
    Eigen::LLT<Matrix> chol_HtCinvH;  // H' C^{-1} H (mean structure only)
};

struct MeanModel {
    MeanDesign design;
    Matrix B_hat;   // q x k posterior mean of the regression coefficients
    Matrix Z_hat;   // d x n posterior mean of the factors (Z_M)
};

struct FittedModel {
    Matrix loadings;  // k x d, orthonormal columns
    HyperParams hyper;
    InputGrid grid;
    Matrix data;  // Y, k x n
    std::vector<FactorCache> factors;
    std::optional<MeanModel> mean;
    FitReport report;

    int k() const { return int(data.rows()); }
    int n() const { return int(data.cols()); }
    int d() const { return int(loadings.cols()); }
};

// ---------------------------------------------------------------------------
// Dense oracle-scale operations (identity checks; guarded to nk <= 2000)
// ---------------------------------------------------------------------------

/// sum_l Sigma_l (x) a_l a_l' + sigma0^2 I_{nk}; exists as a reference for the
/// closed-form precision, not a production path.
Matrix joint_covariance_direct(const Matrix& A, const std::vector<Matrix>& sigmas, double sigma0_sq);

/// sigma0^{-2} (I_{nk} - sum_l (sigma0^2 Sigma_l^{-1} + I)^{-1} (x) a_l a_l').
Matrix joint_precision_closed_form(const Matrix& A, const std::vector<Matrix>& sigmas, double sigma0_sq);

// ---------------------------------------------------------------------------
// Estimation operations (tau-parameterized: C_l = tau_l K_l + I_n everywhere)
// ---------------------------------------------------------------------------

/// Shared-covariance closed form: top-d eigenvectors of
/// G = Y ((tau K)^{-1} + I)^{-1} Y' = Y (I - C^{-1}) Y', sign-normalized.
/// The attained objective (sum of the d largest eigenvalues) is written to
/// *objective when non-null.
Matrix estimate_loadings_shared(const Matrix& Y, const Matrix& K, double tau, int d,
                                double* objective = nullptr);

/// sum_l a_l' G_l a_l for symmetric k x k G_l.
double stiefel_objective(const Matrix& A, const std::vector<Matrix>& G_list);

/// Euclidean gradient: column l is 2 G_l a_l.
Matrix stiefel_gradient(const Matrix& A, const std::vector<Matrix>& G_list);

/// sigma0^2 = S^2/(nk) with S^2 = tr(Y'Y) - sum_l a_l' Y (I - C_l^{-1}) Y' a_l,
/// clamped at zero.
double estimate_noise_variance(const Matrix& Y, const Matrix& A, const std::vector<Matrix>& K_list,
                               const Vector& taus);

/// Per-factor pieces of the marginal likelihood for one (tau, gamma) setting.
struct FactorTransform {
    Matrix G;              // k x k quadratic-form matrix (mean-adjusted when q > 0)
    double log_det = 0.0;  // log|tau K + I|
    double log_det_mean = 0.0;  // log|H'(tau K + I)^{-1} H| (0 when q = 0)
};

FactorTransform factor_transform(const Matrix& Y, const Matrix& K, double tau,
                                 const MeanDesign* design = nullptr);

struct LikelihoodConfig {
    int d = 1;
    KernelFamily family = KernelFamily::matern_5_2;
    bool shared_covariance = true;
    std::optional<double> fixed_noise;
    const MeanDesign* design = nullptr;  // nullptr or q = 0: zero-mean model
    FitOptions optim;                    // inner loading-solve controls
};

/// Profile log likelihood of (tau, gamma) with the loading estimate and the
/// noise variance plugged in (the exact fixed-noise log density when
/// fixed_noise is set). gammas has one vector of ranges per factor; in shared
/// mode all taus and gammas must coincide.
double profile_log_likelihood(const OutputMatrix& Y, const Vector& taus,
                              const std::vector<Vector>& gammas, const LikelihoodConfig& config);

/// Maximum-marginal-likelihood fit: quasi-Newton search over
/// (log tau, log gamma) with the loadings re-derived inside every evaluation,
/// then sigma0^2 from the plug-in formula and sigma_l^2 = tau_l sigma0^2.
/// Deterministic given (Y, config).
FittedModel fit(const OutputMatrix& Y, const FitConfig& config);

/// Rebuilds the derived per-factor caches (correlation matrices,
/// factorizations, posterior weights, regression posterior) for a model
/// given its primary fields; fit() and model deserialization share this path.
FittedModel assemble_fitted_model(Matrix loadings, HyperParams hyper, InputGrid grid, Matrix data,
                                  const MeanConfig& mean = {}, FitReport report = {});

}  // namespace gppca
