#pragma once

#include "gppca/kernels.hpp"
#include "gppca/stiefel.hpp"
#include "gppca/types.hpp"

#include <optional>
#include <vector>

namespace gppca {

struct FittedModel;  // core.hpp

/// Which columns enter the regression basis h(x). Empty config means no mean
/// structure (q = 0), which reproduces the zero-mean model exactly.
struct MeanConfig {
    bool intercept = false;
    bool linear_input = false;           // all p input coordinates
    std::vector<int> covariate_columns;  // extra input columns used as covariates

    bool empty() const { return !intercept && !linear_input && covariate_columns.empty(); }
    int q(int input_dim) const {
        return (intercept ? 1 : 0) + (linear_input ? input_dim : 0) + int(covariate_columns.size());
    }
};

/// Deterministic basis evaluator h(x): input vector -> 1 x q row.
struct MeanBasis {
    MeanConfig config;
    int input_dim = 0;

    int q() const { return config.q(input_dim); }
    RowVector eval(const Vector& x) const;
};

/// Design matrix H (n x q) and the residual projector M = I - H(H'H)^{-1}H'.
struct MeanDesign {
    Matrix H;
    Matrix M;
    MeanBasis basis;

    int q() const { return int(H.cols()); }
    int n() const { return int(H.rows()); }
};

/// Builds the design and projector; rejects rank-deficient H naming the
/// offending columns.
MeanDesign build_mean_design(const MeanBasis& basis, const InputGrid& grid);

/// G_{l,M} = Y M (M + tau^{-1} K^{-1})^{-1} M Y', the mean-adjusted quadratic
/// form matrix. Direct factorization with jitter; falls back to the
/// K^{-1}-free push-through form tau K (M tau K + I)^{-1} if that fails.
Matrix mean_factor_transform(const Matrix& Y, const Matrix& K, double tau, const MeanDesign& design);

/// sigma0^2 = S^2_M / (k(n-q)) with
/// S^2_M = tr(YMY') - sum_l a_l' G_{l,M} a_l, clamped at zero.
double noise_variance_mean(const Matrix& Y, const Matrix& A, const std::vector<Matrix>& K_list,
                           const Vector& taus, const MeanDesign& design);

/// Closed-form loading estimate when all factors share (K, tau): top-d
/// eigenvectors of G_M, sign-normalized.
Matrix estimate_loadings_mean_shared(const Matrix& Y, const Matrix& K, double tau,
                                     const MeanDesign& design, int d, double* objective = nullptr);

/// General case: maximizes sum_l a_l' G_{l,M} a_l over the Stiefel manifold
/// from the given feasible start.
Matrix estimate_loadings_mean(const Matrix& Y, const std::vector<Matrix>& K_list, const Vector& taus,
                              const MeanDesign& design, const Matrix& init,
                              const StiefelOptions& opts = {});

/// Posterior mean of the regression coefficients,
/// B = (H'H)^{-1} H' (Y - A Z_M)'.  Requires a model fitted with q > 0.
Matrix regression_posterior_mean(const FittedModel& model);

struct LikelihoodConfig;  // core.hpp

/// Mean-structure profile log likelihood: the zero-mean form plus the
/// |H'(tau K + I)^{-1} H| determinants, with S^2_M in place of S^2 and
/// k(n-q) degrees of freedom. Equivalent to profile_log_likelihood with
/// config.design set; any design passed in config is overridden.
double profile_log_likelihood_mean(const OutputMatrix& Y, const Vector& taus,
                                   const std::vector<Vector>& gammas, const MeanDesign& design,
                                   const LikelihoodConfig& config);

}  // namespace gppca
