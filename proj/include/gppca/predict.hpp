#pragma once

#include "gppca/core.hpp"

#include <vector>

namespace gppca {

/// Predictive law of the k-dimensional output at one new input.
struct PredictiveNormal {
    Vector mean;  // k
    Matrix cov;   // k x k, symmetric PSD up to roundoff

    Vector sd() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Predictive distribution of Y(xstar) under the fitted model; dispatches to
/// the regression-mean form when the model carries a mean structure.
PredictiveNormal predict(const FittedModel& model, const Vector& xstar);

/// Regression-mean predictive distribution (requires a model fitted with
/// q > 0 basis columns).
PredictiveNormal predict_with_mean(const FittedModel& model, const Vector& xstar);

/// Batch prediction; points are processed concurrently against the shared
/// per-factor factorizations.
std::vector<PredictiveNormal> predict_batch(const FittedModel& model, const InputGrid& points);

/// Posterior of the noise-free field A Z at the training inputs: mean matrix,
/// pointwise variances and central 95 percent bounds.
struct FieldPosterior {
    Matrix mean;      // k x n
    Matrix variance;  // k x n, pointwise
    Matrix lower;     // mean - 1.96 sd
    Matrix upper;     // mean + 1.96 sd
};

FieldPosterior field_posterior(const FittedModel& model);

/// Conditional prediction at xstar given observed values y1 on a proper
/// subset of output rows: returns the law of the complementary rows.
PredictiveNormal conditional_predict(const FittedModel& model, const Vector& xstar,
                                     const std::vector<int>& observed_rows, const Vector& y1);

}  // namespace gppca
