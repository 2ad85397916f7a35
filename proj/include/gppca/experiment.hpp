#pragma once

#include "gppca/baselines.hpp"
#include "gppca/simulate.hpp"

#include <string>
#include <vector>

namespace gppca {

enum class Method { pca, gppca, ly1, ly5 };

Method method_from_string(const std::string& s);
std::string to_string(Method m);

struct MethodResult {
    double angle = 0.0;  // largest principal angle to the true subspace
    double mse = 0.0;    // mean squared error of the estimated mean matrix
    double fit_ms = 0.0;
    bool ok = false;
    std::string error;
};

struct ExperimentReport {
    Scenario scenario;
    std::vector<Method> methods;
    // results[m][r] is method m on replicate r.
    std::vector<std::vector<MethodResult>> results;
    int failures = 0;

    double avg_mse(Method m) const;       // mean over successful replicates
    double median_angle(Method m) const;  // median over successful replicates
    std::vector<double> mses(Method m) const;
    std::vector<double> angles(Method m) const;
};

/// Runs every (replicate, method) pair: simulate, estimate the loadings,
/// score the subspace angle and the mean-matrix MSE. The gppca method fits by
/// maximum marginal likelihood and scores the posterior mean of A Z; the
/// baselines score A A' Y. Replicates execute concurrently on pre-split
/// RNG streams, so the report does not depend on the thread count.
/// Per-replicate failures are recorded, not fatal.
ExperimentReport run_experiment(const Scenario& scenario, const std::vector<Method>& methods,
                                bool parallel = true);

/// Deterministic CSV: one row per (method, replicate) plus one summary row
/// per method. Timings are intentionally not written.
void write_report_csv(const ExperimentReport& report, const std::string& path);

}  // namespace gppca
