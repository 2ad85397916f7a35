#pragma once

#include "gppca/types.hpp"

#include <functional>
#include <optional>
#include <utility>

namespace gppca {

struct StiefelOptions {
    int max_iters = 500;
    /// Stop when the projected-gradient Frobenius norm falls below
    /// grad_tol * max(1, initial projected-gradient norm).
    double grad_tol = 1e-6;
    double initial_step = 1e-2;
    double armijo_rho = 0.5;
    double armijo_c = 1e-4;
    bool bb_steps = true;
    /// Zhang-Hager nonmonotone reference decay; 0 gives a monotone search.
    double nonmonotone_eta = 0.85;

    void validate() const;
};

struct StiefelReport {
    int iterations = 0;
    double grad_norm = 0.0;  // final projected-gradient norm, relative scale
    bool converged = false;
    double objective = 0.0;
    double max_defect = 0.0;  // worst ||A'A - I||_max over accepted iterates
};

/// Feasible curve point (I + step/2 W)^{-1} (I - step/2 W) A for skew W.
/// Returns nullopt when the solve is singular at this step (caller should
/// shrink the step and retry); step 0 returns A unchanged.
std::optional<Matrix> cayley_retraction(const Matrix& A, const Matrix& W, double step);

struct StiefelProblem {
    std::function<double(const Matrix&)> value;     // objective to maximize
    std::function<Matrix(const Matrix&)> gradient;  // Euclidean k x d gradient
};

/// Maximizes problem.value over matrices with orthonormal columns, starting
/// from the feasible point A0. Curvilinear search in the Cayley curve through
/// W = G A' - A G', Barzilai-Borwein steps with nonmonotone Armijo
/// backtracking. Every accepted iterate stays feasible; the best iterate seen
/// is returned if the gradient tolerance is not reached.
std::pair<Matrix, StiefelReport> optimize_on_stiefel(const StiefelProblem& problem, Matrix A0,
                                                     const StiefelOptions& opts = {});

}  // namespace gppca
