#include "gppca/stiefel.hpp"
#include "gppca/linalg.hpp"

#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

namespace gppca {

void StiefelOptions::validate() const {
    if (max_iters < 1) throw std::invalid_argument("StiefelOptions: max_iters must be positive");
    if (!(grad_tol > 0)) throw std::invalid_argument("StiefelOptions: grad_tol must be positive");
    if (!(initial_step > 0)) throw std::invalid_argument("StiefelOptions: initial_step must be positive");
    if (!(armijo_rho > 0 && armijo_rho < 1))
        throw std::invalid_argument("StiefelOptions: armijo_rho must lie in (0,1)");
    if (!(armijo_c > 0 && armijo_c < 1))
        throw std::invalid_argument("StiefelOptions: armijo_c must lie in (0,1)");
    if (!(nonmonotone_eta >= 0 && nonmonotone_eta < 1))
        throw std::invalid_argument("StiefelOptions: nonmonotone_eta must lie in [0,1)");
}

std::optional<Matrix> cayley_retraction(const Matrix& A, const Matrix& W, double step) {
    const int k = int(A.rows());
    if (W.rows() != k || W.cols() != k)
        throw std::invalid_argument("cayley_retraction: W must be k x k");
    if ((W + W.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, W.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("cayley_retraction: W must be skew-symmetric");
    if (step == 0.0) return A;
    const Matrix lhs = Matrix::Identity(k, k) + (step / 2.0) * W;
    Eigen::PartialPivLU<Matrix> lu(lhs);
    const Matrix rhs = A - (step / 2.0) * (W * A);
    Matrix Y = lu.solve(rhs);
    if (!Y.allFinite()) return std::nullopt;
    // LU of a singular matrix can still "succeed"; validate by residual.
    if ((lhs * Y - rhs).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
        return std::nullopt;
    return Y;
}

namespace {

// Curve point for the ascent direction at step s using the low-rank form
// A - s U (I + s/2 V'U)^{-1} V'A with U = [-g, A], V = [A, g], which equals
// cayley_retraction(A, gA' - Ag', -s) but costs a 2d x 2d solve when 2d < k.
struct CurveFactors {
    Matrix U, V;        // k x 2d
    Matrix VtU, VtA;    // 2d x 2d, 2d x d
    bool low_rank;
    Matrix W;           // dense skew, only when !low_rank

    CurveFactors(const Matrix& A, const Matrix& grad) {
        const int k = int(A.rows());
        const int d = int(A.cols());
        low_rank = 2 * d < k;
        U.resize(k, 2 * d);
        V.resize(k, 2 * d);
        U.leftCols(d) = -grad;
        U.rightCols(d) = A;
        V.leftCols(d) = A;
        V.rightCols(d) = grad;
        if (low_rank) {
            VtU = V.transpose() * U;
            VtA = V.transpose() * A;
        } else {
            W = U * V.transpose();  // -(gA' - Ag')
        }
    }

    std::optional<Matrix> at(const Matrix& A, double s) const {
        if (low_rank) {
            const int m = int(VtU.rows());
            Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(m, m) + (s / 2.0) * VtU);
            Matrix inner = lu.solve(VtA);
            if (!inner.allFinite()) return std::nullopt;
            Matrix Y = A - s * (U * inner);
            if (!Y.allFinite()) return std::nullopt;
            return Y;
        }
        return cayley_retraction(A, W, s);
    }

    // d/ds of the curve at s = 0: -U V'A.
    Matrix tangent0(const Matrix& A) const {
        if (low_rank) return -(U * VtA);
        return -(W * A);
    }
};

Matrix projected_gradient(const Matrix& A, const Matrix& grad) {
    return grad - A * (grad.transpose() * A);
}

}  // namespace

std::pair<Matrix, StiefelReport> optimize_on_stiefel(const StiefelProblem& problem, Matrix A0,
                                                     const StiefelOptions& opts) {
    opts.validate();
    if (!problem.value || !problem.gradient)
        throw std::invalid_argument("optimize_on_stiefel: objective and gradient are required");
    if (orthonormality_defect(A0) > 1e-8)
        throw std::invalid_argument("optimize_on_stiefel: A0 is not a feasible Stiefel point");
    if (orthonormality_defect(A0) > 1e-12) A0 = orthonormalize(A0);

    StiefelReport rep;
    Matrix A = std::move(A0);
    double f = problem.value(A);
    if (!std::isfinite(f)) throw NumericError("optimize_on_stiefel: objective non-finite at start");

    Matrix g = problem.gradient(A);
    Matrix gp = projected_gradient(A, g);
    const double gscale = std::max(1.0, gp.norm());

    Matrix best_A = A;
    double best_f = f;

    // Zhang-Hager nonmonotone reference.
    double Cref = f, Q = 1.0;
    double step = opts.initial_step;
    rep.max_defect = orthonormality_defect(A);

    int stall = 0;
    for (rep.iterations = 0; rep.iterations < opts.max_iters; ++rep.iterations) {
        rep.grad_norm = gp.norm() / gscale;
        if (rep.grad_norm <= opts.grad_tol) {
            rep.converged = true;
            break;
        }

        CurveFactors curve(A, g);
        const double ascent = (g.array() * curve.tangent0(A).array()).sum();
        if (!(ascent > 0)) break;  // numerically stationary

        bool accepted = false;
        Matrix Anew;
        double fnew = 0.0;
        double s = step;
        for (int bt = 0; bt < 50; ++bt) {
            auto Ycand = curve.at(A, s);
            if (Ycand) {
                Anew = std::move(*Ycand);
                fnew = problem.value(Anew);
                if (!std::isfinite(fnew))
                    throw NumericError("optimize_on_stiefel: objective returned non-finite value");
                if (fnew >= Cref + opts.armijo_c * s * ascent) {
                    accepted = true;
                    break;
                }
            }
            s *= opts.armijo_rho;
        }
        if (!accepted) break;

        if (orthonormality_defect(Anew) > 1e-12) Anew = orthonormalize(Anew);
        rep.max_defect = std::max(rep.max_defect, orthonormality_defect(Anew));

        Matrix gnew = problem.gradient(Anew);
        Matrix gpnew = projected_gradient(Anew, gnew);

        if (opts.bb_steps) {
            const Matrix S = Anew - A;
            const Matrix Yd = gpnew - gp;
            const double ss = S.squaredNorm();
            const double sy = std::abs((S.array() * Yd.array()).sum());
            const double yy = Yd.squaredNorm();
            double bb = (rep.iterations % 2 == 0) ? (sy > 0 ? ss / sy : s) : (yy > 0 ? sy / yy : s);
            if (std::isfinite(bb)) step = std::min(std::max(bb, 1e-20), 1e20);
        } else {
            step = s;
        }

        if (std::abs(fnew - f) <= 1e-14 * (1.0 + std::abs(f))) {
            if (++stall >= 3) {
                A = std::move(Anew);
                f = fnew;
                gp = std::move(gpnew);
                ++rep.iterations;
                break;
            }
        } else {
            stall = 0;
        }

        A = std::move(Anew);
        f = fnew;
        g = std::move(gnew);
        gp = std::move(gpnew);
        if (f > best_f) {
            best_f = f;
            best_A = A;
        }
        const double Qn = opts.nonmonotone_eta * Q + 1.0;
        Cref = (opts.nonmonotone_eta * Q * Cref + f) / Qn;
        Q = Qn;
    }

    if (f > best_f) {
        best_f = f;
        best_A = A;
    }
    rep.grad_norm = projected_gradient(best_A, problem.gradient(best_A)).norm() / gscale;
    if (rep.grad_norm <= opts.grad_tol) rep.converged = true;
    rep.objective = best_f;
    rep.max_defect = std::max(rep.max_defect, orthonormality_defect(best_A));
    return {std::move(best_A), rep};
}

}  // namespace gppca
