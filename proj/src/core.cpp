#include "gppca/core.hpp"

#include "gppca/linalg.hpp"
#include "gppca/parallel.hpp"
#include "gppca/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

namespace gppca {

void HyperParams::validate() const {
    const int d = int(taus.size());
    if (int(kernel_specs.size()) != d)
        throw std::invalid_argument("HyperParams: one kernel spec per factor required");
    if (!(sigma0_sq >= 0.0)) throw std::invalid_argument("HyperParams: sigma0_sq must be >= 0");
    for (int l = 0; l < d; ++l) {
        if (!(taus[l] > 0.0)) throw std::invalid_argument("HyperParams: taus must be positive");
        kernel_specs[l].validate();
    }
    if (shared_covariance) {
        for (int l = 1; l < d; ++l) {
            const bool same_ranges =
                kernel_specs[l].ranges.size() == kernel_specs[0].ranges.size() &&
                (kernel_specs[l].ranges.array() == kernel_specs[0].ranges.array()).all();
            if (taus[l] != taus[0] || !same_ranges ||
                kernel_specs[l].family != kernel_specs[0].family)
                throw std::invalid_argument("HyperParams: shared covariance requires identical factors");
        }
    }
}

// ---------------------------------------------------------------------------
// Dense oracle-scale operations
// ---------------------------------------------------------------------------

namespace {
void check_oracle_scale(int k, int n) {
    if (std::int64_t(k) * n > 2000)
        throw std::invalid_argument("joint covariance/precision: nk > 2000; this dense form is a "
                                    "test oracle, use the factorized likelihood instead");
}
}  // namespace

Matrix joint_covariance_direct(const Matrix& A, const std::vector<Matrix>& sigmas, double sigma0_sq) {
    const int k = int(A.rows());
    const int d = int(A.cols());
    if (int(sigmas.size()) != d)
        throw std::invalid_argument("joint_covariance_direct: one Sigma_l per loading column");
    const int n = d > 0 ? int(sigmas[0].rows()) : 1;
    check_oracle_scale(k, n);
    Matrix cov = sigma0_sq * Matrix::Identity(n * k, n * k);
    for (int l = 0; l < d; ++l) {
        if (sigmas[l].rows() != n || sigmas[l].cols() != n)
            throw std::invalid_argument("joint_covariance_direct: Sigma_l must all be n x n");
        const Matrix aa = A.col(l) * A.col(l).transpose();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                cov.block(i * k, j * k, k, k) += sigmas[l](i, j) * aa;
    }
    return cov;
}

Matrix joint_precision_closed_form(const Matrix& A, const std::vector<Matrix>& sigmas, double sigma0_sq) {
    const int k = int(A.rows());
    const int d = int(A.cols());
    if (!(sigma0_sq > 0.0))
        throw std::invalid_argument("joint_precision_closed_form: sigma0_sq must be positive");
    if (int(sigmas.size()) != d)
        throw std::invalid_argument("joint_precision_closed_form: one Sigma_l per loading column");
    if (d > 0 && orthonormality_defect(A) > 1e-8)
        throw std::invalid_argument("joint_precision_closed_form: A'A = I required");
    const int n = d > 0 ? int(sigmas[0].rows()) : 1;
    check_oracle_scale(k, n);
    Matrix prec = Matrix::Identity(n * k, n * k);
    for (int l = 0; l < d; ++l) {
        // (sigma0^2 Sigma^{-1} + I)^{-1} = Sigma (Sigma + sigma0^2 I)^{-1}
        const auto llt = llt_jittered(sigmas[l] + sigma0_sq * Matrix::Identity(n, n));
        Matrix B = llt.solve(sigmas[l]).transpose();
        B = 0.5 * (B + B.transpose());
        const Matrix aa = A.col(l) * A.col(l).transpose();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                prec.block(i * k, j * k, k, k) -= B(i, j) * aa;
    }
    return prec / sigma0_sq;
}

// ---------------------------------------------------------------------------
// Estimation operations
// ---------------------------------------------------------------------------

Matrix estimate_loadings_shared(const Matrix& Y, const Matrix& K, double tau, int d, double* objective) {
    const int k = int(Y.rows());
    if (d > k || d < 1) throw std::invalid_argument("estimate_loadings_shared: need 1 <= d <= k");
    if (!(tau > 0.0)) throw std::invalid_argument("estimate_loadings_shared: tau must be positive");
    const int n = int(Y.cols());
    const auto llt = llt_jittered(tau * K + Matrix::Identity(n, n));
    Matrix G = Y * Y.transpose() - Y * llt.solve(Y.transpose());
    G = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
    if (eig.info() != Eigen::Success)
        throw NumericError("estimate_loadings_shared: eigensolver failed");
    Matrix U(k, d);
    for (int j = 0; j < d; ++j) U.col(j) = eig.eigenvectors().col(k - 1 - j);
    sign_normalize_columns(U);
    if (objective) *objective = eig.eigenvalues().tail(d).sum();
    return U;
}

double stiefel_objective(const Matrix& A, const std::vector<Matrix>& G_list) {
    const int d = int(A.cols());
    if (int(G_list.size()) != d)
        throw std::invalid_argument("stiefel_objective: one G_l per loading column");
    double v = 0.0;
    for (int l = 0; l < d; ++l) {
        if (G_list[l].rows() != A.rows() || G_list[l].cols() != A.rows())
            throw std::invalid_argument("stiefel_objective: G_l must be k x k");
        v += A.col(l).dot(G_list[l] * A.col(l));
    }
    return v;
}

Matrix stiefel_gradient(const Matrix& A, const std::vector<Matrix>& G_list) {
    const int d = int(A.cols());
    if (int(G_list.size()) != d)
        throw std::invalid_argument("stiefel_gradient: one G_l per loading column");
    Matrix g(A.rows(), d);
    for (int l = 0; l < d; ++l) g.col(l) = 2.0 * (G_list[l] * A.col(l));
    return g;
}

double estimate_noise_variance(const Matrix& Y, const Matrix& A, const std::vector<Matrix>& K_list,
                               const Vector& taus) {
    const int k = int(Y.rows());
    const int n = int(Y.cols());
    const int d = int(A.cols());
    if (int(K_list.size()) != d || taus.size() != d)
        throw std::invalid_argument("estimate_noise_variance: need one (K, tau) per loading column");
    if (d > 0 && orthonormality_defect(A) > 1e-8)
        throw std::invalid_argument("estimate_noise_variance: A'A = I required");
    double s2 = Y.squaredNorm();
    for (int l = 0; l < d; ++l) {
        if (!(taus[l] > 0.0)) throw std::invalid_argument("estimate_noise_variance: taus must be positive");
        const auto llt = llt_jittered(taus[l] * K_list[l] + Matrix::Identity(n, n));
        const Vector v = Y.transpose() * A.col(l);
        s2 -= v.dot(v - llt.solve(v));
    }
    return std::max(s2, 0.0) / double(n * k);
}

FactorTransform factor_transform(const Matrix& Y, const Matrix& K, double tau, const MeanDesign* design) {
    if (!(tau > 0.0)) throw std::invalid_argument("factor_transform: tau must be positive");
    const int n = int(Y.cols());
    if (K.rows() != n || K.cols() != n)
        throw std::invalid_argument("factor_transform: K must be n x n");
    FactorTransform out;
    const auto llt_C = llt_jittered(tau * K + Matrix::Identity(n, n));
    out.log_det = log_det(llt_C);

    if (design == nullptr || design->q() == 0) {
        Matrix G = Y * Y.transpose() - Y * llt_C.solve(Y.transpose());
        out.G = 0.5 * (G + G.transpose());
        return out;
    }

    const Matrix& M = design->M;
    const Matrix& H = design->H;
    Matrix HtCH = H.transpose() * llt_C.solve(H);
    HtCH = 0.5 * (HtCH + HtCH.transpose());
    out.log_det_mean = log_det(llt_jittered(HtCH));

    const Matrix YM = Y * M;
    try {
        // Direct form: factor K, assemble M + tau^{-1} K^{-1}, factor that.
        const auto llt_K = llt_jittered(K);
        Matrix S = M + llt_K.solve(Matrix::Identity(n, n)) / tau;
        S = 0.5 * (S + S.transpose());
        const auto ldlt_S = ldlt_jittered(S);
        Matrix G = YM * ldlt_S.solve(YM.transpose());
        out.G = 0.5 * (G + G.transpose());
    } catch (const NumericError&) {
        // K^{-1}-free fallback: M (M + tau^{-1}K^{-1})^{-1} M = M tauK (M tauK + I)^{-1} M.
        Eigen::PartialPivLU<Matrix> lu(M * (tau * K) + Matrix::Identity(n, n));
        const Matrix X = lu.solve(YM.transpose());
        Matrix G = tau * (YM * K) * X;
        out.G = 0.5 * (G + G.transpose());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Profile likelihood and fit
// ---------------------------------------------------------------------------

namespace {

constexpr double kLogTauLo = -25.0, kLogTauHi = 25.0;

struct ParamBox {
    Vector lo, hi;
    Vector clamp(Vector theta) const {
        for (int i = 0; i < theta.size(); ++i) theta[i] = std::min(std::max(theta[i], lo[i]), hi[i]);
        return theta;
    }
};

// theta layout: [log tau_1..log tau_D, log gamma_{1,1..p}, ..., log gamma_{D,1..p}]
// with D = 1 in shared mode.
struct ParamPacking {
    int factors;  // D
    int p;

    int dims() const { return factors * (1 + p); }
    Vector taus(const Vector& theta, int d) const {
        Vector t(d);
        for (int l = 0; l < d; ++l) t[l] = std::exp(theta[factors == 1 ? 0 : l]);
        return t;
    }
    std::vector<Vector> gammas(const Vector& theta, int d) const {
        std::vector<Vector> g(d);
        for (int l = 0; l < d; ++l) {
            const int base = factors + (factors == 1 ? 0 : l) * p;
            g[l] = theta.segment(base, p).array().exp();
        }
        return g;
    }
};

class ProfileEvaluator {
public:
    ProfileEvaluator(const OutputMatrix& Y, const LikelihoodConfig& cfg)
        : Y_(Y), cfg_(cfg), rng_(cfg.optim.seed) {
        Y_.validate();
        const int k = Y_.k();
        if (cfg_.d < 1 || cfg_.d > k)
            throw std::invalid_argument("likelihood: need 1 <= d <= k");
        if (cfg_.design && cfg_.design->q() > 0) {
            q_ = cfg_.design->q();
            trYMY_ = (Y_.values * cfg_.design->M * Y_.values.transpose()).trace();
            if (!(trYMY_ > 0.0))
                throw std::invalid_argument("likelihood: degenerate data (zero residual variance)");
            log_det_HtH_ = log_det(llt_jittered(cfg_.design->H.transpose() * cfg_.design->H));
        } else {
            trYMY_ = Y_.values.squaredNorm();
            if (!(trYMY_ > 0.0))
                throw std::invalid_argument("likelihood: degenerate data (zero variance)");
        }
        if (cfg_.fixed_noise && !(*cfg_.fixed_noise > 0.0))
            throw std::invalid_argument("likelihood: fixed noise variance must be positive");
        pca_init_ = pca_subspace(Y_.values, cfg_.d);
        warm_ = pca_init_;
    }

    struct Eval {
        double loglik = 0.0;
        double S2 = 0.0;
        double sigma0_sq = 0.0;
        Matrix loadings;
        Vector taus;
        std::vector<KernelSpec> specs;
    };

    Eval evaluate(const Vector& taus, const std::vector<Vector>& gammas, bool polish) {
        const int d = cfg_.d;
        const int k = Y_.k();
        const int n = Y_.n();
        if (taus.size() != d || int(gammas.size()) != d)
            throw std::invalid_argument("likelihood: need one (tau, gamma) per factor");
        if (cfg_.shared_covariance) {
            for (int l = 1; l < d; ++l) {
                const bool same = gammas[l].size() == gammas[0].size() &&
                                  (gammas[l].array() == gammas[0].array()).all();
                if (taus[l] != taus[0] || !same)
                    throw std::invalid_argument("likelihood: shared covariance requires identical factors");
            }
        }

        Eval ev;
        ev.taus = taus;
        for (int l = 0; l < d; ++l) ev.specs.emplace_back(cfg_.family, gammas[l]);

        const int m = cfg_.shared_covariance ? 1 : d;
        std::vector<FactorTransform> tf(m);
        par::parallel_for(m, [&](std::int64_t l) {
            const Matrix K = corr_matrix(ev.specs[l], Y_.grid);
            tf[l] = factor_transform(Y_.values, K, taus[l], cfg_.design);
        });

        double explained = 0.0;
        if (cfg_.shared_covariance) {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(tf[0].G);
            if (eig.info() != Eigen::Success) throw NumericError("likelihood: eigensolver failed");
            ev.loadings.resize(k, d);
            for (int j = 0; j < d; ++j) ev.loadings.col(j) = eig.eigenvectors().col(k - 1 - j);
            sign_normalize_columns(ev.loadings);
            explained = eig.eigenvalues().tail(d).sum();
        } else {
            std::vector<Matrix> G_list(d);
            for (int l = 0; l < d; ++l) G_list[l] = tf[l].G;
            explained = solve_loadings(G_list, polish, ev.loadings);
        }

        ev.S2 = std::max(trYMY_ - explained, 0.0);
        const double dof = cfg_.design && q_ > 0 ? double(k) * (n - q_) : double(n) * k;
        const double safe_S2 = std::max(ev.S2, 1e-300);

        double sum_logdet = 0.0;
        for (int l = 0; l < d; ++l) {
            const auto& t = tf[cfg_.shared_covariance ? 0 : l];
            sum_logdet += t.log_det + t.log_det_mean;
            if (cfg_.fixed_noise && q_ > 0) sum_logdet -= log_det_HtH_;  // |M tau K + I| chain
        }

        if (cfg_.fixed_noise) {
            const double s0 = *cfg_.fixed_noise;
            ev.sigma0_sq = s0;
            ev.loglik = -0.5 * dof * std::log(2.0 * 3.14159265358979323846 * s0) - 0.5 * sum_logdet -
                        ev.S2 / (2.0 * s0);
        } else {
            ev.sigma0_sq = ev.S2 / dof;
            ev.loglik = -0.5 * sum_logdet - 0.5 * dof * std::log(safe_S2);
        }
        return ev;
    }

    const Matrix& pca_init() const { return pca_init_; }

private:
    static Matrix pca_subspace(const Matrix& Y, int d) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(Y * Y.transpose());
        const int k = int(Y.rows());
        Matrix U(k, d);
        for (int j = 0; j < d; ++j) U.col(j) = eig.eigenvectors().col(k - 1 - j);
        sign_normalize_columns(U);
        return U;
    }

    double solve_loadings(const std::vector<Matrix>& G_list, bool polish, Matrix& out) {
        StiefelProblem problem{
            [&](const Matrix& A) { return stiefel_objective(A, G_list); },
            [&](const Matrix& A) { return stiefel_gradient(A, G_list); },
        };
        StiefelOptions opts = cfg_.optim.stiefel;
        const int starts = polish ? std::max(1, cfg_.optim.stiefel_starts) : 1;
        if (polish) opts.grad_tol = std::min(opts.grad_tol, 1e-8);

        Matrix best;
        double best_obj = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < starts; ++s) {
            Matrix A0 = (s == 0) ? warm_ : sample_uniform_stiefel(Y_.k(), cfg_.d, rng_);
            auto [A, rep] = optimize_on_stiefel(problem, std::move(A0), opts);
            if (rep.objective > best_obj) {
                best_obj = rep.objective;
                best = std::move(A);
            }
        }
        sign_normalize_columns(best);
        warm_ = best;
        out = std::move(best);
        return best_obj;
    }

    OutputMatrix Y_;
    LikelihoodConfig cfg_;
    Rng rng_;
    int q_ = 0;
    double trYMY_ = 0.0;
    double log_det_HtH_ = 0.0;
    Matrix pca_init_;
    Matrix warm_;
};

struct BfgsOutcome {
    Vector x;
    double f = 0.0;
    int iters = 0;
    int evals = 0;
    bool converged = false;
};

// Small dense BFGS maximizer with central-difference gradients and Armijo
// backtracking; dimensions here are at most d(1+p).
template <typename F>
BfgsOutcome bfgs_maximize(F&& value, Vector x0, int max_iters, double rel_tol, double fd_step) {
    const int m = int(x0.size());
    BfgsOutcome out;
    auto eval = [&](const Vector& x) {
        ++out.evals;
        const double v = value(x);
        if (std::isnan(v)) throw NumericError("fit: objective evaluated to NaN");
        return v;
    };
    auto grad = [&](const Vector& x, double /*fx*/) {
        Vector g(m);
        for (int i = 0; i < m; ++i) {
            const double h = fd_step * std::max(1.0, std::abs(x[i]));
            Vector xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            g[i] = (eval(xp) - eval(xm)) / (2.0 * h);
        }
        return g;
    };

    Vector x = std::move(x0);
    double f = eval(x);
    Vector g = grad(x, f);
    Matrix Hinv = Matrix::Identity(m, m);

    // Parameters are logs, so cap any single move at two e-folds per
    // coordinate; without this the first steps overshoot straight into the
    // parameter box walls.
    const double max_move = 2.0;

    for (out.iters = 0; out.iters < max_iters; ++out.iters) {
        Vector p = Hinv * g;  // ascent direction
        double slope = p.dot(g);
        if (slope <= 0.0) {
            Hinv = Matrix::Identity(m, m);
            p = g;
            slope = g.squaredNorm();
        }
        if (slope <= 1e-18 * (1.0 + std::abs(f))) {
            out.converged = true;
            break;
        }
        const double pmax = p.cwiseAbs().maxCoeff();
        if (pmax > max_move) {
            p *= max_move / pmax;
            slope = p.dot(g);
        }

        double alpha = 1.0;
        double fnew = f;
        Vector xnew = x;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            xnew = x + alpha * p;
            fnew = eval(xnew);
            if (std::isfinite(fnew) && fnew >= f + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            out.converged = true;  // no ascent achievable at line-search resolution
            break;
        }

        const Vector gnew = grad(xnew, fnew);
        const Vector s = xnew - x;
        const Vector y = g - gnew;  // gradient change of the negated (minimized) objective
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Matrix I = Matrix::Identity(m, m);
            Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) +
                   rho * s * s.transpose();
        }

        const bool small_change = std::abs(fnew - f) <= rel_tol * (std::abs(f) + 1.0);
        x = std::move(xnew);
        f = fnew;
        g = gnew;
        if (small_change) {
            out.converged = true;
            ++out.iters;
            break;
        }
    }
    out.x = std::move(x);
    out.f = f;
    return out;
}

ParamBox make_box(const InputGrid& grid, const ParamPacking& pk) {
    const Vector ext = grid.extent();
    ParamBox box;
    box.lo.resize(pk.dims());
    box.hi.resize(pk.dims());
    for (int l = 0; l < pk.factors; ++l) {
        box.lo[l] = kLogTauLo;
        box.hi[l] = kLogTauHi;
    }
    for (int l = 0; l < pk.factors; ++l)
        for (int m = 0; m < pk.p; ++m) {
            const double base = std::log(std::max(ext[m], 1e-8));
            box.lo[pk.factors + l * pk.p + m] = base - 14.0;
            box.hi[pk.factors + l * pk.p + m] = base + 7.0;
        }
    return box;
}

Vector initial_theta(const InputGrid& grid, const ParamPacking& pk) {
    const Vector ext = grid.extent();
    Vector theta = Vector::Zero(pk.dims());  // tau_0 = 1
    for (int l = 0; l < pk.factors; ++l)
        for (int m = 0; m < pk.p; ++m)
            theta[pk.factors + l * pk.p + m] = std::log(std::max(ext[m] / 2.0, 1e-8));
    return theta;
}

}  // namespace

namespace {
std::string describe_params(const Vector& taus, const std::vector<Vector>& gammas) {
    std::string s = "tau = [";
    for (int l = 0; l < taus.size(); ++l) s += (l ? ", " : "") + std::to_string(taus[l]);
    s += "], gamma = [";
    for (size_t l = 0; l < gammas.size(); ++l) {
        if (l) s += "; ";
        for (int m = 0; m < gammas[l].size(); ++m)
            s += (m ? ", " : "") + std::to_string(gammas[l][m]);
    }
    return s + "]";
}
}  // namespace

double profile_log_likelihood(const OutputMatrix& Y, const Vector& taus,
                              const std::vector<Vector>& gammas, const LikelihoodConfig& config) {
    ProfileEvaluator ev(Y, config);
    double value = 0.0;
    try {
        value = ev.evaluate(taus, gammas, /*polish=*/true).loglik;
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (" + describe_params(taus, gammas) + ")");
    }
    if (!std::isfinite(value))
        throw NumericError("profile_log_likelihood: non-finite value at " +
                           describe_params(taus, gammas));
    return value;
}

FittedModel fit(const OutputMatrix& Y, const FitConfig& config) {
    Y.validate();
    const int k = Y.k();
    const int n = Y.n();
    const int p = Y.grid.dim();
    if (config.d < 1 || config.d > k) throw std::invalid_argument("fit: need 1 <= d <= k");
    if (n < 2) throw std::invalid_argument("fit: need at least two inputs");

    std::optional<MeanDesign> design;
    if (!config.mean.empty())
        design = build_mean_design(MeanBasis{config.mean, p}, Y.grid);

    LikelihoodConfig lik;
    lik.d = config.d;
    lik.family = config.family;
    lik.shared_covariance = config.shared_covariance;
    lik.fixed_noise = config.fixed_noise;
    lik.design = design ? &*design : nullptr;
    lik.optim = config.optim;

    ProfileEvaluator evaluator(Y, lik);
    const ParamPacking pk{config.shared_covariance ? 1 : config.d, p};
    const ParamBox box = make_box(Y.grid, pk);

    auto objective = [&](const Vector& theta_raw) {
        const Vector theta = box.clamp(theta_raw);
        return evaluator.evaluate(pk.taus(theta, config.d), pk.gammas(theta, config.d),
                                  /*polish=*/false)
            .loglik;
    };

    BfgsOutcome opt = bfgs_maximize(objective, initial_theta(Y.grid, pk), config.optim.max_iters,
                                    config.optim.rel_tol, config.optim.fd_step);
    const Vector theta = box.clamp(opt.x);
    auto final_eval = evaluator.evaluate(pk.taus(theta, config.d), pk.gammas(theta, config.d),
                                         /*polish=*/true);

    HyperParams hyper;
    hyper.sigma0_sq = final_eval.sigma0_sq;
    hyper.taus = final_eval.taus;
    hyper.kernel_specs = final_eval.specs;
    hyper.shared_covariance = config.shared_covariance;
    hyper.fixed_noise = config.fixed_noise;

    FitReport report;
    report.converged = opt.converged;
    report.iterations = opt.iters;
    report.likelihood_evals = opt.evals;
    report.objective = final_eval.loglik;

    return assemble_fitted_model(final_eval.loadings, std::move(hyper), Y.grid, Y.values,
                                 config.mean, report);
}

FittedModel assemble_fitted_model(Matrix loadings, HyperParams hyper, InputGrid grid, Matrix data,
                                  const MeanConfig& mean, FitReport report) {
    grid.validate();
    hyper.validate();
    const int n = int(data.cols());
    const int d = int(loadings.cols());
    if (int(hyper.taus.size()) != d)
        throw std::invalid_argument("assemble_fitted_model: one tau per loading column required");
    if (grid.size() != n)
        throw std::invalid_argument("assemble_fitted_model: grid size must match data columns");
    if (orthonormality_defect(loadings) > 1e-8)
        throw std::invalid_argument("assemble_fitted_model: loadings must have orthonormal columns");

    std::optional<MeanDesign> design;
    if (!mean.empty()) design = build_mean_design(MeanBasis{mean, grid.dim()}, grid);

    FittedModel model;
    model.loadings = std::move(loadings);
    model.hyper = std::move(hyper);
    model.grid = std::move(grid);
    model.data = std::move(data);
    model.report = report;

    model.factors.resize(d);
    par::parallel_for(d, [&](std::int64_t l) {
        FactorCache& fc = model.factors[l];
        fc.corr = corr_matrix(model.hyper.kernel_specs[l], model.grid);
        fc.chol_C = llt_jittered(model.hyper.taus[l] * fc.corr + Matrix::Identity(n, n));
        if (design) {
            const Matrix& M = design->M;
            Eigen::PartialPivLU<Matrix> lu(M * (model.hyper.taus[l] * fc.corr) +
                                           Matrix::Identity(n, n));
            fc.weights = lu.solve(M * (model.data.transpose() * model.loadings.col(l)));
            fc.CinvH = fc.chol_C.solve(design->H);
            Matrix HtCH = design->H.transpose() * fc.CinvH;
            HtCH = 0.5 * (HtCH + HtCH.transpose());
            fc.chol_HtCinvH = llt_jittered(HtCH);
        } else {
            fc.weights = fc.chol_C.solve(model.data.transpose() * model.loadings.col(l));
        }
    });

    if (design) {
        MeanModel mm;
        mm.design = *design;
        mm.Z_hat.resize(d, n);
        for (int l = 0; l < d; ++l)
            mm.Z_hat.row(l) =
                (model.hyper.taus[l] * (model.factors[l].corr * model.factors[l].weights)).transpose();
        const Matrix resid = (model.data - model.loadings * mm.Z_hat).transpose();
        mm.B_hat =
            llt_jittered(design->H.transpose() * design->H).solve(design->H.transpose() * resid);
        model.mean = std::move(mm);
    }

    return model;
}

}  // namespace gppca
