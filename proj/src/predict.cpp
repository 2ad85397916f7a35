#include "gppca/predict.hpp"

#include "gppca/linalg.hpp"
#include "gppca/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gppca {

namespace {

PredictiveNormal predict_impl(const FittedModel& model, const Vector& xstar) {
    if (xstar.size() != model.grid.dim())
        throw std::invalid_argument("predict: input dimension does not match the model grid");
    const int k = model.k();
    const int d = model.d();
    const Matrix& A = model.loadings;
    const double s0 = model.hyper.sigma0_sq;
    const bool with_mean = model.mean && model.mean->design.q() > 0;

    Vector z(d);
    Vector D(d);
    for (int l = 0; l < d; ++l) {
        const FactorCache& fc = model.factors[l];
        const double tau = model.hyper.taus[l];
        const double sig2 = tau * s0;
        const Vector kv = corr_cross(model.hyper.kernel_specs[l], model.grid, xstar);
        z[l] = tau * kv.dot(fc.weights);
        // Conditional variance of z_l(x*) given the noisy data, plus noise.
        double Dl = sig2 + s0 - sig2 * tau * kv.dot(fc.chol_C.solve(kv));
        if (with_mean) {
            const MeanDesign& design = model.mean->design;
            const RowVector h = design.basis.eval(xstar);
            const Vector r = h.transpose() - tau * (fc.CinvH.transpose() * kv);
            Dl += s0 * r.dot(fc.chol_HtCinvH.solve(r));
        }
        D[l] = std::max(Dl, 0.0);
    }

    PredictiveNormal out;
    out.mean = A * z;
    double cfac = 1.0;
    if (with_mean) {
        const MeanDesign& design = model.mean->design;
        const RowVector h = design.basis.eval(xstar);
        out.mean += (h * model.mean->B_hat).transpose();
        const Matrix HtH = design.H.transpose() * design.H;
        cfac += h * llt_jittered(HtH).solve(h.transpose());
    }
    Matrix cov = A * D.asDiagonal() * A.transpose() +
                 (s0 * cfac) * (Matrix::Identity(k, k) - A * A.transpose());
    out.cov = 0.5 * (cov + cov.transpose());
    return out;
}

}  // namespace

PredictiveNormal predict(const FittedModel& model, const Vector& xstar) {
    return predict_impl(model, xstar);
}

PredictiveNormal predict_with_mean(const FittedModel& model, const Vector& xstar) {
    if (!model.mean)
        throw std::invalid_argument("predict_with_mean: model has no mean structure");
    return predict_impl(model, xstar);
}

std::vector<PredictiveNormal> predict_batch(const FittedModel& model, const InputGrid& points) {
    points.validate();
    if (points.dim() != model.grid.dim())
        throw std::invalid_argument("predict_batch: input dimension does not match the model grid");
    std::vector<PredictiveNormal> out(points.size());
    par::parallel_for(points.size(), [&](std::int64_t i) {
        out[i] = predict_impl(model, points.points.row(i).transpose());
    });
    return out;
}

FieldPosterior field_posterior(const FittedModel& model) {
    if (model.mean && model.mean->design.q() > 0)
        throw std::invalid_argument("field_posterior: defined for models without mean structure");
    const int k = model.k();
    const int n = model.n();
    const int d = model.d();
    const Matrix& A = model.loadings;
    const double s0 = model.hyper.sigma0_sq;

    Matrix Zhat(d, n);
    Matrix Ddiag(d, n);  // diag of D_l = I - C_l^{-1}
    for (int l = 0; l < d; ++l) {
        const FactorCache& fc = model.factors[l];
        const Vector v = model.data.transpose() * A.col(l);
        Zhat.row(l) = (v - fc.weights).transpose();
        // diag(C^{-1}) from the triangular factor: C^{-1} = L^{-T} L^{-1}.
        const Matrix Linv = fc.chol_C.matrixL().solve(Matrix::Identity(n, n));
        Ddiag.row(l) = (1.0 - Linv.array().square().colwise().sum()).matrix();
    }

    FieldPosterior out;
    out.mean = A * Zhat;
    out.variance.resize(k, n);
    const Matrix A2 = A.array().square();  // k x d
    out.variance = s0 * (A2 * Ddiag.cwiseMax(0.0));
    const Matrix sd = out.variance.cwiseSqrt();
    out.lower = out.mean - 1.96 * sd;
    out.upper = out.mean + 1.96 * sd;
    return out;
}

PredictiveNormal conditional_predict(const FittedModel& model, const Vector& xstar,
                                     const std::vector<int>& observed_rows, const Vector& y1) {
    const int k = model.k();
    std::set<int> obs(observed_rows.begin(), observed_rows.end());
    if (obs.empty()) throw std::invalid_argument("conditional_predict: observed_rows is empty");
    if (int(obs.size()) != int(observed_rows.size()))
        throw std::invalid_argument("conditional_predict: duplicate observed row indices");
    for (int r : obs)
        if (r < 0 || r >= k) throw std::invalid_argument("conditional_predict: row index out of range");
    if (int(obs.size()) == k)
        throw std::invalid_argument("conditional_predict: all rows observed, nothing to predict");
    if (y1.size() != int(obs.size()))
        throw std::invalid_argument("conditional_predict: y1 length must match observed_rows");

    const PredictiveNormal joint = predict_impl(model, xstar);

    std::vector<int> o(obs.begin(), obs.end()), u;
    for (int r = 0; r < k; ++r)
        if (!obs.count(r)) u.push_back(r);
    const int k1 = int(o.size()), k2 = int(u.size());

    Matrix S11(k1, k1), S12(k1, k2), S22(k2, k2);
    Vector mu1(k1), mu2(k2);
    for (int i = 0; i < k1; ++i) {
        mu1[i] = joint.mean[o[i]];
        for (int j = 0; j < k1; ++j) S11(i, j) = joint.cov(o[i], o[j]);
        for (int j = 0; j < k2; ++j) S12(i, j) = joint.cov(o[i], u[j]);
    }
    for (int i = 0; i < k2; ++i) {
        mu2[i] = joint.mean[u[i]];
        for (int j = 0; j < k2; ++j) S22(i, j) = joint.cov(u[i], u[j]);
    }

    const auto llt = llt_jittered(S11);
    PredictiveNormal out;
    out.mean = mu2 + S12.transpose() * llt.solve(y1 - mu1);
    Matrix cov = S22 - S12.transpose() * llt.solve(S12);
    out.cov = 0.5 * (cov + cov.transpose());
    return out;
}

}  // namespace gppca
