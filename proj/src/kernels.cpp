#include "gppca/kernels.hpp"
#include "gppca/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace gppca {

KernelFamily kernel_family_from_string(std::string_view s) {
    if (s == "matern_5_2") return KernelFamily::matern_5_2;
    if (s == "exponential") return KernelFamily::exponential;
    if (s == "gaussian") return KernelFamily::gaussian;
    throw std::invalid_argument("unknown kernel family '" + std::string(s) +
                                "' (expected matern_5_2, exponential or gaussian)");
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::matern_5_2: return "matern_5_2";
        case KernelFamily::exponential: return "exponential";
        case KernelFamily::gaussian: return "gaussian";
    }
    return "?";
}

void KernelSpec::validate() const {
    if (ranges.size() < 1)
        throw std::invalid_argument("KernelSpec: need at least one range parameter");
    for (int m = 0; m < ranges.size(); ++m)
        if (!(ranges[m] > 0.0) || !std::isfinite(ranges[m]))
            throw std::invalid_argument("KernelSpec: range parameters must be positive and finite");
}

double kernel_eval_1d(KernelFamily family, double dist, double range) {
    if (!(range > 0.0)) throw std::invalid_argument("kernel_eval_1d: range must be positive");
    if (dist < 0.0) dist = -dist;
    switch (family) {
        case KernelFamily::matern_5_2: {
            const double r = std::sqrt(5.0) * dist / range;
            return (1.0 + r + 5.0 * dist * dist / (3.0 * range * range)) * std::exp(-r);
        }
        case KernelFamily::exponential:
            return std::exp(-dist / range);
        case KernelFamily::gaussian:
            return std::exp(-dist * dist / (range * range));
    }
    return 0.0;
}

double kernel_eval(const KernelSpec& spec, const Vector& xa, const Vector& xb) {
    spec.validate();
    if (xa.size() != spec.dim() || xb.size() != spec.dim())
        throw std::invalid_argument("kernel_eval: input dimension does not match kernel ranges");
    double v = 1.0;
    for (int m = 0; m < spec.dim(); ++m)
        v *= kernel_eval_1d(spec.family, std::abs(xa[m] - xb[m]), spec.ranges[m]);
    return v;
}

namespace {

// Entry used by both the parallel and serial builders so they agree bitwise.
inline double entry(const KernelSpec& spec, const Matrix& pts, int i, int j) {
    double v = 1.0;
    for (int m = 0; m < pts.cols(); ++m)
        v *= kernel_eval_1d(spec.family, std::abs(pts(i, m) - pts(j, m)), spec.ranges[m]);
    return v;
}

}  // namespace

Matrix corr_matrix(const KernelSpec& spec, const InputGrid& grid) {
    spec.validate();
    grid.validate();
    if (grid.dim() != spec.dim())
        throw std::invalid_argument("corr_matrix: grid dimension does not match kernel ranges");
    const int n = grid.size();
    const Matrix& pts = grid.points;
    Matrix K(n, n);
    par::parallel_for(n, [&](std::int64_t i) {
        K(i, i) = 1.0;
        for (int j = 0; j < int(i); ++j) {
            const double v = entry(spec, pts, int(i), j);
            K(i, j) = v;
            K(j, i) = v;
        }
    });
    return K;
}

Matrix corr_matrix_serial(const KernelSpec& spec, const InputGrid& grid) {
    spec.validate();
    grid.validate();
    if (grid.dim() != spec.dim())
        throw std::invalid_argument("corr_matrix: grid dimension does not match kernel ranges");
    const int n = grid.size();
    const Matrix& pts = grid.points;
    Matrix K(n, n);
    for (int i = 0; i < n; ++i) {
        K(i, i) = 1.0;
        for (int j = 0; j < i; ++j) {
            const double v = entry(spec, pts, i, j);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

Vector corr_cross(const KernelSpec& spec, const InputGrid& grid, const Vector& xstar) {
    spec.validate();
    grid.validate();
    if (xstar.size() != spec.dim() || grid.dim() != spec.dim())
        throw std::invalid_argument("corr_cross: input dimension does not match kernel ranges");
    const int n = grid.size();
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = kernel_eval(spec, grid.points.row(i).transpose(), xstar);
    return v;
}

}  // namespace gppca
