#pragma once

#include "gppca/types.hpp"

#include <string>
#include <string_view>

namespace gppca {

/// Supported one-dimensional correlation families. Roughness is fixed per
/// family: exponential is Matern with nu=1/2, matern_5_2 has nu=5/2, and
/// gaussian is the nu -> infinity limit.
enum class KernelFamily { matern_5_2, exponential, gaussian };

KernelFamily kernel_family_from_string(std::string_view s);
std::string to_string(KernelFamily family);

/// Product correlation kernel: one positive range per input dimension.
struct KernelSpec {
    KernelFamily family = KernelFamily::matern_5_2;
    Vector ranges;  // gamma_1..gamma_p, all > 0

    KernelSpec() = default;
    KernelSpec(KernelFamily f, Vector r) : family(f), ranges(std::move(r)) { validate(); }
    static KernelSpec isotropic(KernelFamily f, double gamma, int p) {
        return KernelSpec(f, Vector::Constant(p, gamma));
    }

    int dim() const { return int(ranges.size()); }
    void validate() const;
};

/// One-dimensional correlation at distance |xa - xb| = dist >= 0.
double kernel_eval_1d(KernelFamily family, double dist, double range);

/// Product kernel over p coordinates; 1 iff xa == xb, symmetric.
double kernel_eval(const KernelSpec& spec, const Vector& xa, const Vector& xb);

/// n x n correlation matrix K with K(i,j) = kernel_eval(x_i, x_j).
/// Symmetric with unit diagonal; rows are filled concurrently.
Matrix corr_matrix(const KernelSpec& spec, const InputGrid& grid);

/// Serial reference implementation of corr_matrix; entries are computed in the
/// same way, so the two agree bitwise.
Matrix corr_matrix_serial(const KernelSpec& spec, const InputGrid& grid);

/// Correlation vector (K(x_1,xstar), ..., K(x_n,xstar)).
Vector corr_cross(const KernelSpec& spec, const InputGrid& grid, const Vector& xstar);

}  // namespace gppca
