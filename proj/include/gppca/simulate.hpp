#pragma once

#include "gppca/core.hpp"
#include "gppca/rng.hpp"
#include "gppca/types.hpp"

#include <cstdint>
#include <string>

namespace gppca {

enum class LoadingLaw { uniform_stiefel, iid_uniform_entries };
enum class FactorLaw { gp, deterministic_cosine };

/// Range policy for the generating kernels: a fixed value shared by all
/// factors, or an independent uniform draw per factor.
struct GammaPolicy {
    bool random = false;
    double fixed = 100.0;
    double lo = 10.0, hi = 1000.0;
};

struct Scenario {
    std::string name;
    int k = 8, d = 4, n = 200;
    KernelFamily family = KernelFamily::matern_5_2;  // generating kernel
    GammaPolicy gamma;
    double sigma_sq = 1.0;    // factor variance (gp law)
    double sigma0_sq = 0.01;  // noise variance
    LoadingLaw loading_law = LoadingLaw::uniform_stiefel;
    FactorLaw factor_law = FactorLaw::gp;
    int replicates = 20;
    std::uint64_t base_seed = 0;

    // How the gppca method fits this scenario (always Matern 5/2, matching
    // the misspecification studies where the generating kernel differs).
    bool fit_shared = true;
    KernelFamily fit_family = KernelFamily::matern_5_2;

    void validate() const;
};

struct Dataset {
    OutputMatrix Y;
    Matrix A_true;     // k x d (orthonormal only under uniform_stiefel)
    Matrix Z_true;     // d x n
    Matrix mean_true;  // A_true * Z_true
    Vector gammas;     // generating ranges actually used, one per factor
};

/// Deterministic function of (scenario, replicate): replicate r draws from an
/// independent stream derived from (base_seed, r).
Dataset simulate_dataset(const Scenario& scenario, int replicate);

/// Deterministic cosine factors cos(0.05 pi theta_l x_i) on a 1-d grid.
Matrix cosine_factors(const Vector& thetas, const InputGrid& grid);

/// Built-in scenario presets: example1, example1_tau4, example2,
/// example3_exponential, example3_gaussian, example4.
Scenario named_scenario(const std::string& name);

}  // namespace gppca
