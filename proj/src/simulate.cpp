#include "gppca/simulate.hpp"

#include "gppca/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace gppca {

void Scenario::validate() const {
    if (k < 1 || d < 1 || d > k) throw std::invalid_argument("Scenario: need 1 <= d <= k");
    if (n < 2) throw std::invalid_argument("Scenario: need n >= 2");
    if (replicates < 1) throw std::invalid_argument("Scenario: need at least one replicate");
    if (!(sigma_sq >= 0.0) || !(sigma0_sq >= 0.0))
        throw std::invalid_argument("Scenario: variances must be nonnegative");
    if (gamma.random && !(gamma.lo > 0.0 && gamma.hi >= gamma.lo))
        throw std::invalid_argument("Scenario: invalid gamma draw interval");
    if (!gamma.random && !(gamma.fixed > 0.0))
        throw std::invalid_argument("Scenario: fixed gamma must be positive");
}

Matrix cosine_factors(const Vector& thetas, const InputGrid& grid) {
    if (grid.dim() != 1)
        throw std::invalid_argument("cosine_factors: defined for one-dimensional grids");
    const int d = int(thetas.size());
    const int n = grid.size();
    Matrix Z(d, n);
    for (int l = 0; l < d; ++l)
        for (int i = 0; i < n; ++i)
            Z(l, i) = std::cos(0.05 * 3.14159265358979323846 * thetas[l] * grid.points(i, 0));
    return Z;
}

Dataset simulate_dataset(const Scenario& sc, int replicate) {
    sc.validate();
    if (replicate < 0) throw std::invalid_argument("simulate_dataset: replicate must be >= 0");
    Rng rng = Rng::for_replicate(sc.base_seed, std::uint64_t(replicate));
    const InputGrid grid = InputGrid::regular(sc.n);

    Dataset ds;
    switch (sc.loading_law) {
        case LoadingLaw::uniform_stiefel:
            ds.A_true = sample_uniform_stiefel(sc.k, sc.d, rng);
            break;
        case LoadingLaw::iid_uniform_entries: {
            ds.A_true.resize(sc.k, sc.d);
            for (int j = 0; j < sc.d; ++j)
                for (int i = 0; i < sc.k; ++i) ds.A_true(i, j) = rng.uniform();
            break;
        }
    }

    ds.gammas.resize(sc.d);
    for (int l = 0; l < sc.d; ++l)
        ds.gammas[l] = sc.gamma.random ? rng.uniform(sc.gamma.lo, sc.gamma.hi) : sc.gamma.fixed;

    if (sc.factor_law == FactorLaw::gp) {
        ds.Z_true.resize(sc.d, sc.n);
        const double scale = std::sqrt(sc.sigma_sq);
        for (int l = 0; l < sc.d; ++l) {
            const KernelSpec spec = KernelSpec::isotropic(sc.family, ds.gammas[l], 1);
            const Matrix K = corr_matrix(spec, grid);
            const Matrix L = llt_jittered(K).matrixL();
            ds.Z_true.row(l) = (scale * (L * rng.normal_vector(sc.n))).transpose();
        }
    } else {
        Vector thetas(sc.d);
        for (int l = 0; l < sc.d; ++l) thetas[l] = rng.uniform();
        ds.Z_true = cosine_factors(thetas, grid);
    }

    ds.mean_true = ds.A_true * ds.Z_true;
    Matrix Y = ds.mean_true;
    if (sc.sigma0_sq > 0.0) Y += std::sqrt(sc.sigma0_sq) * rng.normal_matrix(sc.k, sc.n);
    ds.Y = OutputMatrix(std::move(Y), grid);
    return ds;
}

Scenario named_scenario(const std::string& name) {
    Scenario sc;
    sc.name = name;
    if (name == "example1") {
        sc.k = 8; sc.d = 4; sc.n = 200;
        sc.gamma.fixed = 100.0;
        sc.sigma_sq = 1.0;
        sc.sigma0_sq = 0.01;  // tau = 100
        sc.fit_shared = true;
    } else if (name == "example1_tau4") {
        sc.k = 8; sc.d = 4; sc.n = 200;
        sc.gamma.fixed = 100.0;
        sc.sigma_sq = 1.0;
        sc.sigma0_sq = 0.25;  // tau = 4
        sc.fit_shared = true;
    } else if (name == "example2") {
        sc.k = 8; sc.d = 4; sc.n = 200;
        sc.gamma.random = true;
        sc.gamma.lo = 10.0; sc.gamma.hi = 1000.0;
        sc.sigma_sq = 1.0;
        sc.sigma0_sq = 0.25;
        sc.fit_shared = false;  // ranges differ per factor
    } else if (name == "example3_exponential") {
        sc.k = 20; sc.d = 4; sc.n = 200;
        sc.family = KernelFamily::exponential;
        sc.gamma.fixed = 100.0;
        sc.sigma_sq = 1.0;
        sc.sigma0_sq = 0.25;  // tau = 4
        sc.loading_law = LoadingLaw::iid_uniform_entries;
        sc.fit_shared = true;
    } else if (name == "example3_gaussian") {
        sc.k = 20; sc.d = 4; sc.n = 200;
        sc.family = KernelFamily::gaussian;
        sc.gamma.fixed = 100.0;
        sc.sigma_sq = 1.0;
        sc.sigma0_sq = 4.0;  // tau = 1/4
        sc.loading_law = LoadingLaw::iid_uniform_entries;
        sc.fit_shared = true;
    } else if (name == "example4") {
        sc.k = 20; sc.d = 4; sc.n = 100;
        sc.sigma0_sq = 0.25;
        sc.loading_law = LoadingLaw::iid_uniform_entries;
        sc.factor_law = FactorLaw::deterministic_cosine;
        sc.fit_shared = true;
    } else {
        throw std::invalid_argument("named_scenario: unknown scenario '" + name + "'");
    }
    return sc;
}

}  // namespace gppca
