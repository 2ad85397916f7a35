#pragma once

#include "gppca/types.hpp"

#include <cstdint>
#include <random>

namespace gppca {

/// Deterministic random source. mt19937_64 is specified bit-exactly by the
/// standard and the uniform/normal transforms below are pinned here, so
/// streams reproduce across platforms and compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(scramble(seed)) {}

    /// Independent stream for one replicate, derived from (base_seed, replicate)
    /// so any subset of replicates reproduces in isolation.
    static Rng for_replicate(std::uint64_t base_seed, std::uint64_t replicate) {
        return Rng(scramble(base_seed) ^ scramble(replicate * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (explicit transform, no library
    /// distribution objects).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Matrix normal_matrix(int rows, int cols) {
        Matrix m(rows, cols);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    Vector normal_vector(int n) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    std::uint64_t raw() { return gen_(); }

private:
    static std::uint64_t scramble(std::uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Haar-uniform k x d matrix with orthonormal columns (QR of a Gaussian
/// matrix with the R-diagonal sign fix).
Matrix sample_uniform_stiefel(int k, int d, Rng& rng);

}  // namespace gppca
