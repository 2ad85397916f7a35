// Compares the OpenMP kernels against their serial reference paths and
// verifies both produce identical results.

#include "gppca/core.hpp"
#include "gppca/experiment.hpp"
#include "gppca/parallel.hpp"
#include "gppca/rng.hpp"

#include <chrono>
#include <cstdio>
#include <functional>

using namespace gppca;

namespace {

double time_ms(const std::function<void()>& fn, int repeats = 3) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        if (ms < best) best = ms;
    }
    return best;
}

void row(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-28s %10.1f ms %10.1f ms   x%.2f   %s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("threads available: %d\n", par::max_threads());
    std::printf("%-28s %13s %13s %7s\n", "kernel", "serial", "openmp", "speedup");

    {
        Rng rng(1);
        const int n = 1500;
        Matrix pts = rng.normal_matrix(n, 2);
        InputGrid grid(pts);
        KernelSpec spec = KernelSpec::isotropic(KernelFamily::matern_5_2, 1.5, 2);
        Matrix Ks, Kp;
        const double ts = time_ms([&] { Ks = corr_matrix_serial(spec, grid); });
        const double tp = time_ms([&] { Kp = corr_matrix(spec, grid); });
        row("corr_matrix n=1500 p=2", ts, tp, Ks == Kp);
    }

    {
        // Per-factor likelihood transforms, d independent n x n factorizations.
        Rng rng(2);
        const int n = 400, k = 16, d = 8;
        InputGrid grid = InputGrid::regular(n);
        Matrix Y = rng.normal_matrix(k, n);
        std::vector<Matrix> K(d);
        for (int l = 0; l < d; ++l)
            K[l] = corr_matrix(KernelSpec::isotropic(KernelFamily::matern_5_2, 30.0 + 10.0 * l, 1),
                               grid);
        std::vector<FactorTransform> ts_out(d), tp_out(d);
        const double ts = time_ms([&] {
            for (int l = 0; l < d; ++l) ts_out[l] = factor_transform(Y, K[l], 4.0, nullptr);
        });
        const double tp = time_ms([&] {
            par::parallel_for(d, [&](std::int64_t l) {
                tp_out[l] = factor_transform(Y, K[l], 4.0, nullptr);
            });
        });
        bool same = true;
        for (int l = 0; l < d; ++l) same = same && (ts_out[l].G == tp_out[l].G);
        row("factor_transform d=8 n=400", ts, tp, same);
    }

    {
        // Replicate loop of the method-comparison harness.
        Scenario sc = named_scenario("example1");
        sc.n = 100;
        sc.replicates = 8;
        const std::vector<Method> methods{Method::pca, Method::gppca};
        ExperimentReport rs, rp;
        const double ts = time_ms([&] { rs = run_experiment(sc, methods, false); }, 1);
        const double tp = time_ms([&] { rp = run_experiment(sc, methods, true); }, 1);
        bool same = rs.failures == rp.failures;
        for (size_t mi = 0; same && mi < methods.size(); ++mi)
            for (int r = 0; r < sc.replicates; ++r)
                same = same && rs.results[mi][r].angle == rp.results[mi][r].angle &&
                       rs.results[mi][r].mse == rp.results[mi][r].mse;
        row("replicates N=8 (example1)", ts, tp, same);
    }

    return 0;
}
