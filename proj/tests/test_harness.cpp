#include "gppca/experiment.hpp"
#include "gppca/io.hpp"
#include "gppca/parallel.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace gppca;

TEST_SUITE("simulation") {

TEST_CASE("replication is bitwise deterministic") {
    const Scenario sc = named_scenario("example2");
    const Dataset a = simulate_dataset(sc, 3);
    const Dataset b = simulate_dataset(sc, 3);
    CHECK(a.Y.values == b.Y.values);
    CHECK(a.A_true == b.A_true);
    CHECK(a.Z_true == b.Z_true);
    CHECK(a.gammas == b.gammas);
    // Different replicates differ.
    CHECK(simulate_dataset(sc, 4).Y.values != a.Y.values);
}

TEST_CASE("zero noise gives Y = A Z exactly") {
    Scenario sc = named_scenario("example1");
    sc.sigma0_sq = 0.0;
    sc.n = 40;
    const Dataset ds = simulate_dataset(sc, 0);
    CHECK(ds.Y.values == ds.mean_true);
    CHECK((ds.mean_true - ds.A_true * ds.Z_true).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise variance matches the scenario within 20 percent") {
    const Scenario sc = named_scenario("example1");  // sigma0^2 = 0.01
    for (int rep = 0; rep < 3; ++rep) {
        const Dataset ds = simulate_dataset(sc, rep);
        const double var = (ds.Y.values - ds.mean_true).squaredNorm() / double(sc.k * sc.n);
        CHECK(var == doctest::Approx(sc.sigma0_sq).epsilon(0.2));
    }
}

TEST_CASE("example2 draws ranges inside [10, 1000]") {
    const Scenario sc = named_scenario("example2");
    const Dataset ds = simulate_dataset(sc, 0);
    for (int l = 0; l < sc.d; ++l) {
        CHECK(ds.gammas[l] >= 10.0);
        CHECK(ds.gammas[l] <= 1000.0);
    }
    // And they genuinely vary across factors.
    CHECK(ds.gammas.maxCoeff() - ds.gammas.minCoeff() > 0.0);
}

TEST_CASE("cosine factors with theta = 0 are constant one") {
    const Vector thetas = Vector::Zero(2);
    const Matrix Z = cosine_factors(thetas, InputGrid::regular(7));
    CHECK((Z.array() == 1.0).all());
}

TEST_CASE("cosine factors stay within [-1, 1] and vary") {
    const Scenario sc = named_scenario("example4");
    const Dataset ds = simulate_dataset(sc, 1);
    CHECK(ds.Z_true.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(ds.Z_true.row(0).maxCoeff() - ds.Z_true.row(0).minCoeff() > 0.0);
    // Unconstrained loading entries in [0, 1].
    CHECK(ds.A_true.minCoeff() >= 0.0);
    CHECK(ds.A_true.maxCoeff() <= 1.0);
}

TEST_CASE("misspecified-kernel presets fit with the matern family and recover the noise") {
    for (const char* name : {"example3_exponential", "example3_gaussian"}) {
        Scenario sc = named_scenario(name);
        CHECK(sc.fit_family == KernelFamily::matern_5_2);  // deliberate misspecification
        CHECK(sc.loading_law == LoadingLaw::iid_uniform_entries);
        sc.n = 150;
        const Dataset ds = simulate_dataset(sc, 0);
        FitConfig cfg;
        cfg.d = sc.d;
        cfg.family = sc.fit_family;
        const FittedModel m = fit(ds.Y, cfg);
        CHECK(m.hyper.sigma0_sq == doctest::Approx(sc.sigma0_sq).epsilon(0.35));
    }
}

TEST_CASE("unknown scenario name is rejected") {
    CHECK_THROWS_AS(named_scenario("example99"), std::invalid_argument);
}

}  // TEST_SUITE

TEST_SUITE("experiment harness") {

TEST_CASE("pca on noiseless rank-d data is exact") {
    Scenario sc = named_scenario("example1");
    sc.sigma0_sq = 0.0;
    sc.n = 60;
    sc.replicates = 5;
    const ExperimentReport rep = run_experiment(sc, {Method::pca});
    CHECK(rep.failures == 0);
    CHECK(rep.median_angle(Method::pca) < 1e-6);
    CHECK(rep.results[0].size() == 5);
}

TEST_CASE("report rows are complete and the parallel path matches the serial one") {
    Scenario sc = named_scenario("example1");
    sc.n = 60;
    sc.replicates = 6;
    const std::vector<Method> methods{Method::pca, Method::gppca, Method::ly1, Method::ly5};
    const ExperimentReport rs = run_experiment(sc, methods, false);
    const ExperimentReport rp = run_experiment(sc, methods, true);
    CHECK(rs.failures == 0);
    for (size_t mi = 0; mi < methods.size(); ++mi) {
        REQUIRE(rs.results[mi].size() == 6);
        for (int r = 0; r < 6; ++r) {
            CHECK(rs.results[mi][r].angle == rp.results[mi][r].angle);
            CHECK(rs.results[mi][r].mse == rp.results[mi][r].mse);
        }
    }
}

TEST_CASE("model-based estimate beats PCA in median angle on example1") {
    Scenario sc = named_scenario("example1");
    sc.replicates = 8;
    const ExperimentReport rep = run_experiment(sc, {Method::gppca, Method::pca});
    CHECK(rep.failures == 0);
    CHECK(rep.median_angle(Method::gppca) < rep.median_angle(Method::pca));
}

TEST_CASE("score report serializes one row per method") {
    ScoreReport r;
    r.rmse = 0.5;
    r.coverage_95 = 0.94;
    r.avg_interval_length = 1.25;
    const std::string row = r.csv_row("example1", "gppca");
    CHECK(row.substr(0, 15) == "example1,gppca,");
    CHECK(ScoreReport::csv_header().rfind("scenario,method,", 0) == 0);
    // Same number of fields in header and row.
    const auto count = [](const std::string& s) {
        return std::count(s.begin(), s.end(), ',');
    };
    CHECK(count(row) == count(ScoreReport::csv_header()));
}

TEST_CASE("method parsing round-trips") {
    for (const auto m : {Method::pca, Method::gppca, Method::ly1, Method::ly5})
        CHECK(method_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(method_from_string("ols"), std::invalid_argument);
}

}  // TEST_SUITE

TEST_SUITE("parallel_for") {

TEST_CASE("covers the index range once") {
    std::vector<int> hits(257, 0);
    par::parallel_for(257, [&](std::int64_t i) { hits[size_t(i)] += 1; });
    for (int h : hits) CHECK(h == 1);
}

TEST_CASE("propagates exceptions") {
    CHECK_THROWS_AS(par::parallel_for(16,
                                      [&](std::int64_t i) {
                                          if (i == 7) throw std::runtime_error("boom");
                                      }),
                    std::runtime_error);
}

}  // TEST_SUITE
