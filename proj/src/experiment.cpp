#include "gppca/experiment.hpp"

#include "gppca/linalg.hpp"
#include "gppca/parallel.hpp"
#include "gppca/predict.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gppca {

Method method_from_string(const std::string& s) {
    if (s == "pca") return Method::pca;
    if (s == "gppca") return Method::gppca;
    if (s == "ly1") return Method::ly1;
    if (s == "ly5") return Method::ly5;
    throw std::invalid_argument("unknown method '" + s + "' (expected pca, gppca, ly1 or ly5)");
}

std::string to_string(Method m) {
    switch (m) {
        case Method::pca: return "pca";
        case Method::gppca: return "gppca";
        case Method::ly1: return "ly1";
        case Method::ly5: return "ly5";
    }
    return "?";
}

std::vector<double> ExperimentReport::mses(Method m) const {
    std::vector<double> v;
    for (size_t i = 0; i < methods.size(); ++i)
        if (methods[i] == m)
            for (const auto& r : results[i])
                if (r.ok) v.push_back(r.mse);
    return v;
}

std::vector<double> ExperimentReport::angles(Method m) const {
    std::vector<double> v;
    for (size_t i = 0; i < methods.size(); ++i)
        if (methods[i] == m)
            for (const auto& r : results[i])
                if (r.ok) v.push_back(r.angle);
    return v;
}

namespace {
double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}
}  // namespace

double ExperimentReport::avg_mse(Method m) const {
    const auto v = mses(m);
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double ExperimentReport::median_angle(Method m) const { return median(angles(m)); }

ExperimentReport run_experiment(const Scenario& scenario, const std::vector<Method>& methods,
                                bool parallel) {
    scenario.validate();
    if (methods.empty()) throw std::invalid_argument("run_experiment: no methods requested");

    ExperimentReport report;
    report.scenario = scenario;
    report.methods = methods;
    report.results.assign(methods.size(), std::vector<MethodResult>(scenario.replicates));

    par::parallel_for(
        scenario.replicates,
        [&](std::int64_t rep) {
            const Dataset ds = simulate_dataset(scenario, int(rep));
            const Matrix truth_basis = orthonormalize(ds.A_true);
            for (size_t mi = 0; mi < methods.size(); ++mi) {
                MethodResult& res = report.results[mi][rep];
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    Matrix Ahat;
                    Matrix mean_est;
                    switch (methods[mi]) {
                        case Method::pca: {
                            Ahat = pca_loadings(ds.Y.values, scenario.d).loadings;
                            mean_est = Ahat * (Ahat.transpose() * ds.Y.values);
                            break;
                        }
                        case Method::ly1:
                        case Method::ly5: {
                            const int q0 = methods[mi] == Method::ly1 ? 1 : 5;
                            Ahat = ly_loadings(ds.Y.values, scenario.d, q0).loadings;
                            mean_est = Ahat * (Ahat.transpose() * ds.Y.values);
                            break;
                        }
                        case Method::gppca: {
                            FitConfig cfg;
                            cfg.d = scenario.d;
                            cfg.family = scenario.fit_family;
                            cfg.shared_covariance = scenario.fit_shared;
                            cfg.optim.seed = scenario.base_seed ^ 0x5bd1e995u;
                            const FittedModel model = fit(ds.Y, cfg);
                            Ahat = model.loadings;
                            mean_est = field_posterior(model).mean;
                            break;
                        }
                    }
                    res.angle = largest_principal_angle(truth_basis, Ahat);
                    res.mse = (mean_est - ds.mean_true).squaredNorm() / double(ds.mean_true.size());
                    res.ok = true;
                } catch (const std::exception& e) {
                    res.ok = false;
                    res.error = e.what();
                }
                res.fit_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
            }
        },
        parallel);

    for (const auto& per_method : report.results)
        for (const auto& r : per_method)
            if (!r.ok) ++report.failures;
    return report;
}

void write_report_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_report_csv: cannot open '" + path + "'");
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "scenario,method,replicate,angle,mse,ok\n";
    for (size_t mi = 0; mi < report.methods.size(); ++mi) {
        const std::string name = to_string(report.methods[mi]);
        for (size_t r = 0; r < report.results[mi].size(); ++r) {
            const MethodResult& res = report.results[mi][r];
            out << report.scenario.name << ',' << name << ',' << r << ',' << fmt(res.angle) << ','
                << fmt(res.mse) << ',' << (res.ok ? 1 : 0) << '\n';
        }
    }
    for (size_t mi = 0; mi < report.methods.size(); ++mi) {
        const Method m = report.methods[mi];
        out << report.scenario.name << ',' << to_string(m) << ",summary,"
            << fmt(report.median_angle(m)) << ',' << fmt(report.avg_mse(m)) << ",1\n";
    }
    if (!out) throw std::runtime_error("write_report_csv: write failed for '" + path + "'");
}

}  // namespace gppca
