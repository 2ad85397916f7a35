#include "gppca/experiment.hpp"
#include "gppca/io.hpp"
#include "gppca/predict.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace gppca;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArgError = 2;
constexpr int kExitNumericError = 3;

std::string rep_dir(const std::string& out, int rep) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rep_%03d", rep);
    return (fs::path(out) / buf).string();
}

int cmd_simulate(const std::string& scenario_arg, const std::string& out_dir, int replicates) {
    Scenario sc = load_scenario(scenario_arg);
    if (replicates > 0) sc.replicates = replicates;
    fs::create_directories(out_dir);
    {
        std::ofstream meta(fs::path(out_dir) / "scenario.json");
        meta << scenario_to_json(sc).dump(2) << '\n';
    }
    for (int r = 0; r < sc.replicates; ++r) {
        const Dataset ds = simulate_dataset(sc, r);
        const std::string dir = rep_dir(out_dir, r);
        fs::create_directories(dir);
        write_csv_matrix(ds.Y.values, dir + "/Y.csv");
        write_csv_matrix(ds.Y.grid.points, dir + "/inputs.csv");
        write_csv_matrix(ds.A_true, dir + "/A_true.csv");
        write_csv_matrix(ds.Z_true, dir + "/Z_true.csv");
        write_csv_matrix(ds.mean_true, dir + "/mean_true.csv");
    }
    std::cout << "wrote " << sc.replicates << " replicate(s) of scenario '" << sc.name << "' to "
              << out_dir << "\n";
    return kExitOk;
}

int cmd_fit(const std::string& data_path, const std::string& config_path,
            const std::string& inputs_path, const std::string& out_path) {
    std::ifstream cfg_in(config_path);
    if (!cfg_in) throw std::invalid_argument("fit: cannot open config '" + config_path + "'");
    nlohmann::json cfg_json;
    try {
        cfg_in >> cfg_json;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("fit: config parse error: " + std::string(e.what()));
    }
    const FitConfig cfg = fit_config_from_json(cfg_json);

    const Matrix Y = read_csv_matrix(data_path);
    InputGrid grid;
    std::string inputs = inputs_path;
    if (inputs.empty() && cfg_json.contains("inputs_csv"))
        inputs = cfg_json.at("inputs_csv").get<std::string>();
    if (!inputs.empty()) {
        grid = InputGrid(read_csv_matrix(inputs));
    } else {
        grid = InputGrid::regular(int(Y.cols()));
    }

    const FittedModel model = fit(OutputMatrix(Y, grid), cfg);
    write_model_json(model, out_path);
    std::cout << "fit: d=" << model.d() << " sigma0_sq=" << model.hyper.sigma0_sq
              << " tau=" << model.hyper.taus.transpose()
              << (model.report.converged ? "" : "  [optimizer hit iteration limit]") << "\n"
              << "model written to " << out_path << "\n";
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& inputs_path,
                const std::string& observed_path, const std::string& out_path) {
    const FittedModel model = read_model_json(model_path);
    const InputGrid points(read_csv_matrix(inputs_path));

    if (observed_path.empty()) {
        const auto preds = predict_batch(model, points);
        const int k = model.k();
        Matrix out(points.size(), 2 * k);
        for (int i = 0; i < points.size(); ++i) {
            out.row(i).head(k) = preds[i].mean.transpose();
            out.row(i).tail(k) = preds[i].sd().transpose();
        }
        write_csv_matrix(out, out_path);
        std::cout << "wrote predictive mean and sd for " << points.size() << " input(s) to "
                  << out_path << "\n";
        return kExitOk;
    }

    // First column: zero-based observed row index; column 1+i: observed value
    // at the i-th queried input.
    const Matrix obs = read_csv_matrix(observed_path);
    if (obs.cols() != points.size() + 1)
        throw std::invalid_argument("predict: observed file must have 1 + #inputs columns");
    std::vector<int> rows(obs.rows());
    for (int i = 0; i < obs.rows(); ++i) {
        rows[i] = int(obs(i, 0));
        if (double(rows[i]) != obs(i, 0))
            throw std::invalid_argument("predict: observed row indices must be integers");
    }
    const int k2 = model.k() - int(rows.size());
    if (k2 <= 0) throw std::invalid_argument("predict: no unobserved rows left to predict");
    Matrix out(points.size(), 2 * k2);
    for (int i = 0; i < points.size(); ++i) {
        const Vector y1 = obs.col(i + 1);
        const PredictiveNormal p =
            conditional_predict(model, points.points.row(i).transpose(), rows, y1);
        out.row(i).head(k2) = p.mean.transpose();
        out.row(i).tail(k2) = p.sd().transpose();
    }
    write_csv_matrix(out, out_path);
    std::cout << "wrote conditional predictions (" << k2 << " rows) for " << points.size()
              << " input(s) to " << out_path << "\n";
    return kExitOk;
}

int cmd_benchmark(const std::string& scenario_arg, const std::string& methods_csv, int replicates,
                  std::uint64_t seed, const std::string& out_path, bool serial) {
    Scenario sc = load_scenario(scenario_arg);
    if (replicates > 0) sc.replicates = replicates;
    sc.base_seed = seed;
    std::vector<Method> methods;
    std::stringstream ss(methods_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) methods.push_back(method_from_string(tok));

    const ExperimentReport report = run_experiment(sc, methods, !serial);
    write_report_csv(report, out_path);

    std::cout << "scenario " << sc.name << ", N=" << sc.replicates << "\n";
    for (size_t mi = 0; mi < methods.size(); ++mi) {
        const Method m = methods[mi];
        double ms = 0.0;
        for (const auto& r : report.results[mi]) ms += r.fit_ms;
        std::printf("  %-6s avg_mse=%-12.4g median_angle=%-10.4g total_fit_s=%.1f\n",
                    to_string(m).c_str(), report.avg_mse(m), report.median_angle(m), ms / 1e3);
    }
    if (report.failures > 0) std::cout << "  failures: " << report.failures << "\n";
    std::cout << "report written to " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Latent-factor Gaussian-process PCA: simulation, fitting, prediction and method benchmarks"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "Generate replicate datasets for a scenario");
    std::string sim_scenario, sim_out;
    int sim_reps = 0;
    sim->add_option("--scenario", sim_scenario, "Preset name or scenario JSON path")->required();
    sim->add_option("--out", sim_out, "Output directory")->required();
    sim->add_option("--replicates", sim_reps, "Override replicate count");

    auto* fitc = app.add_subcommand("fit", "Fit a model to a CSV data matrix");
    std::string fit_data, fit_cfg, fit_inputs, fit_out = "model.json";
    fitc->add_option("--data", fit_data, "k x n CSV output matrix")->required();
    fitc->add_option("--config", fit_cfg, "Fit configuration JSON")->required();
    fitc->add_option("--inputs", fit_inputs, "n x p CSV input grid (default: 1..n)");
    fitc->add_option("--out", fit_out, "Model JSON output path");

    auto* pred = app.add_subcommand("predict", "Predict at new inputs from a fitted model");
    std::string pred_model, pred_inputs, pred_obs, pred_out = "predictions.csv";
    pred->add_option("--model", pred_model, "Model JSON from 'fit'")->required();
    pred->add_option("--inputs", pred_inputs, "CSV of query inputs, one per row")->required();
    pred->add_option("--observed", pred_obs,
                     "CSV of observed rows: col 0 = row index, col 1+i = value at input i");
    pred->add_option("--out", pred_out, "Output CSV path");

    auto* bench = app.add_subcommand("benchmark", "Compare estimation methods on a scenario");
    std::string b_scenario, b_methods = "pca,gppca,ly1,ly5", b_out = "report.csv";
    int b_reps = 0;
    std::uint64_t b_seed = 0;
    bool b_serial = false;
    bench->add_option("--scenario", b_scenario, "Preset name or scenario JSON path")->required();
    bench->add_option("--methods", b_methods, "Comma-separated subset of pca,gppca,ly1,ly5");
    bench->add_option("--replicates", b_reps, "Override replicate count");
    bench->add_option("--seed", b_seed, "Base seed for the replicate streams");
    bench->add_option("--out", b_out, "Report CSV path");
    bench->add_flag("--serial", b_serial, "Run replicates serially");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitArgError;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_scenario, sim_out, sim_reps);
        if (fitc->parsed()) return cmd_fit(fit_data, fit_cfg, fit_inputs, fit_out);
        if (pred->parsed()) return cmd_predict(pred_model, pred_inputs, pred_obs, pred_out);
        if (bench->parsed())
            return cmd_benchmark(b_scenario, b_methods, b_reps, b_seed, b_out, b_serial);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumericError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return kExitArgError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericError;
    }
    return kExitOk;
}
