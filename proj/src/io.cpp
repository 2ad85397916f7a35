#include "gppca/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace gppca {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& tok, double& out) {
    const std::string t = trim(tok);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_csv_matrix: cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    bool first_content = true;
    size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto toks = split_csv(t);
        std::vector<double> row(toks.size());
        bool all_ok = true;
        for (size_t j = 0; j < toks.size(); ++j)
            if (!parse_double(toks[j], row[j])) {
                all_ok = false;
                if (!first_content)
                    throw std::invalid_argument("read_csv_matrix: '" + path + "' line " +
                                                std::to_string(lineno) + ": cannot parse field " +
                                                std::to_string(j + 1));
                break;
            }
        if (first_content && !all_ok) {
            first_content = false;  // header line
            continue;
        }
        first_content = false;
        for (size_t j = 0; j < row.size(); ++j)
            if (!std::isfinite(row[j]))
                throw std::invalid_argument("read_csv_matrix: '" + path + "' line " +
                                            std::to_string(lineno) + ": non-finite entry");
        if (rows.empty()) {
            width = row.size();
        } else if (row.size() != width) {
            throw std::invalid_argument("read_csv_matrix: '" + path + "' line " +
                                        std::to_string(lineno) + ": expected " +
                                        std::to_string(width) + " fields, got " +
                                        std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw std::invalid_argument("read_csv_matrix: '" + path + "' contains no data rows");
    Matrix m(rows.size(), width);
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < width; ++j) m(i, j) = rows[i][j];
    return m;
}

void write_csv_matrix(const Matrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv_matrix: cannot open '" + path + "'");
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << buf << (j + 1 < m.cols() ? "," : "");
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_csv_matrix: write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty())
        throw std::invalid_argument(std::string("model json: ") + what + " must be a nonempty array");
    const size_t rows = j.size();
    const size_t cols = j[0].size();
    Matrix m(rows, cols);
    for (size_t i = 0; i < rows; ++i) {
        if (j[i].size() != cols)
            throw std::invalid_argument(std::string("model json: ragged rows in ") + what);
        for (size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

Vector vector_from_json(const json& j) {
    Vector v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json mean_config_to_json(const MeanConfig& mc) {
    return json{{"intercept", mc.intercept},
                {"linear_input", mc.linear_input},
                {"covariate_columns", mc.covariate_columns}};
}

MeanConfig mean_config_from_json(const json& j) {
    MeanConfig mc;
    mc.intercept = j.value("intercept", false);
    mc.linear_input = j.value("linear_input", false);
    mc.covariate_columns = j.value("covariate_columns", std::vector<int>{});
    return mc;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("json parse error in '" + path + "': " + e.what());
    }
    return j;
}

}  // namespace

json scenario_to_json(const Scenario& sc) {
    return json{{"name", sc.name},
                {"k", sc.k},
                {"d", sc.d},
                {"n", sc.n},
                {"kernel", to_string(sc.family)},
                {"gamma",
                 {{"random", sc.gamma.random},
                  {"fixed", sc.gamma.fixed},
                  {"lo", sc.gamma.lo},
                  {"hi", sc.gamma.hi}}},
                {"sigma_sq", sc.sigma_sq},
                {"sigma0_sq", sc.sigma0_sq},
                {"loading_law",
                 sc.loading_law == LoadingLaw::uniform_stiefel ? "uniform_stiefel"
                                                               : "iid_uniform_entries"},
                {"factor_law", sc.factor_law == FactorLaw::gp ? "gp" : "deterministic_cosine"},
                {"replicates", sc.replicates},
                {"base_seed", sc.base_seed},
                {"fit_shared", sc.fit_shared},
                {"fit_kernel", to_string(sc.fit_family)}};
}

Scenario scenario_from_json(const json& j) {
    Scenario sc;
    sc.name = j.value("name", "custom");
    sc.k = j.value("k", sc.k);
    sc.d = j.value("d", sc.d);
    sc.n = j.value("n", sc.n);
    sc.family = kernel_family_from_string(j.value("kernel", std::string("matern_5_2")));
    if (j.contains("gamma")) {
        const auto& g = j.at("gamma");
        sc.gamma.random = g.value("random", false);
        sc.gamma.fixed = g.value("fixed", 100.0);
        sc.gamma.lo = g.value("lo", 10.0);
        sc.gamma.hi = g.value("hi", 1000.0);
    }
    sc.sigma_sq = j.value("sigma_sq", sc.sigma_sq);
    sc.sigma0_sq = j.value("sigma0_sq", sc.sigma0_sq);
    const std::string ll = j.value("loading_law", std::string("uniform_stiefel"));
    if (ll == "uniform_stiefel")
        sc.loading_law = LoadingLaw::uniform_stiefel;
    else if (ll == "iid_uniform_entries")
        sc.loading_law = LoadingLaw::iid_uniform_entries;
    else
        throw std::invalid_argument("scenario json: unknown loading_law '" + ll + "'");
    const std::string fl = j.value("factor_law", std::string("gp"));
    if (fl == "gp")
        sc.factor_law = FactorLaw::gp;
    else if (fl == "deterministic_cosine")
        sc.factor_law = FactorLaw::deterministic_cosine;
    else
        throw std::invalid_argument("scenario json: unknown factor_law '" + fl + "'");
    sc.replicates = j.value("replicates", sc.replicates);
    sc.base_seed = j.value("base_seed", sc.base_seed);
    sc.fit_shared = j.value("fit_shared", sc.fit_shared);
    sc.fit_family = kernel_family_from_string(j.value("fit_kernel", std::string("matern_5_2")));
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& name_or_path) {
    if (name_or_path.size() > 5 &&
        name_or_path.compare(name_or_path.size() - 5, 5, ".json") == 0)
        return scenario_from_json(read_json_file(name_or_path));
    return named_scenario(name_or_path);
}

json fit_config_to_json(const FitConfig& cfg) {
    json j{{"d", cfg.d},
           {"kernel", to_string(cfg.family)},
           {"shared_covariance", cfg.shared_covariance},
           {"mean", mean_config_to_json(cfg.mean)},
           {"optim",
            {{"max_iters", cfg.optim.max_iters},
             {"rel_tol", cfg.optim.rel_tol},
             {"fd_step", cfg.optim.fd_step},
             {"stiefel_starts", cfg.optim.stiefel_starts},
             {"seed", cfg.optim.seed}}}};
    if (cfg.fixed_noise) j["fixed_noise"] = *cfg.fixed_noise;
    return j;
}

FitConfig fit_config_from_json(const json& j) {
    FitConfig cfg;
    cfg.d = j.at("d").get<int>();
    cfg.family = kernel_family_from_string(j.value("kernel", std::string("matern_5_2")));
    cfg.shared_covariance = j.value("shared_covariance", true);
    if (j.contains("fixed_noise") && !j.at("fixed_noise").is_null())
        cfg.fixed_noise = j.at("fixed_noise").get<double>();
    if (j.contains("mean")) cfg.mean = mean_config_from_json(j.at("mean"));
    if (j.contains("optim")) {
        const auto& o = j.at("optim");
        cfg.optim.max_iters = o.value("max_iters", cfg.optim.max_iters);
        cfg.optim.rel_tol = o.value("rel_tol", cfg.optim.rel_tol);
        cfg.optim.fd_step = o.value("fd_step", cfg.optim.fd_step);
        cfg.optim.stiefel_starts = o.value("stiefel_starts", cfg.optim.stiefel_starts);
        cfg.optim.seed = o.value("seed", cfg.optim.seed);
    }
    return cfg;
}

void write_model_json(const FittedModel& model, const std::string& path) {
    json j;
    j["kind"] = "gppca_model";
    j["version"] = 1;
    j["kernel"] = to_string(model.hyper.kernel_specs.at(0).family);
    j["shared_covariance"] = model.hyper.shared_covariance;
    if (model.hyper.fixed_noise) j["fixed_noise"] = *model.hyper.fixed_noise;
    j["sigma0_sq"] = model.hyper.sigma0_sq;
    j["taus"] = vector_to_json(model.hyper.taus);
    json gammas = json::array();
    for (const auto& spec : model.hyper.kernel_specs) gammas.push_back(vector_to_json(spec.ranges));
    j["gammas"] = std::move(gammas);
    j["loadings"] = matrix_to_json(model.loadings);
    j["grid"] = matrix_to_json(model.grid.points);
    j["data"] = matrix_to_json(model.data);
    if (model.mean) j["mean"] = mean_config_to_json(model.mean->design.basis.config);
    j["report"] = {{"converged", model.report.converged},
                   {"iterations", model.report.iterations},
                   {"likelihood_evals", model.report.likelihood_evals},
                   {"objective", model.report.objective}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_model_json: cannot open '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write_model_json: write failed for '" + path + "'");
}

FittedModel read_model_json(const std::string& path) {
    const json j = read_json_file(path);
    if (j.value("kind", std::string()) != "gppca_model")
        throw std::invalid_argument("read_model_json: '" + path + "' is not a gppca model file");

    HyperParams hyper;
    hyper.sigma0_sq = j.at("sigma0_sq").get<double>();
    hyper.taus = vector_from_json(j.at("taus"));
    const KernelFamily family = kernel_family_from_string(j.at("kernel").get<std::string>());
    for (const auto& g : j.at("gammas")) hyper.kernel_specs.emplace_back(family, vector_from_json(g));
    hyper.shared_covariance = j.value("shared_covariance", true);
    if (j.contains("fixed_noise") && !j.at("fixed_noise").is_null())
        hyper.fixed_noise = j.at("fixed_noise").get<double>();

    FitReport report;
    if (j.contains("report")) {
        const auto& r = j.at("report");
        report.converged = r.value("converged", false);
        report.iterations = r.value("iterations", 0);
        report.likelihood_evals = r.value("likelihood_evals", 0);
        report.objective = r.value("objective", 0.0);
    }

    MeanConfig mean;
    if (j.contains("mean")) mean = mean_config_from_json(j.at("mean"));

    return assemble_fitted_model(matrix_from_json(j.at("loadings"), "loadings"), std::move(hyper),
                                 InputGrid(matrix_from_json(j.at("grid"), "grid")),
                                 matrix_from_json(j.at("data"), "data"), mean, report);
}

}  // namespace gppca
