#include "genreg/config.hpp"

#include <fstream>
#include <set>

namespace genreg {

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    for (const auto& [key, value] : j.items())
        if (allowed.count(key) == 0)
            throw ConfigError("config: unknown key '" + key + "' in " + where);
}

double get_number(const nlohmann::json& j, const std::string& key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number()) throw ConfigError("config: '" + key + "' must be a number");
    return j.at(key).get<double>();
}

int get_int(const nlohmann::json& j, const std::string& key, int dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number_integer())
        throw ConfigError("config: '" + key + "' must be an integer");
    return j.at(key).get<int>();
}

bool get_bool(const nlohmann::json& j, const std::string& key, bool dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_boolean()) throw ConfigError("config: '" + key + "' must be a boolean");
    return j.at(key).get<bool>();
}

std::string get_string(const nlohmann::json& j, const std::string& key,
                       const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_string()) throw ConfigError("config: '" + key + "' must be a string");
    return j.at(key).get<std::string>();
}

std::vector<double> get_grid(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) return {};
    if (!j.at(key).is_array()) throw ConfigError("config: '" + key + "' must be an array");
    std::vector<double> g;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) throw ConfigError("config: '" + key + "' entries must be numbers");
        g.push_back(v.get<double>());
    }
    return g;
}

Dictionary parse_dictionary(const nlohmann::json& j, int x_or_z_dim, InputKind kind,
                            const std::string& where) {
    reject_unknown_keys(j, {"family", "degree", "degree_x", "degree_v"}, where);
    const std::string family = get_string(j, "family", "raw_plus_interactions");
    if (kind == InputKind::over_z) {
        if (family != "raw_plus_interactions")
            throw ConfigError("config: " + where + ": z dictionaries support only "
                              "'raw_plus_interactions'");
        return Dictionary::raw_plus_interactions(x_or_z_dim, get_int(j, "degree", 2), kind);
    }
    if (family == "tensor_polynomial")
        return Dictionary::tensor_polynomial(x_or_z_dim, get_int(j, "degree_x", 2),
                                             get_int(j, "degree_v", 2));
    if (family == "partly_linear")
        return Dictionary::partly_linear(x_or_z_dim, get_int(j, "degree_v", 2));
    if (family == "raw_plus_interactions")
        return Dictionary::raw_plus_interactions(x_or_z_dim + 1, get_int(j, "degree", 2),
                                                 kind);
    throw ConfigError("config: " + where + ": unknown dictionary family '" + family + "'");
}

LearnerSpec parse_learner(const nlohmann::json& j, int x_or_z_dim, InputKind kind,
                          const std::string& where) {
    reject_unknown_keys(j, {"kind", "dictionary", "lambda_grid", "cv_folds", "lambda_scale"},
                        where);
    LearnerSpec spec;
    const std::string kind_s = get_string(j, "kind", "lasso");
    if (kind_s == "lasso")
        spec.kind = LearnerKind::lasso_dictionary;
    else if (kind_s == "ridge")
        spec.kind = LearnerKind::ridge_dictionary;
    else
        throw ConfigError("config: " + where + ": learner kind must be lasso or ridge");
    if (j.contains("dictionary"))
        spec.dictionary = parse_dictionary(j.at("dictionary"), x_or_z_dim, kind,
                                           where + ".dictionary");
    else
        spec.dictionary =
            kind == InputKind::over_z
                ? Dictionary::raw_plus_interactions(x_or_z_dim, 2, kind)
                : Dictionary::tensor_polynomial(x_or_z_dim, 2, 2);
    spec.lambda_grid = get_grid(j, "lambda_grid");
    if (spec.lambda_grid.empty()) spec.lambda_grid = default_lambda_grid();
    spec.cv_folds = get_int(j, "cv_folds", 4);
    spec.lambda_scale = get_number(j, "lambda_scale", 1.0);
    return spec;
}

const std::set<std::string> kEstimateKeys = {
    "mode",   "functional", "x_columns", "fstar", "folds",        "depth",
    "seed",   "g",          "h",         "b_dictionary",          "c_dictionary",
    "b_lambda_grid",        "c_lambda_grid",       "q1",          "q2",
    "t_n",    "s_n",        "S",         "force_zero_alpha"};

}  // namespace

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse failure in '" + path + "': " + e.what());
    }
    return j;
}

Mode config_mode(const nlohmann::json& j) {
    const std::string mode = get_string(j, "mode", "");
    if (mode == "control_function") return Mode::control_function;
    if (mode == "selection") return Mode::selection;
    throw ConfigError("config: 'mode' must be control_function or selection");
}

std::vector<std::string> config_x_columns(const nlohmann::json& j) {
    if (!j.contains("x_columns") || !j.at("x_columns").is_array())
        throw ConfigError("config: 'x_columns' must be an array of column labels");
    std::vector<std::string> cols;
    for (const auto& v : j.at("x_columns")) {
        if (!v.is_string()) throw ConfigError("config: 'x_columns' entries must be strings");
        cols.push_back(v.get<std::string>());
    }
    if (cols.empty()) throw ConfigError("config: 'x_columns' must be nonempty");
    return cols;
}

EstimateConfig parse_estimate_config(const nlohmann::json& j, int zdim, int xdim,
                                     const Dataset* for_empirical) {
    reject_unknown_keys(j, kEstimateKeys, "config");
    const Mode mode = config_mode(j);
    EstimateConfig cfg;

    const std::string functional = get_string(j, "functional", "");
    if (functional == "casf") {
        if (mode != Mode::control_function)
            throw ConfigError("config: casf requires control_function mode");
        if (!j.contains("fstar")) throw ConfigError("config: casf requires 'fstar'");
        const nlohmann::json& f = j.at("fstar");
        reject_unknown_keys(f, {"family", "mu", "sigma", "x0"}, "fstar");
        const std::string family = get_string(f, "family", "gaussian");
        CounterfactualSampler sampler = CounterfactualSampler::point_mass(
            Eigen::VectorXd::Zero(std::max(1, xdim)));
        if (family == "gaussian") {
            sampler = CounterfactualSampler::gaussian(
                Eigen::VectorXd::Constant(xdim, get_number(f, "mu", 0.0)),
                Eigen::VectorXd::Constant(xdim, get_number(f, "sigma", 1.0)));
        } else if (family == "point_mass") {
            const std::vector<double> x0 = [&] {
                std::vector<double> v = get_grid(f, "x0");
                if (static_cast<int>(v.size()) != xdim)
                    throw ConfigError("config: fstar.x0 length must match x dimension");
                return v;
            }();
            sampler = CounterfactualSampler::point_mass(
                Eigen::Map<const Eigen::VectorXd>(x0.data(), xdim));
        } else if (family == "empirical") {
            if (for_empirical == nullptr)
                throw ConfigError("config: empirical fstar is not available here");
            std::vector<int> all(static_cast<size_t>(for_empirical->n()));
            for (int i = 0; i < for_empirical->n(); ++i) all[static_cast<size_t>(i)] = i;
            sampler = CounterfactualSampler::empirical(for_empirical->x_matrix(all));
        } else {
            throw ConfigError("config: unknown fstar family '" + family + "'");
        }
        cfg.functional = std::make_shared<CasfFunctional>(std::move(sampler));
    } else if (functional == "ape") {
        if (mode != Mode::selection) throw ConfigError("config: ape requires selection mode");
        if (j.contains("fstar")) throw ConfigError("config: ape does not take 'fstar'");
        cfg.functional = std::make_shared<ApeFunctional>();
    } else {
        throw ConfigError("config: 'functional' must be casf or ape");
    }

    cfg.L = get_int(j, "folds", 5);
    cfg.depth = get_int(j, "depth", 3);
    cfg.seed = static_cast<std::uint64_t>(get_int(j, "seed", 0));
    cfg.g_spec = j.contains("g")
                     ? parse_learner(j.at("g"), zdim, InputKind::over_z, "g")
                     : parse_learner(nlohmann::json::object(), zdim, InputKind::over_z, "g");
    cfg.h_spec = j.contains("h")
                     ? parse_learner(j.at("h"), xdim, InputKind::over_xv, "h")
                     : parse_learner(nlohmann::json::object(), xdim, InputKind::over_xv, "h");
    cfg.b_dict = j.contains("b_dictionary")
                     ? parse_dictionary(j.at("b_dictionary"), xdim, InputKind::over_xv,
                                        "b_dictionary")
                     : Dictionary::tensor_polynomial(xdim, 2, 2);
    cfg.c_dict = j.contains("c_dictionary")
                     ? parse_dictionary(j.at("c_dictionary"), zdim, InputKind::over_z,
                                        "c_dictionary")
                     : Dictionary::raw_plus_interactions(zdim, 2, InputKind::over_z);
    cfg.b_lambda_grid = get_grid(j, "b_lambda_grid");
    cfg.c_lambda_grid = get_grid(j, "c_lambda_grid");
    cfg.q1 = get_int(j, "q1", 1);
    cfg.q2 = get_int(j, "q2", 1);
    cfg.t_n = get_number(j, "t_n", 0.0);
    cfg.s_n = get_number(j, "s_n", 0.0);
    cfg.S = get_int(j, "S", 0);
    cfg.force_zero_alpha = get_bool(j, "force_zero_alpha", false);
    return cfg;
}

namespace {

SimulateSpec parse_sim_section(const nlohmann::json& j) {
    reject_unknown_keys(j, {"dgp", "n", "seed", "p", "gamma", "sigma_v", "sigma_e", "a", "b",
                            "c", "rho_uv", "mu_star", "sigma_star", "beta", "rho"},
                        "dgp section");
    SimulateSpec s;
    s.dgp = get_string(j, "dgp", "casf");
    s.n = get_int(j, "n", 1000);
    s.seed = static_cast<std::uint64_t>(get_int(j, "seed", 0));
    const std::vector<double> gamma = get_grid(j, "gamma");
    if (s.dgp == "casf") {
        s.casf.p = get_int(j, "p", 5);
        if (!gamma.empty())
            s.casf.gamma = Eigen::Map<const Eigen::VectorXd>(
                gamma.data(), static_cast<Eigen::Index>(gamma.size()));
        s.casf.sigma_v = get_number(j, "sigma_v", 1.0);
        s.casf.sigma_e = get_number(j, "sigma_e", 1.0);
        s.casf.a = get_number(j, "a", 1.0);
        s.casf.b = get_number(j, "b", 1.0);
        s.casf.c = get_number(j, "c", 0.5);
        s.casf.rho_uv = get_number(j, "rho_uv", 0.5);
        s.casf.mu_star = get_number(j, "mu_star", 0.0);
        s.casf.sigma_star = get_number(j, "sigma_star", 1.0);
    } else if (s.dgp == "selection") {
        s.selection.p = get_int(j, "p", 5);
        if (!gamma.empty())
            s.selection.gamma = Eigen::Map<const Eigen::VectorXd>(
                gamma.data(), static_cast<Eigen::Index>(gamma.size()));
        s.selection.beta = get_number(j, "beta", 2.0);
        s.selection.rho = get_number(j, "rho", 0.5);
        s.selection.sigma_e = get_number(j, "sigma_e", 1.0);
    } else {
        throw ConfigError("config: 'dgp' must be casf or selection");
    }
    return s;
}

}  // namespace

SimulateSpec parse_simulate_config(const nlohmann::json& j) { return parse_sim_section(j); }

MonteCarloSpec parse_montecarlo_config(const nlohmann::json& j) {
    reject_unknown_keys(j, {"dgp", "replications", "jobs", "seed", "estimate"}, "config");
    if (!j.contains("dgp")) throw ConfigError("config: montecarlo requires a 'dgp' section");
    if (!j.contains("estimate"))
        throw ConfigError("config: montecarlo requires an 'estimate' section");
    MonteCarloSpec spec;
    spec.sim = parse_sim_section(j.at("dgp"));
    spec.mc.R = get_int(j, "replications", 100);
    spec.mc.jobs = get_int(j, "jobs", 0);
    spec.mc.seed = static_cast<std::uint64_t>(get_int(j, "seed", 0));
    spec.mc.n = spec.sim.n;
    const int p = spec.sim.dgp == "casf" ? spec.sim.casf.p : spec.sim.selection.p;
    spec.mc.est = parse_estimate_config(j.at("estimate"), p, 1, nullptr);
    const Mode want = spec.sim.dgp == "casf" ? Mode::control_function : Mode::selection;
    if (spec.mc.est.functional->mode() != want)
        throw ConfigError("config: estimate section's functional does not match the dgp");
    return spec;
}

DiagnoseSpec parse_diagnose_config(const nlohmann::json& j) {
    reject_unknown_keys(j, {"dgp", "taus", "S", "b_dictionary", "c_dictionary"}, "config");
    if (!j.contains("dgp")) throw ConfigError("config: diagnose requires a 'dgp' section");
    DiagnoseSpec spec;
    spec.sim = parse_sim_section(j.at("dgp"));
    if (spec.sim.dgp != "casf")
        throw ConfigError("config: diagnose supports only the casf dgp");
    const std::vector<double> taus = get_grid(j, "taus");
    if (!taus.empty()) spec.taus = taus;
    spec.S = get_int(j, "S", 2000);
    const int p = spec.sim.casf.p;
    spec.b_dict = j.contains("b_dictionary")
                      ? parse_dictionary(j.at("b_dictionary"), 1, InputKind::over_xv,
                                         "b_dictionary")
                      : Dictionary::tensor_polynomial(1, 2, 2);
    spec.c_dict = j.contains("c_dictionary")
                      ? parse_dictionary(j.at("c_dictionary"), p, InputKind::over_z,
                                         "c_dictionary")
                      : Dictionary::raw_plus_interactions(p, 2, InputKind::over_z);
    return spec;
}

}  // namespace genreg
