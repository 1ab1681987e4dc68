#pragma once

#include <nlohmann/json.hpp>

#include "genreg/simulation.hpp"

namespace genreg {

// Strict JSON config parsing: unknown keys are rejected at every level.
nlohmann::json load_json_file(const std::string& path);

Mode config_mode(const nlohmann::json& j);
std::vector<std::string> config_x_columns(const nlohmann::json& j);

// Builds the estimator configuration; dictionary dimensions come from the
// data. `for_empirical` supplies the resampling pool when fstar.family is
// "empirical" (null forbids that family).
EstimateConfig parse_estimate_config(const nlohmann::json& j, int zdim, int xdim,
                                     const Dataset* for_empirical);

struct SimulateSpec {
    std::string dgp;  // "casf" | "selection"
    int n = 1000;
    std::uint64_t seed = 0;
    CasfDgp casf;
    SelectionDgp selection;
};

SimulateSpec parse_simulate_config(const nlohmann::json& j);

struct MonteCarloSpec {
    SimulateSpec sim;
    MonteCarloConfig mc;  // est filled from the config's "estimate" section
};

MonteCarloSpec parse_montecarlo_config(const nlohmann::json& j);

struct DiagnoseSpec {
    SimulateSpec sim;  // casf only (needs closed-form reference weights)
    std::vector<double> taus{0.05, 0.1};
    int S = 2000;
    Dictionary b_dict = Dictionary::raw_plus_interactions(2, 2, InputKind::over_xv);
    Dictionary c_dict = Dictionary::raw_plus_interactions(1, 2, InputKind::over_z);
};

DiagnoseSpec parse_diagnose_config(const nlohmann::json& j);

}  // namespace genreg
