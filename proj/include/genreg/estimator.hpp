#pragma once

#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "genreg/riesz.hpp"

namespace genreg {

struct EstimateConfig {
    std::shared_ptr<MomentFunctional> functional;
    int L = 5;
    int depth = 3;
    LearnerSpec g_spec;
    LearnerSpec h_spec;
    Dictionary b_dict = Dictionary::raw_plus_interactions(2, 2, InputKind::over_xv);
    Dictionary c_dict = Dictionary::raw_plus_interactions(1, 2, InputKind::over_z);
    std::vector<double> b_lambda_grid;  // empty = default grid
    std::vector<double> c_lambda_grid;
    int q1 = 1;  // first-step representer penalty
    int q2 = 1;  // second-step representer penalty
    double t_n = 0.0;  // 0 = sigma_V * n^(-1/5)
    double s_n = 0.0;
    int S = 0;  // 0 = min(10 n, 1e5)
    std::uint64_t seed = 0;
    bool force_zero_alpha = false;  // skip the correction; theta = plug-in
};

struct FoldDiagnostics {
    int fold = -1;
    double g_lambda = 0.0;
    double h_lambda = 0.0;
    double alpha2_lambda = 0.0;
    double alpha1_lambda = 0.0;
    int alpha2_active = 0;
    int alpha1_active = 0;
    double b_condition = 0.0;
    double c_condition = 0.0;
    double theta_tilde = 0.0;
};

struct EstimateReport {
    double theta = 0.0;
    double theta_plugin = 0.0;
    double phi = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    int n = 0;
    int L = 0;
    std::uint64_t seed = 0;
    double elapsed_seconds = 0.0;
    std::vector<FoldDiagnostics> folds;
    // Per-observation pieces for downstream studies; not serialized.
    Eigen::VectorXd m_lin;
    Eigen::VectorXd phi_terms;
    Eigen::VectorXd psi;  // at theta_tilde of the observation's fold

    nlohmann::json to_json(bool with_timing = true) const;
};

// The full debiased pipeline: nested cache, representer fits per fold,
// correction term, closed-form root, and the sandwich variance.
EstimateReport estimate(const Dataset& ds, const EstimateConfig& cfg,
                        const FoldPartition* fixed_partition = nullptr);

// Function-valued nuisances for oracle studies and the orthogonality check.
struct NuisanceFunctions {
    std::function<double(const Eigen::VectorXd&)> g;                // z
    std::function<double(const Eigen::VectorXd&, double)> h;        // (x, v)
    std::function<double(const Eigen::VectorXd&)> alpha1;           // z
    std::function<double(const Eigen::VectorXd&, double)> alpha2;   // (x, v)
};

// psi_i = m(W_i, g, h, theta) + alpha1(z)(d - g(z)) + alpha2(x, v)(y - h(x, v))
// with v from the functional's generated-regressor rule. `draws` is required
// in modes that integrate over counterfactual points.
Eigen::VectorXd psi_at_functions(const Dataset& ds, const MomentFunctional& fn,
                                 const NuisanceFunctions& nf, double theta,
                                 const Eigen::MatrixXd* draws, double s_n);

struct ReferenceNuisances {
    NuisanceFunctions truth;  // g0, h0, alpha1 (implemented sign), alpha2
    std::function<double(const Eigen::VectorXd&)> alpha1_flipped;
    double theta0 = 0.0;
};

struct DiagnosticRow {
    std::string direction;  // "h:<atom>" or "g:<atom>"
    double tau = 0.0;
    double slope_m = 0.0;
    double slope_psi = 0.0;
    double slope_psi_flipped = 0.0;
    double mc_se = 0.0;
    double mc_se_flipped = 0.0;
    bool pass = false;
    bool pass_flipped = false;
};

struct DiagnosticTable {
    std::vector<DiagnosticRow> rows;
    bool all_pass = false;
    bool all_pass_flipped = false;
    std::string sign_verdict;  // implemented | flipped | both | neither

    nlohmann::json to_json() const;
};

// Slope of the corrected moment in every dictionary-atom deviation of g and
// h around the supplied reference nuisances, against the slope of the raw
// moment. Both signs of the first-step weight are evaluated.
DiagnosticTable diagnose_orthogonality(const Dataset& ds, const MomentFunctional& fn,
                                       const ReferenceNuisances& ref,
                                       const Dictionary& bdict, const Dictionary& cdict,
                                       const std::vector<double>& taus, int S,
                                       std::uint64_t seed);

}  // namespace genreg
