#pragma once

#include "genreg/estimator.hpp"

namespace genreg {

// Standard normal pdf/cdf/quantile used by the closed-form oracles.
double norm_pdf(double x);
double norm_cdf(double x);
double norm_quantile(double p);

// Y = a + b D + c D^2 + U,  D = gamma' Z + V,  U = rho_uv V + e,
// Z ~ N(0, I_p), V ~ N(0, sigma_v^2), e ~ N(0, sigma_e^2), all independent.
// Counterfactual distribution F* = N(mu_star, sigma_star^2) over the
// designated x (default: D itself).
struct CasfDgp {
    int p = 5;
    Eigen::VectorXd gamma;  // empty = (1, 0.5, 0, ..., 0)
    double sigma_v = 1.0;
    double sigma_e = 1.0;
    double a = 1.0;
    double b = 1.0;
    double c = 0.5;
    double rho_uv = 0.5;
    double mu_star = 0.0;
    double sigma_star = 1.0;

    Eigen::VectorXd gamma_or_default() const;
    // a + b mu* + c (mu*^2 + sigma*^2)
    double theta0() const;
};

// Y = (beta X + eps) D,  D = 1[eta <= gamma' Z],  eps = rho eta + e,
// eta ~ N(0,1), e ~ N(0, sigma_e^2), Z ~ N(0, I_p), X = z1.
struct SelectionDgp {
    int p = 5;
    Eigen::VectorXd gamma;  // empty = (1, 0.5, 0, ..., 0)
    double beta = 2.0;
    double rho = 0.5;
    double sigma_e = 1.0;

    Eigen::VectorXd gamma_or_default() const;
    // beta E[Phi(gamma' Z)] = beta / 2 for the centered Gaussian index.
    double theta0() const { return 0.5 * beta; }
};

struct OracleBundle {
    double theta0 = 0.0;
    std::function<double(const Eigen::VectorXd&)> g0;
    std::function<double(const Eigen::VectorXd&, double)> h0;      // (x, v)
    std::function<double(const Eigen::VectorXd&, double)> dh0_dv;
    std::function<double(const Eigen::VectorXd&, double)> r2;      // control function only
    std::function<double(const Eigen::VectorXd&)> alpha1;          // implemented sign
    std::function<double(const Eigen::VectorXd&)> alpha1_flipped;
    // Structural shocks per row, kept so generated data can be re-derived.
    Eigen::VectorXd v_draws;
    Eigen::VectorXd e_draws;

    ReferenceNuisances reference() const;
};

struct SimulatedData {
    Dataset data;
    OracleBundle oracle;
};

SimulatedData generate(const CasfDgp& dgp, int n, std::uint64_t seed);
SimulatedData generate(const SelectionDgp& dgp, int n, std::uint64_t seed);

// RMS of (fit - oracle) over the rows of xv_points (last column is v).
double oracle_nuisance_error(const RieszFit& fit,
                             const std::function<double(const Eigen::VectorXd&, double)>& oracle,
                             const Eigen::MatrixXd& xv_points);

struct ReplicationResult {
    int rep = -1;
    bool ok = false;
    double theta = 0.0;
    double theta_plugin = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::string error;
};

struct MonteCarloSummary {
    double theta0 = 0.0;
    int R = 0;
    int n = 0;
    int failures = 0;
    double bias = 0.0;
    double sd = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;
    double mean_se = 0.0;
    double bias_plugin = 0.0;
    double sd_plugin = 0.0;
    double rmse_plugin = 0.0;
    std::vector<ReplicationResult> reps;

    nlohmann::json to_json() const;
    std::string reps_csv() const;
};

struct MonteCarloConfig {
    int R = 100;
    int n = 1000;
    std::uint64_t seed = 0;
    int jobs = 1;  // <= 0 means hardware concurrency
    EstimateConfig est;  // seed is re-derived per replication
};

MonteCarloSummary monte_carlo(const CasfDgp& dgp, const MonteCarloConfig& cfg);
MonteCarloSummary monte_carlo(const SelectionDgp& dgp, const MonteCarloConfig& cfg);

}  // namespace genreg
