#include "genreg/simulation.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

namespace genreg {

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw NumericalError("norm_quantile: p must be in (0, 1)");
    // Acklam's rational approximation, polished with one Halley step.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = norm_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

namespace {

Eigen::VectorXd sparse_gamma(int p) {
    if (p < 2) throw ConfigError("dgp: p must be >= 2");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    g[0] = 1.0;
    g[1] = 0.5;
    return g;
}

double dens(double x, double sd) { return norm_pdf(x / sd) / sd; }

}  // namespace

Eigen::VectorXd CasfDgp::gamma_or_default() const {
    if (gamma.size() == 0) return sparse_gamma(p);
    if (gamma.size() != p) throw ConfigError("dgp: gamma/p mismatch");
    return gamma;
}

double CasfDgp::theta0() const {
    return a + b * mu_star + c * (mu_star * mu_star + sigma_star * sigma_star);
}

Eigen::VectorXd SelectionDgp::gamma_or_default() const {
    if (gamma.size() == 0) return sparse_gamma(p);
    if (gamma.size() != p) throw ConfigError("dgp: gamma/p mismatch");
    return gamma;
}

ReferenceNuisances OracleBundle::reference() const {
    ReferenceNuisances ref;
    ref.truth.g = g0;
    ref.truth.h = h0;
    ref.truth.alpha1 = alpha1;
    ref.truth.alpha2 = r2;
    ref.alpha1_flipped = alpha1_flipped;
    ref.theta0 = theta0;
    return ref;
}

SimulatedData generate(const CasfDgp& dgp, int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("generate: n must be >= 1");
    const Eigen::VectorXd gamma = dgp.gamma_or_default();
    if (dgp.sigma_v <= 0.0 || dgp.sigma_e <= 0.0 || dgp.sigma_star <= 0.0)
        throw ConfigError("generate: scales must be > 0");

    std::mt19937_64 rng(stream_seed(seed, streams::dgp));
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<Observation> obs(static_cast<size_t>(n));
    Eigen::VectorXd vs(n), es(n);
    for (int i = 0; i < n; ++i) {
        Observation& o = obs[static_cast<size_t>(i)];
        o.z.resize(dgp.p);
        for (int k = 0; k < dgp.p; ++k) o.z[k] = nd(rng);
        vs[i] = dgp.sigma_v * nd(rng);
        es[i] = dgp.sigma_e * nd(rng);
        o.d = gamma.dot(o.z) + vs[i];
        o.y = dgp.a + dgp.b * o.d + dgp.c * o.d * o.d + dgp.rho_uv * vs[i] + es[i];
    }

    const double sigma_g = gamma.norm();
    const double a = dgp.a, b = dgp.b, c = dgp.c, rho = dgp.rho_uv;
    const double mu_s = dgp.mu_star, sd_s = dgp.sigma_star;
    const double sd_mix = std::sqrt(sd_s * sd_s + dgp.sigma_v * dgp.sigma_v);

    OracleBundle oracle;
    oracle.theta0 = dgp.theta0();
    oracle.v_draws = vs;
    oracle.e_draws = es;
    oracle.g0 = [gamma](const Eigen::VectorXd& z) { return gamma.dot(z); };
    oracle.h0 = [a, b, c, rho](const Eigen::VectorXd& x, double v) {
        return a + b * x[0] + c * x[0] * x[0] + rho * v;
    };
    oracle.dh0_dv = [rho](const Eigen::VectorXd&, double) { return rho; };
    oracle.r2 = [mu_s, sd_s, sigma_g](const Eigen::VectorXd& x, double v) {
        return dens(x[0] - mu_s, sd_s) / dens(x[0] - v, sigma_g);
    };
    // E[r2(X, V) | Z] has the closed form below under the Gaussian design,
    // which gives the conditional mean of the full derivative coefficient.
    oracle.alpha1 = [rho, mu_s, sd_mix, sigma_g, gamma](const Eigen::VectorXd& z) {
        const double g = gamma.dot(z);
        return -rho + rho * dens(g - mu_s, sd_mix) / dens(g, sigma_g);
    };
    oracle.alpha1_flipped = [rho, mu_s, sd_mix, sigma_g, gamma](const Eigen::VectorXd& z) {
        const double g = gamma.dot(z);
        return -rho - rho * dens(g - mu_s, sd_mix) / dens(g, sigma_g);
    };
    return SimulatedData{Dataset(std::move(obs), {0}, Mode::control_function),
                         std::move(oracle)};
}

SimulatedData generate(const SelectionDgp& dgp, int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("generate: n must be >= 1");
    const Eigen::VectorXd gamma = dgp.gamma_or_default();
    if (dgp.sigma_e <= 0.0) throw ConfigError("generate: scales must be > 0");

    std::mt19937_64 rng(stream_seed(seed, streams::dgp));
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<Observation> obs(static_cast<size_t>(n));
    Eigen::VectorXd etas(n), es(n);
    long selected = 0;
    for (int i = 0; i < n; ++i) {
        Observation& o = obs[static_cast<size_t>(i)];
        o.z.resize(dgp.p);
        for (int k = 0; k < dgp.p; ++k) o.z[k] = nd(rng);
        etas[i] = nd(rng);
        es[i] = dgp.sigma_e * nd(rng);
        o.d = etas[i] <= gamma.dot(o.z) ? 1.0 : 0.0;
        const double ystar = dgp.beta * o.z[0] + dgp.rho * etas[i] + es[i];
        o.y = ystar * o.d;
        selected += o.d > 0.5 ? 1 : 0;
    }
    const double rate = static_cast<double>(selected) / static_cast<double>(n);
    if (rate < 0.05 || rate > 0.95)
        throw DataError("generate: degenerate selection rate " + std::to_string(rate));

    const double beta = dgp.beta, rho = dgp.rho;
    OracleBundle oracle;
    oracle.theta0 = dgp.theta0();
    oracle.v_draws = etas;
    oracle.e_draws = es;
    oracle.g0 = [gamma](const Eigen::VectorXd& z) { return norm_cdf(gamma.dot(z)); };
    oracle.h0 = [beta, rho](const Eigen::VectorXd& x, double v) {
        return beta * x[0] * v - rho * norm_pdf(norm_quantile(v));
    };
    oracle.dh0_dv = [beta, rho](const Eigen::VectorXd& x, double v) {
        return beta * x[0] + rho * norm_quantile(v);
    };
    return SimulatedData{Dataset(std::move(obs), {1}, Mode::selection), std::move(oracle)};
}

double oracle_nuisance_error(const RieszFit& fit,
                             const std::function<double(const Eigen::VectorXd&, double)>& oracle,
                             const Eigen::MatrixXd& xv_points) {
    if (!oracle) throw ConfigError("oracle_nuisance_error: no oracle");
    if (xv_points.rows() < 1 || xv_points.cols() < 2)
        throw DataError("oracle_nuisance_error: empty evaluation sample");
    double acc = 0.0, comp = 0.0;
    for (Eigen::Index i = 0; i < xv_points.rows(); ++i) {
        const Eigen::VectorXd p = xv_points.row(i).transpose();
        const Eigen::VectorXd x = p.head(p.size() - 1);
        const double r = fit.evaluate(p) - oracle(x, p[p.size() - 1]);
        const double term = r * r - comp;
        const double next = acc + term;
        comp = (next - acc) - term;
        acc = next;
    }
    return std::sqrt(acc / static_cast<double>(xv_points.rows()));
}

namespace {

struct KahanSum {
    double acc = 0.0, comp = 0.0;
    void add(double x) {
        const double term = x - comp;
        const double next = acc + term;
        comp = (next - acc) - term;
        acc = next;
    }
};

template <class Dgp>
MonteCarloSummary run_monte_carlo(const Dgp& dgp, const MonteCarloConfig& cfg) {
    if (cfg.R < 2) throw ConfigError("monte carlo: R must be >= 2");
    if (!cfg.est.functional) throw ConfigError("monte carlo: no functional configured");

    MonteCarloSummary out;
    out.theta0 = dgp.theta0();
    out.R = cfg.R;
    out.n = cfg.n;
    out.reps.resize(static_cast<size_t>(cfg.R));

    int jobs = cfg.jobs;
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min(jobs, cfg.R));

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r; (r = next.fetch_add(1)) < cfg.R;) {
            ReplicationResult& res = out.reps[static_cast<size_t>(r)];
            res.rep = r;
            const std::uint64_t rep_seed =
                stream_seed(cfg.seed, streams::replication, static_cast<std::uint64_t>(r));
            try {
                SimulatedData sim = generate(dgp, cfg.n, rep_seed);
                EstimateConfig ec = cfg.est;
                ec.seed = rep_seed;
                EstimateReport rep = estimate(sim.data, ec);
                res.theta = rep.theta;
                res.theta_plugin = rep.theta_plugin;
                res.se = rep.se;
                res.ci_lo = rep.ci_lo;
                res.ci_hi = rep.ci_hi;
                res.ok = true;
            } catch (const std::exception& e) {
                res.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    KahanSum sum_t, sum_t2, sum_sq, sum_p, sum_p2, sum_psq, sum_se;
    long ok = 0, covered = 0;
    for (const ReplicationResult& r : out.reps) {
        if (!r.ok) continue;
        ++ok;
        sum_t.add(r.theta);
        sum_t2.add(r.theta * r.theta);
        sum_sq.add((r.theta - out.theta0) * (r.theta - out.theta0));
        sum_p.add(r.theta_plugin);
        sum_p2.add(r.theta_plugin * r.theta_plugin);
        sum_psq.add((r.theta_plugin - out.theta0) * (r.theta_plugin - out.theta0));
        sum_se.add(r.se);
        if (r.ci_lo <= out.theta0 && out.theta0 <= r.ci_hi) ++covered;
    }
    out.failures = cfg.R - static_cast<int>(ok);
    if (ok < 2) throw NumericalError("monte carlo: fewer than 2 successful replications");
    const double k = static_cast<double>(ok);
    const double mean_t = sum_t.acc / k, mean_p = sum_p.acc / k;
    out.bias = mean_t - out.theta0;
    out.sd = std::sqrt(std::max(0.0, sum_t2.acc / k - mean_t * mean_t));
    out.rmse = std::sqrt(sum_sq.acc / k);
    out.coverage = static_cast<double>(covered) / k;
    out.mean_se = sum_se.acc / k;
    out.bias_plugin = mean_p - out.theta0;
    out.sd_plugin = std::sqrt(std::max(0.0, sum_p2.acc / k - mean_p * mean_p));
    out.rmse_plugin = std::sqrt(sum_psq.acc / k);
    return out;
}

}  // namespace

MonteCarloSummary monte_carlo(const CasfDgp& dgp, const MonteCarloConfig& cfg) {
    return run_monte_carlo(dgp, cfg);
}

MonteCarloSummary monte_carlo(const SelectionDgp& dgp, const MonteCarloConfig& cfg) {
    return run_monte_carlo(dgp, cfg);
}

nlohmann::json MonteCarloSummary::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["theta0"] = theta0;
    j["replications"] = R;
    j["n"] = n;
    j["failures"] = failures;
    j["bias"] = bias;
    j["sd"] = sd;
    j["rmse"] = rmse;
    j["coverage"] = coverage;
    j["mean_se"] = mean_se;
    j["bias_plugin"] = bias_plugin;
    j["sd_plugin"] = sd_plugin;
    j["rmse_plugin"] = rmse_plugin;
    return j;
}

std::string MonteCarloSummary::reps_csv() const {
    std::ostringstream os;
    os << "rep,ok,theta,theta_plugin,se,ci_lo,ci_hi,error\n";
    os.precision(17);
    for (const ReplicationResult& r : reps) {
        std::string msg = r.error;
        for (char& ch : msg)
            if (ch == ',' || ch == '\n') ch = ';';
        os << r.rep << "," << (r.ok ? 1 : 0) << "," << r.theta << "," << r.theta_plugin
           << "," << r.se << "," << r.ci_lo << "," << r.ci_hi << "," << msg << "\n";
    }
    return os.str();
}

}  // namespace genreg
