#include "genreg/estimator.hpp"

#include <chrono>
#include <cmath>

namespace genreg {

namespace {

void validate_config(const EstimateConfig& cfg) {
    if (!cfg.functional) throw ConfigError("estimate: no functional configured");
    if (cfg.L < 2) throw ConfigError("estimate: L must be >= 2");
    const int needed = cfg.force_zero_alpha ? 1 : 3;
    if (cfg.depth < needed)
        throw ConfigError("estimate: nesting depth " + std::to_string(cfg.depth) +
                          " is too shallow; need " + std::to_string(needed));
    if (cfg.q1 != 1 && cfg.q1 != 2) throw ConfigError("estimate: q1 must be 1 or 2");
    if (cfg.q2 != 1 && cfg.q2 != 2) throw ConfigError("estimate: q2 must be 1 or 2");
    if (cfg.b_dict.kind() != InputKind::over_xv)
        throw ConfigError("estimate: b dictionary must be over (x, v)");
    if (cfg.c_dict.kind() != InputKind::over_z)
        throw ConfigError("estimate: c dictionary must be over z");
}

Eigen::VectorXd xv_point(const Dataset& ds, int i, const FittedLearner& g,
                         const GeneratedRegressorSpec& vspec) {
    const Observation& o = ds.obs(i);
    Eigen::VectorXd p(ds.xdim() + 1);
    p.head(ds.xdim()) = ds.extract_x(o);
    p[ds.xdim()] = generated_regressor(vspec, g, o);
    return p;
}

}  // namespace

EstimateReport estimate(const Dataset& ds, const EstimateConfig& cfg,
                        const FoldPartition* fixed_partition) {
    const auto t0 = std::chrono::steady_clock::now();
    validate_config(cfg);
    const MomentFunctional& fn = *cfg.functional;
    const int n = ds.n();

    FoldPartition part =
        fixed_partition ? *fixed_partition : make_partition(n, cfg.L, cfg.seed);
    if (part.L != cfg.L) throw ConfigError("estimate: partition/config L mismatch");

    PipelineSpecs specs;
    specs.g_spec = cfg.g_spec;
    specs.h_spec = cfg.h_spec;
    specs.t_n_override = cfg.t_n;
    specs.s_n_override = cfg.s_n;
    specs.S = cfg.S;

    const int depth = cfg.force_zero_alpha ? 1 : cfg.depth;
    EstimatorCache cache = populate_cache(ds, part, specs, fn, depth, cfg.seed);

    const std::vector<double> grid_b =
        cfg.b_lambda_grid.empty() ? default_lambda_grid() : cfg.b_lambda_grid;
    const std::vector<double> grid_c =
        cfg.c_lambda_grid.empty() ? default_lambda_grid() : cfg.c_lambda_grid;

    std::map<ExclusionKey, RieszFit> alpha2_pair;
    std::map<int, RieszFit> alpha2_fold, alpha1_fold;
    EstimateReport rep;
    rep.n = n;
    rep.L = part.L;
    rep.seed = cfg.seed;

    if (!cfg.force_zero_alpha) {
        for (int a = 0; a < part.L; ++a)
            for (int b = a + 1; b < part.L; ++b) {
                const ExclusionKey key{a, b};
                try {
                    alpha2_pair.emplace(
                        key, fit_riesz(second_step_moments(ds, part, cache, key, fn,
                                                           cfg.b_dict, specs, cfg.seed),
                                       grid_b, cfg.q2));
                } catch (const std::runtime_error& e) {
                    throw NumericalError("fold pair " + key.str() + ": " + e.what());
                }
            }
        for (int l = 0; l < part.L; ++l) {
            const ExclusionKey key{l};
            try {
                RieszMoments m2 =
                    second_step_moments(ds, part, cache, key, fn, cfg.b_dict, specs, cfg.seed);
                RieszFit a2 = fit_riesz(m2, grid_b, cfg.q2);
                RieszMoments m1 = first_step_moments(ds, part, cache, key, fn, alpha2_pair,
                                                     cfg.c_dict, specs, cfg.seed);
                RieszFit a1 = fit_riesz(m1, grid_c, cfg.q1);

                FoldDiagnostics fd;
                fd.fold = l;
                const FitBundle& b = cache.at(key);
                fd.g_lambda = b.g.lambda();
                fd.h_lambda = b.h.lambda();
                fd.alpha2_lambda = a2.lambda();
                fd.alpha1_lambda = a1.lambda();
                fd.alpha2_active = a2.active_size();
                fd.alpha1_active = a1.active_size();
                fd.b_condition = m2.gram_condition();
                fd.c_condition = m1.gram_condition();
                fd.theta_tilde = b.theta_tilde;
                rep.folds.push_back(fd);

                alpha2_fold.emplace(l, std::move(a2));
                alpha1_fold.emplace(l, std::move(a1));
            } catch (const std::runtime_error& e) {
                throw NumericalError("fold " + key.str() + ": " + e.what());
            }
        }
    } else {
        for (int l = 0; l < part.L; ++l) {
            FoldDiagnostics fd;
            fd.fold = l;
            const FitBundle& b = cache.at(ExclusionKey{l});
            fd.g_lambda = b.g.lambda();
            fd.h_lambda = b.h.lambda();
            fd.theta_tilde = b.theta_tilde;
            rep.folds.push_back(fd);
        }
    }

    rep.m_lin.resize(n);
    rep.phi_terms.resize(n);
    rep.psi.resize(n);
    const GeneratedRegressorSpec vspec = fn.vspec();
    for (int l = 0; l < part.L; ++l) {
        const ExclusionKey key{l};
        const FitBundle& b = cache.at(key);
        FunctionalContext ctx;
        ctx.t_n = b.t_n;
        ctx.s_n = b.s_n;
        Eigen::MatrixXd draws;
        if (fn.needs_draws()) {
            const int S = specs.S > 0 ? specs.S : default_draw_count(n);
            draws = draws_for_key(static_cast<const CasfFunctional&>(fn).sampler(), S,
                                  cfg.seed, key);
            ctx.draws = &draws;
        }
        for (int i : part.fold_rows(l)) {
            const Observation& o = ds.obs(i);
            const double m_lin = fn.m_linear(ds, i, b.g, b.h, ctx);
            double phi = 0.0;
            if (!cfg.force_zero_alpha) {
                const Eigen::VectorXd xv = xv_point(ds, i, b.g, vspec);
                phi = alpha1_fold.at(l).evaluate(o.z) * (o.d - b.g.predict(o.z)) +
                      alpha2_fold.at(l).evaluate(xv) * (o.y - b.h.predict(xv));
            }
            rep.m_lin[i] = m_lin;
            rep.phi_terms[i] = phi;
            rep.psi[i] = m_lin - b.theta_tilde + phi;
        }
    }

    rep.theta_plugin = rep.m_lin.mean();
    rep.phi = rep.phi_terms.mean();
    rep.theta = rep.theta_plugin + rep.phi;
    const double big_psi = rep.psi.squaredNorm() / static_cast<double>(n);
    rep.se = std::sqrt(big_psi / static_cast<double>(n));
    rep.ci_lo = rep.theta - 1.96 * rep.se;
    rep.ci_hi = rep.theta + 1.96 * rep.se;
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

nlohmann::json EstimateReport::to_json(bool with_timing) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["theta"] = theta;
    j["theta_plugin"] = theta_plugin;
    j["phi"] = phi;
    j["se"] = se;
    j["ci95"] = {ci_lo, ci_hi};
    j["n"] = n;
    j["folds_l"] = L;
    j["seed"] = seed;
    if (with_timing) j["elapsed_seconds"] = elapsed_seconds;
    j["folds"] = nlohmann::json::array();
    for (const FoldDiagnostics& f : folds) {
        nlohmann::json e;
        e["fold"] = f.fold;
        e["g_lambda"] = f.g_lambda;
        e["h_lambda"] = f.h_lambda;
        e["alpha2_lambda"] = f.alpha2_lambda;
        e["alpha1_lambda"] = f.alpha1_lambda;
        e["alpha2_active"] = f.alpha2_active;
        e["alpha1_active"] = f.alpha1_active;
        e["b_condition"] = f.b_condition;
        e["c_condition"] = f.c_condition;
        e["theta_tilde"] = f.theta_tilde;
        j["folds"].push_back(e);
    }
    return j;
}

namespace {

struct FunctionRows {
    Eigen::VectorXd m_lin;  // theta-free part of the moment
    Eigen::VectorXd phi;
};

FunctionRows rows_at_functions(const Dataset& ds, const MomentFunctional& fn,
                               const NuisanceFunctions& nf, const Eigen::MatrixXd* draws,
                               double s_n) {
    if (!nf.g || !nf.h) throw ConfigError("nuisance functions: g and h are required");
    const GeneratedRegressorSpec vspec = fn.vspec();
    const int n = ds.n();
    FunctionRows out;
    out.m_lin.resize(n);
    out.phi.resize(n);
    if (fn.needs_draws() && (draws == nullptr || draws->rows() < 1))
        throw NumericalError("evaluation requires a draw set");
    for (int i = 0; i < n; ++i) {
        const Observation& o = ds.obs(i);
        const double gz = nf.g(o.z);
        const double v = vspec.variant == RegressorVariant::residual ? o.d - gz : gz;
        const Eigen::VectorXd x = ds.extract_x(o);
        double m_lin;
        if (fn.needs_draws()) {
            double acc = 0.0;
            for (Eigen::Index s = 0; s < draws->rows(); ++s)
                acc += nf.h(draws->row(s).transpose(), v);
            m_lin = acc / static_cast<double>(draws->rows());
        } else {
            if (s_n <= 0.0) throw NumericalError("evaluation requires s_n > 0");
            Eigen::VectorXd xs = x;
            xs[0] += s_n;
            m_lin = (nf.h(xs, v) - nf.h(x, v)) / s_n;
        }
        double phi = 0.0;
        if (nf.alpha1) phi += nf.alpha1(o.z) * (o.d - gz);
        if (nf.alpha2) phi += nf.alpha2(x, v) * (o.y - nf.h(x, v));
        out.m_lin[i] = m_lin;
        out.phi[i] = phi;
    }
    return out;
}

}  // namespace

Eigen::VectorXd psi_at_functions(const Dataset& ds, const MomentFunctional& fn,
                                 const NuisanceFunctions& nf, double theta,
                                 const Eigen::MatrixXd* draws, double s_n) {
    FunctionRows r = rows_at_functions(ds, fn, nf, draws, s_n);
    return (r.m_lin.array() - theta + r.phi.array()).matrix();
}

nlohmann::json DiagnosticTable::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["all_pass"] = all_pass;
    j["all_pass_flipped"] = all_pass_flipped;
    j["sign_verdict"] = sign_verdict;
    j["rows"] = nlohmann::json::array();
    for (const DiagnosticRow& r : rows) {
        nlohmann::json e;
        e["direction"] = r.direction;
        e["tau"] = r.tau;
        e["slope_m"] = r.slope_m;
        e["slope_psi"] = r.slope_psi;
        e["slope_psi_flipped"] = r.slope_psi_flipped;
        e["mc_se"] = r.mc_se;
        e["mc_se_flipped"] = r.mc_se_flipped;
        e["pass"] = r.pass;
        e["pass_flipped"] = r.pass_flipped;
        j["rows"].push_back(e);
    }
    return j;
}

DiagnosticTable diagnose_orthogonality(const Dataset& ds, const MomentFunctional& fn,
                                       const ReferenceNuisances& ref,
                                       const Dictionary& bdict, const Dictionary& cdict,
                                       const std::vector<double>& taus, int S,
                                       std::uint64_t seed) {
    if (!ref.truth.alpha1 || !ref.truth.alpha2 || !ref.alpha1_flipped)
        throw ConfigError("orthogonality check: reference weights are required");
    if (taus.empty()) throw ConfigError("orthogonality check: empty tau grid");
    for (double tau : taus)
        if (tau <= 0.0) throw ConfigError("orthogonality check: tau must be > 0");
    if (bdict.kind() != InputKind::over_xv || cdict.kind() != InputKind::over_z)
        throw ConfigError("orthogonality check: dictionary kinds must be (x,v) and z");

    const double s_n = 1e-3;  // reference nuisances are smooth closed forms
    Eigen::MatrixXd draws;
    const Eigen::MatrixXd* dp = nullptr;
    if (fn.needs_draws()) {
        draws = static_cast<const CasfFunctional&>(fn).sampler().draw(
            S, stream_seed(seed, streams::diagnostic));
        dp = &draws;
    }
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(ds.n()));

    NuisanceFunctions flipped = ref.truth;
    flipped.alpha1 = ref.alpha1_flipped;
    const FunctionRows base = rows_at_functions(ds, fn, ref.truth, dp, s_n);
    const FunctionRows base_f = rows_at_functions(ds, fn, flipped, dp, s_n);

    struct Direction {
        std::string label;
        NuisanceFunctions nf;    // perturbed, implemented sign
        NuisanceFunctions nf_f;  // perturbed, flipped sign
    };
    std::vector<std::function<Direction(double)>> dirs;
    for (int j = 0; j < bdict.size(); ++j) {
        dirs.push_back([&, j](double tau) {
            Direction d;
            d.label = "h:" + std::to_string(j);
            auto h0 = ref.truth.h;
            auto h_tau = [&bdict, h0, j, tau](const Eigen::VectorXd& x, double v) {
                Eigen::VectorXd p(x.size() + 1);
                p.head(x.size()) = x;
                p[x.size()] = v;
                return h0(x, v) + tau * bdict.eval(p)[j];
            };
            d.nf = ref.truth;
            d.nf.h = h_tau;
            d.nf_f = d.nf;
            d.nf_f.alpha1 = ref.alpha1_flipped;
            return d;
        });
    }
    for (int k = 0; k < cdict.size(); ++k) {
        dirs.push_back([&, k](double tau) {
            Direction d;
            d.label = "g:" + std::to_string(k);
            auto g0 = ref.truth.g;
            auto g_tau = [&cdict, g0, k, tau](const Eigen::VectorXd& z) {
                return g0(z) + tau * cdict.eval(z)[k];
            };
            d.nf = ref.truth;
            d.nf.g = g_tau;
            d.nf_f = d.nf;
            d.nf_f.alpha1 = ref.alpha1_flipped;
            return d;
        });
    }

    DiagnosticTable table;
    table.all_pass = true;
    table.all_pass_flipped = true;
    for (const auto& make : dirs) {
        for (double tau : taus) {
            const Direction dir = make(tau);
            const FunctionRows pert = rows_at_functions(ds, fn, dir.nf, dp, s_n);
            const FunctionRows pert_f = rows_at_functions(ds, fn, dir.nf_f, dp, s_n);

            DiagnosticRow row;
            row.direction = dir.label;
            row.tau = tau;
            const Eigen::ArrayXd dm = (pert.m_lin - base.m_lin).array() / tau;
            row.slope_m = dm.mean();
            const Eigen::ArrayXd dpsi =
                (pert.m_lin + pert.phi - base.m_lin - base.phi).array() / tau;
            row.slope_psi = dpsi.mean();
            row.mc_se = std::sqrt((dpsi - row.slope_psi).square().mean()) * inv_sqrt_n;
            const Eigen::ArrayXd dpsi_f =
                (pert_f.m_lin + pert_f.phi - base_f.m_lin - base_f.phi).array() / tau;
            row.slope_psi_flipped = dpsi_f.mean();
            row.mc_se_flipped =
                std::sqrt((dpsi_f - row.slope_psi_flipped).square().mean()) * inv_sqrt_n;
            row.pass = std::abs(row.slope_psi) <= 0.1 * std::abs(row.slope_m) + 3.0 * row.mc_se;
            row.pass_flipped = std::abs(row.slope_psi_flipped) <=
                               0.1 * std::abs(row.slope_m) + 3.0 * row.mc_se_flipped;
            table.all_pass = table.all_pass && row.pass;
            table.all_pass_flipped = table.all_pass_flipped && row.pass_flipped;
            table.rows.push_back(std::move(row));
        }
    }
    if (table.all_pass && table.all_pass_flipped)
        table.sign_verdict = "both";
    else if (table.all_pass)
        table.sign_verdict = "implemented";
    else if (table.all_pass_flipped)
        table.sign_verdict = "flipped";
    else
        table.sign_verdict = "neither";
    return table;
}

}  // namespace genreg
