#include "genreg/riesz.hpp"

#include <cmath>
#include <limits>

namespace genreg {

RieszFit::RieszFit(Dictionary dict, Eigen::VectorXd coef, double lambda, int q,
                   std::vector<int> dropped)
    : dict_(std::move(dict)), coef_(std::move(coef)), lambda_(lambda), q_(q),
      dropped_(std::move(dropped)) {
    if (coef_.size() != dict_.size()) throw NumericalError("riesz: coef/dictionary mismatch");
}

double RieszFit::evaluate(const Eigen::VectorXd& point) const {
    return dict_.eval(point).dot(coef_);
}

double RieszFit::evaluate_dv(const Eigen::VectorXd& point) const {
    return dict_.eval_dv(point).dot(coef_);
}

int RieszFit::active_size() const {
    int c = 0;
    for (Eigen::Index j = 0; j < coef_.size(); ++j)
        if (coef_[j] != 0.0) ++c;
    return c;
}

long RieszMoments::total_count() const {
    long t = 0;
    for (long c : count_f) t += c;
    return t;
}

Eigen::MatrixXd RieszMoments::gram_mean() const {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dict.size(), dict.size());
    for (const auto& gf : gram_f) g += gf;
    return g / static_cast<double>(total_count());
}

Eigen::VectorXd RieszMoments::lin_mean() const {
    Eigen::VectorXd l = Eigen::VectorXd::Zero(dict.size());
    for (const auto& lf : lin_f) l += lf;
    return l / static_cast<double>(total_count());
}

double RieszMoments::gram_condition() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_mean());
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

namespace {

std::vector<int> contributing_folds(const FoldPartition& part, const ExclusionKey& key) {
    std::vector<int> folds;
    for (int f = 0; f < part.L; ++f)
        if (!key.contains(f)) folds.push_back(f);
    if (folds.empty())
        throw ConfigError("riesz moments: key " + key.str() + " excludes every fold");
    return folds;
}

Eigen::VectorXd xv_point(const Dataset& ds, int i, const FittedLearner& g,
                         const GeneratedRegressorSpec& vspec) {
    const Observation& o = ds.obs(i);
    Eigen::VectorXd p(ds.xdim() + 1);
    p.head(ds.xdim()) = ds.extract_x(o);
    p[ds.xdim()] = generated_regressor(vspec, g, o);
    return p;
}

FunctionalContext make_ctx(const MomentFunctional& fn, const FitBundle& bundle,
                           const Dataset& ds, const PipelineSpecs& specs,
                           const ExclusionKey& subkey, std::uint64_t seed,
                           Eigen::MatrixXd& draws_storage) {
    FunctionalContext ctx;
    ctx.t_n = bundle.t_n;
    ctx.s_n = bundle.s_n;
    if (fn.needs_draws()) {
        const int S = specs.S > 0 ? specs.S : default_draw_count(ds.n());
        draws_storage = draws_for_key(static_cast<const CasfFunctional&>(fn).sampler(), S,
                                      seed, subkey);
        ctx.draws = &draws_storage;
    }
    return ctx;
}

}  // namespace

RieszMoments second_step_moments(const Dataset& ds, const FoldPartition& part,
                                 const EstimatorCache& cache, const ExclusionKey& key,
                                 const MomentFunctional& fn, const Dictionary& bdict,
                                 const PipelineSpecs& specs, std::uint64_t seed) {
    if (bdict.kind() != InputKind::over_xv)
        throw ConfigError("second-step dictionary must be over (x, v)");
    const std::vector<int> folds = contributing_folds(part, key);
    const GeneratedRegressorSpec vspec = fn.vspec();

    // First pass: evaluation points, pooled for standardization.
    std::vector<std::vector<int>> rows_f;
    long total = 0;
    for (int f : folds) {
        rows_f.push_back(part.fold_rows(f));
        total += static_cast<long>(rows_f.back().size());
    }
    Eigen::MatrixXd pool(total, ds.xdim() + 1);
    std::vector<Eigen::MatrixXd> points_f;
    long at = 0;
    for (size_t k = 0; k < folds.size(); ++k) {
        const FitBundle& b = cache.at(key.with(folds[k]));
        Eigen::MatrixXd pts(rows_f[k].size(), ds.xdim() + 1);
        for (size_t r = 0; r < rows_f[k].size(); ++r)
            pts.row(static_cast<Eigen::Index>(r)) = xv_point(ds, rows_f[k][r], b.g, vspec);
        pool.middleRows(at, pts.rows()) = pts;
        at += pts.rows();
        points_f.push_back(std::move(pts));
    }

    RieszMoments m;
    m.dict = bdict.standardized(pool);
    m.folds = folds;
    const Eigen::Index J = m.dict.size();
    for (size_t k = 0; k < folds.size(); ++k) {
        const ExclusionKey subkey = key.with(folds[k]);
        const FitBundle& b = cache.at(subkey);
        Eigen::MatrixXd draws;
        FunctionalContext ctx = make_ctx(fn, b, ds, specs, subkey, seed, draws);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(J, J);
        Eigen::VectorXd lin = Eigen::VectorXd::Zero(J);
        for (size_t r = 0; r < rows_f[k].size(); ++r) {
            const Eigen::VectorXd atoms =
                m.dict.eval(points_f[k].row(static_cast<Eigen::Index>(r)).transpose());
            gram.noalias() += atoms * atoms.transpose();
            lin += fn.d2_apply(ds, rows_f[k][r], m.dict, b.g, ctx);
        }
        m.gram_f.push_back(std::move(gram));
        m.lin_f.push_back(std::move(lin));
        m.count_f.push_back(static_cast<long>(rows_f[k].size()));
    }
    return m;
}

RieszMoments first_step_moments(const Dataset& ds, const FoldPartition& part,
                                const EstimatorCache& cache, const ExclusionKey& key,
                                const MomentFunctional& fn,
                                const std::map<ExclusionKey, RieszFit>& alpha2,
                                const Dictionary& cdict, const PipelineSpecs& specs,
                                std::uint64_t seed, double sign_override) {
    if (cdict.kind() != InputKind::over_z)
        throw ConfigError("first-step dictionary must be over z");
    const std::vector<int> folds = contributing_folds(part, key);
    const GeneratedRegressorSpec vspec = fn.vspec();
    const double sign = sign_override != 0.0 ? sign_override : vspec.hadamard_sign();

    std::vector<std::vector<int>> rows_f;
    long total = 0;
    for (int f : folds) {
        rows_f.push_back(part.fold_rows(f));
        total += static_cast<long>(rows_f.back().size());
    }
    Eigen::MatrixXd pool(total, ds.zdim());
    long at = 0;
    for (const auto& rows : rows_f) {
        for (int i : rows) pool.row(at++) = ds.obs(i).z.transpose();
    }

    RieszMoments m;
    m.dict = cdict.standardized(pool);
    m.folds = folds;
    const Eigen::Index J = m.dict.size();
    for (size_t k = 0; k < folds.size(); ++k) {
        const ExclusionKey subkey = key.with(folds[k]);
        const FitBundle& b = cache.at(subkey);
        auto a2 = alpha2.find(subkey);
        if (a2 == alpha2.end())
            throw NumericalError("first-step moments: missing alpha2 fit for key " +
                                 subkey.str());
        Eigen::MatrixXd draws;
        FunctionalContext ctx = make_ctx(fn, b, ds, specs, subkey, seed, draws);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(J, J);
        Eigen::VectorXd lin = Eigen::VectorXd::Zero(J);
        for (int i : rows_f[k]) {
            const Observation& o = ds.obs(i);
            const Eigen::VectorXd xv = xv_point(ds, i, b.g, vspec);
            const Eigen::VectorXd x = xv.head(ds.xdim());
            const double resid = o.y - b.h.predict(xv);
            const double dh_dv = numerical_dv(b.h, x, xv[ds.xdim()], b.t_n);
            const double coeff =
                fn.d11_coeff(ds, i, b.g, b.h, ctx) +
                sign * (a2->second.evaluate_dv(xv) * resid - a2->second.evaluate(xv) * dh_dv);
            const Eigen::VectorXd atoms = m.dict.eval(o.z);
            gram.noalias() += atoms * atoms.transpose();
            lin += coeff * atoms;
        }
        m.gram_f.push_back(std::move(gram));
        m.lin_f.push_back(std::move(lin));
        m.count_f.push_back(static_cast<long>(rows_f[k].size()));
    }
    return m;
}

RieszFit fit_riesz(const RieszMoments& moments, const std::vector<double>& lambda_grid,
                   int q) {
    if (lambda_grid.empty()) throw ConfigError("riesz: empty lambda grid");
    if (q != 1 && q != 2) throw ConfigError("riesz: q must be 1 or 2");
    for (double l : lambda_grid) {
        if (l < 0.0 || !std::isfinite(l)) throw ConfigError("riesz: invalid lambda in grid");
        if (l == 0.0 && q == 1) throw ConfigError("riesz: lambda = 0 only allowed for q = 2");
    }
    const Eigen::Index J = moments.dict.size();
    std::vector<bool> mask(static_cast<size_t>(J), true);
    mask[0] = false;

    const long n = moments.total_count();
    const size_t F = moments.folds.size();
    double best_lambda = lambda_grid.front();
    if (F >= 2 && lambda_grid.size() >= 2) {
        double best_err = std::numeric_limits<double>::infinity();
        for (double lambda : lambda_grid) {
            double err = 0.0;
            bool feasible = true;
            for (size_t f = 0; f < F; ++f) {
                const double n_train = static_cast<double>(n - moments.count_f[f]);
                Eigen::MatrixXd gram = -moments.gram_f[f];
                Eigen::VectorXd lin = -moments.lin_f[f];
                for (size_t k = 0; k < F; ++k) {
                    gram += moments.gram_f[k];
                    lin += moments.lin_f[k];
                }
                PenalizedQuadraticProblem p;
                p.gram = gram / n_train;
                p.linear = lin / n_train;
                p.lambda = lambda;
                p.q = q;
                p.penalty_mask = mask;
                Eigen::VectorXd rho;
                try {
                    rho = solve_penalized_quadratic(p).coef;
                } catch (const NumericalError&) {
                    feasible = false;
                    break;
                }
                const double nf = static_cast<double>(moments.count_f[f]);
                err += (-2.0 * moments.lin_f[f].dot(rho) +
                        rho.dot(moments.gram_f[f] * rho)) / nf;
            }
            if (!feasible) continue;
            if (err < best_err) {
                best_err = err;
                best_lambda = lambda;
            }
        }
        if (!std::isfinite(best_err))
            throw NumericalError("riesz: every lambda in the grid failed; choose lambda > 0");
    }

    PenalizedQuadraticProblem p;
    p.gram = moments.gram_mean();
    p.linear = moments.lin_mean();
    p.lambda = best_lambda;
    p.q = q;
    p.penalty_mask = mask;
    QuadraticSolution sol = solve_penalized_quadratic(p);
    return RieszFit(moments.dict, std::move(sol.coef), best_lambda, q,
                    std::move(sol.dropped));
}

}  // namespace genreg
