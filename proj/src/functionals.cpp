#include "genreg/functionals.hpp"

#include <cmath>
#include <random>

namespace genreg {

CounterfactualSampler CounterfactualSampler::gaussian(Eigen::VectorXd mu,
                                                      Eigen::VectorXd sigma) {
    if (mu.size() != sigma.size() || mu.size() < 1)
        throw ConfigError("F* gaussian: mu/sigma mismatch");
    if ((sigma.array() <= 0.0).any()) throw ConfigError("F* gaussian: sigma must be > 0");
    CounterfactualSampler s;
    s.family_ = Family::gaussian;
    s.mu_ = std::move(mu);
    s.sigma_ = std::move(sigma);
    s.xdim_ = static_cast<int>(s.mu_.size());
    return s;
}

CounterfactualSampler CounterfactualSampler::point_mass(Eigen::VectorXd x0) {
    if (x0.size() < 1) throw ConfigError("F* point mass: empty point");
    CounterfactualSampler s;
    s.family_ = Family::point_mass;
    s.x0_ = std::move(x0);
    s.xdim_ = static_cast<int>(s.x0_.size());
    return s;
}

CounterfactualSampler CounterfactualSampler::empirical(Eigen::MatrixXd xs) {
    if (xs.rows() < 1 || xs.cols() < 1) throw ConfigError("F* empirical: empty pool");
    CounterfactualSampler s;
    s.family_ = Family::empirical;
    s.pool_ = std::move(xs);
    s.xdim_ = static_cast<int>(s.pool_.cols());
    return s;
}

Eigen::MatrixXd CounterfactualSampler::draw(int S, std::uint64_t seed) const {
    if (S < 1) throw ConfigError("F* draw: S must be >= 1");
    Eigen::MatrixXd out(S, xdim_);
    std::mt19937_64 rng(seed);
    switch (family_) {
        case Family::gaussian: {
            std::normal_distribution<double> nd(0.0, 1.0);
            for (int s = 0; s < S; ++s)
                for (int c = 0; c < xdim_; ++c) out(s, c) = mu_[c] + sigma_[c] * nd(rng);
            break;
        }
        case Family::point_mass: {
            for (int s = 0; s < S; ++s) out.row(s) = x0_.transpose();
            break;
        }
        case Family::empirical: {
            std::uniform_int_distribution<Eigen::Index> ud(0, pool_.rows() - 1);
            for (int s = 0; s < S; ++s) out.row(s) = pool_.row(ud(rng));
            break;
        }
    }
    return out;
}

double MomentFunctional::mean_linear(const Dataset& ds, const std::vector<int>& rows,
                                     const FittedLearner& g, const FittedLearner& h,
                                     const FunctionalContext& ctx) const {
    if (rows.empty()) throw DataError("mean_linear: no rows");
    double acc = 0.0;
    for (int i : rows) acc += m_linear(ds, i, g, h, ctx);
    return acc / static_cast<double>(rows.size());
}

namespace {

// coef .* mean over draws of the atoms' x-parts; cached per (object, context).
const Eigen::VectorXd& learner_profile(const FittedLearner& h, const FunctionalContext& ctx) {
    if (ctx.draws == nullptr) throw NumericalError("CASF evaluation requires a draw set");
    // Keyed by the coefficient vector: the learner's dictionary is its first
    // member, so &h would collide with the dictionary's own cache entry.
    auto it = ctx.profiles.find(&h.coef());
    if (it == ctx.profiles.end()) {
        Eigen::VectorXd w = h.coef().cwiseProduct(h.dictionary().mean_x_part(*ctx.draws));
        it = ctx.profiles.emplace(&h.coef(), std::move(w)).first;
    }
    return it->second;
}

const Eigen::VectorXd& dict_profile(const Dictionary& d, const FunctionalContext& ctx) {
    if (ctx.draws == nullptr) throw NumericalError("CASF evaluation requires a draw set");
    auto it = ctx.profiles.find(&d);
    if (it == ctx.profiles.end())
        it = ctx.profiles.emplace(&d, d.mean_x_part(*ctx.draws)).first;
    return it->second;
}

double vhat(const MomentFunctional& fn, const Dataset& ds, int i, const FittedLearner& g) {
    return generated_regressor(fn.vspec(), g, ds.obs(i));
}

}  // namespace

double CasfFunctional::m_linear(const Dataset& ds, int i, const FittedLearner& g,
                                const FittedLearner& h, const FunctionalContext& ctx) const {
    const double v = vhat(*this, ds, i, g);
    // (1/S) sum_s h(x*_s, v) via the factorized monomial form; exact.
    return learner_profile(h, ctx).dot(h.dictionary().v_part(v));
}

Eigen::VectorXd CasfFunctional::d2_apply(const Dataset& ds, int i, const Dictionary& bdict,
                                         const FittedLearner& g,
                                         const FunctionalContext& ctx) const {
    const double v = vhat(*this, ds, i, g);
    return dict_profile(bdict, ctx).cwiseProduct(bdict.v_part(v));
}

double CasfFunctional::d11_coeff(const Dataset& ds, int i, const FittedLearner& g,
                                 const FittedLearner& h, const FunctionalContext& ctx) const {
    if (ctx.t_n <= 0.0) throw NumericalError("d11_coeff: t_n must be > 0");
    const double v = vhat(*this, ds, i, g);
    const Eigen::VectorXd& w = learner_profile(h, ctx);
    const double hb0 = w.dot(h.dictionary().v_part(v));
    const double hb1 = w.dot(h.dictionary().v_part(v + ctx.t_n));
    return -(hb1 - hb0) / ctx.t_n;
}

double ApeFunctional::m_linear(const Dataset& ds, int i, const FittedLearner& g,
                               const FittedLearner& h, const FunctionalContext& ctx) const {
    const Eigen::VectorXd x = ds.extract_x(i);
    if (x.size() != 1) throw ConfigError("APE requires a scalar designated x");
    return numerical_dx(h, x, vhat(*this, ds, i, g), ctx.s_n);
}

Eigen::VectorXd ApeFunctional::d2_apply(const Dataset& ds, int i, const Dictionary& bdict,
                                        const FittedLearner& g,
                                        const FunctionalContext& ctx) const {
    (void)ctx;
    const Eigen::VectorXd x = ds.extract_x(i);
    if (x.size() != 1) throw ConfigError("APE requires a scalar designated x");
    Eigen::VectorXd point(2);
    point << x[0], vhat(*this, ds, i, g);
    return bdict.eval_dx(point, 0);
}

double ApeFunctional::d11_coeff(const Dataset& ds, int i, const FittedLearner& g,
                                const FittedLearner& h, const FunctionalContext& ctx) const {
    const Eigen::VectorXd x = ds.extract_x(i);
    if (x.size() != 1) throw ConfigError("APE requires a scalar designated x");
    return numerical_dxdv(h, x, vhat(*this, ds, i, g), ctx.s_n, ctx.t_n);
}

}  // namespace genreg
