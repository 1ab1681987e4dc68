#include "genreg/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

namespace genreg {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a,
                          std::uint64_t b) {
    // splitmix64 finalizer over a mixed counter
    std::uint64_t x = seed;
    for (std::uint64_t w : {purpose, a, b}) {
        x += 0x9E3779B97F4A7C15ull + w * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        x ^= x >> 31;
    }
    return x;
}

std::uint64_t hash_bytes(const void* data, std::size_t len, std::uint64_t seed) {
    // FNV-1a folded through splitmix
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull ^ seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return stream_seed(h, 0xFF);
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    const double lo = std::log(1e-8), hi = std::log(1.0);
    for (int k = 0; k < 20; ++k) grid.push_back(std::exp(lo + (hi - lo) * k / 19.0));
    return grid;
}

FittedLearner::FittedLearner(Dictionary dict, Eigen::VectorXd coef, double lambda, int q,
                             std::uint64_t fingerprint)
    : dict_(std::move(dict)), coef_(std::move(coef)), lambda_(lambda), q_(q),
      fingerprint_(fingerprint) {
    if (coef_.size() != dict_.size()) throw NumericalError("learner: coef/dictionary mismatch");
}

double FittedLearner::predict(const Eigen::VectorXd& point) const {
    return dict_.eval(point).dot(coef_);
}

Eigen::VectorXd FittedLearner::predict_rows(const Eigen::MatrixXd& points) const {
    return dict_.design(points) * coef_;
}

namespace {

void validate_spec(const LearnerSpec& spec) {
    if (spec.lambda_grid.empty()) throw ConfigError("learner: empty lambda grid");
    for (double l : spec.lambda_grid) {
        if (l < 0.0 || !std::isfinite(l)) throw ConfigError("learner: invalid lambda in grid");
        if (l == 0.0 && spec.kind == LearnerKind::lasso_dictionary)
            throw ConfigError("learner: lambda = 0 only allowed for ridge");
    }
    if (spec.cv_folds < 2) throw ConfigError("learner: cv_folds must be >= 2");
    if (spec.lambda_scale <= 0.0) throw ConfigError("learner: lambda_scale must be > 0");
}

Eigen::VectorXd solve_at(const Eigen::MatrixXd& gram, const Eigen::VectorXd& lin,
                         double lambda, int q, const std::vector<bool>& mask) {
    PenalizedQuadraticProblem p;
    p.gram = gram;
    p.linear = lin;
    p.lambda = lambda;
    p.q = q;
    p.penalty_mask = mask;
    return solve_penalized_quadratic(p).coef;
}

}  // namespace

FittedLearner fit_learner(const LearnerSpec& spec, const Eigen::MatrixXd& inputs,
                          const Eigen::VectorXd& targets, std::uint64_t seed) {
    validate_spec(spec);
    const Eigen::Index n = inputs.rows();
    if (n < 2) throw DataError("learner: need at least 2 rows");
    if (targets.size() != n) throw DataError("learner: inputs/targets mismatch");
    if (!inputs.allFinite() || !targets.allFinite())
        throw DataError("learner: non-finite training data");

    const Dictionary dict = spec.dictionary.standardized(inputs);
    const Eigen::MatrixXd design = dict.design(inputs);
    const Eigen::Index J = dict.size();
    const int q = spec.kind == LearnerKind::lasso_dictionary ? 1 : 2;

    std::vector<bool> mask(static_cast<size_t>(J), true);
    mask[0] = false;  // constant atom unpenalized

    // Deterministic CV sub-split, independent of the outer fold stream.
    const int folds = std::min<int>(spec.cv_folds, static_cast<int>(n));
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(stream_seed(seed, streams::learner_cv, static_cast<std::uint64_t>(n)));
    std::shuffle(order.begin(), order.end(), rng);

    // Per-fold gram/linear pieces; train pieces are totals minus the held fold.
    std::vector<Eigen::MatrixXd> gram_f(static_cast<size_t>(folds),
                                        Eigen::MatrixXd::Zero(J, J));
    std::vector<Eigen::VectorXd> lin_f(static_cast<size_t>(folds), Eigen::VectorXd::Zero(J));
    std::vector<std::vector<int>> fold_rows(static_cast<size_t>(folds));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int f = static_cast<int>(i) % folds;
        const int row = order[static_cast<size_t>(i)];
        gram_f[static_cast<size_t>(f)].noalias() +=
            design.row(row).transpose() * design.row(row);
        lin_f[static_cast<size_t>(f)] += design.row(row).transpose() * targets[row];
        fold_rows[static_cast<size_t>(f)].push_back(row);
    }
    Eigen::MatrixXd gram_total = Eigen::MatrixXd::Zero(J, J);
    Eigen::VectorXd lin_total = Eigen::VectorXd::Zero(J);
    for (int f = 0; f < folds; ++f) {
        gram_total += gram_f[static_cast<size_t>(f)];
        lin_total += lin_f[static_cast<size_t>(f)];
    }

    double best_lambda = spec.lambda_grid.front();
    double best_err = std::numeric_limits<double>::infinity();
    for (double lambda : spec.lambda_grid) {
        double err = 0.0;
        long count = 0;
        bool feasible = true;
        for (int f = 0; f < folds; ++f) {
            const double n_train = static_cast<double>(n - fold_rows[static_cast<size_t>(f)].size());
            if (n_train < 1) continue;
            Eigen::VectorXd coef;
            try {
                coef = solve_at((gram_total - gram_f[static_cast<size_t>(f)]) / n_train,
                                (lin_total - lin_f[static_cast<size_t>(f)]) / n_train, lambda, q,
                                mask);
            } catch (const NumericalError&) {
                feasible = false;
                break;
            }
            for (int row : fold_rows[static_cast<size_t>(f)]) {
                const double r = targets[row] - design.row(row).dot(coef);
                err += r * r;
                ++count;
            }
        }
        if (!feasible || count == 0) continue;
        err /= static_cast<double>(count);
        if (err < best_err) {
            best_err = err;
            best_lambda = lambda;
        }
    }
    if (!std::isfinite(best_err))
        throw NumericalError("learner: every lambda in the grid failed; choose lambda > 0");

    const double lambda_final = best_lambda * spec.lambda_scale;
    const Eigen::VectorXd coef =
        solve_at(gram_total / static_cast<double>(n), lin_total / static_cast<double>(n),
                 lambda_final, q, mask);

    std::uint64_t fp = hash_bytes(inputs.data(), sizeof(double) * static_cast<size_t>(inputs.size()),
                                  stream_seed(seed, 0xF17));
    fp = hash_bytes(targets.data(), sizeof(double) * static_cast<size_t>(targets.size()), fp);
    return FittedLearner(dict, coef, lambda_final, q, fp);
}

double generated_regressor(const GeneratedRegressorSpec& spec, const FittedLearner& g,
                           const Observation& obs) {
    const double gz = g.predict(obs.z);
    if (!std::isfinite(gz)) throw NumericalError("first-step prediction is not finite");
    return spec.variant == RegressorVariant::residual ? obs.d - gz : gz;
}

namespace {

Eigen::VectorXd xv_point(const Eigen::VectorXd& x, double v) {
    Eigen::VectorXd p(x.size() + 1);
    p.head(x.size()) = x;
    p[x.size()] = v;
    return p;
}

}  // namespace

double numerical_dv(const FittedLearner& h, const Eigen::VectorXd& x, double v, double t_n) {
    if (t_n <= 0.0) throw NumericalError("numerical_dv: t_n must be > 0");
    return (h.predict(xv_point(x, v + t_n)) - h.predict(xv_point(x, v))) / t_n;
}

double numerical_dx(const FittedLearner& h, const Eigen::VectorXd& x, double v, double s_n) {
    if (s_n <= 0.0) throw NumericalError("numerical_dx: s_n must be > 0");
    Eigen::VectorXd xs = x;
    xs[0] += s_n;
    return (h.predict(xv_point(xs, v)) - h.predict(xv_point(x, v))) / s_n;
}

double numerical_dxdv(const FittedLearner& h, const Eigen::VectorXd& x, double v, double s_n,
                      double t_n) {
    if (s_n <= 0.0 || t_n <= 0.0) throw NumericalError("numerical_dxdv: steps must be > 0");
    Eigen::VectorXd xs = x;
    xs[0] += s_n;
    const double hpp = h.predict(xv_point(xs, v + t_n));
    const double hp0 = h.predict(xv_point(xs, v));
    const double h0p = h.predict(xv_point(x, v + t_n));
    const double h00 = h.predict(xv_point(x, v));
    return (hpp - hp0 - h0p + h00) / (s_n * t_n);
}

}  // namespace genreg
