#include "genreg/crossfit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace genreg {

std::vector<int> FoldPartition::fold_rows(int l) const {
    std::vector<int> rows;
    for (size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == l) rows.push_back(static_cast<int>(i));
    return rows;
}

int FoldPartition::fold_size(int l) const {
    return static_cast<int>(std::count(assignment.begin(), assignment.end(), l));
}

FoldPartition make_partition(int n, int L, std::uint64_t seed) {
    if (L < 2) throw ConfigError("make_partition: L must be >= 2");
    if (L > n) throw ConfigError("make_partition: L > n");
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(stream_seed(seed, streams::partition, static_cast<std::uint64_t>(n),
                                    static_cast<std::uint64_t>(L)));
    std::shuffle(order.begin(), order.end(), rng);
    FoldPartition part;
    part.L = L;
    part.seed = seed;
    part.assignment.assign(static_cast<size_t>(n), -1);
    for (int i = 0; i < n; ++i) part.assignment[static_cast<size_t>(order[static_cast<size_t>(i)])] = i % L;
    return part;
}

ExclusionKey::ExclusionKey(std::initializer_list<int> f) : ExclusionKey(std::vector<int>(f)) {}

ExclusionKey::ExclusionKey(std::vector<int> f) : folds(std::move(f)) {
    std::sort(folds.begin(), folds.end());
    if (folds.empty() || folds.size() > 3)
        throw ConfigError("exclusion key must have 1..3 folds");
    if (std::adjacent_find(folds.begin(), folds.end()) != folds.end())
        throw ConfigError("exclusion key has duplicate folds");
    if (folds.front() < 0) throw ConfigError("exclusion key has a negative fold index");
}

bool ExclusionKey::contains(int fold) const {
    return std::find(folds.begin(), folds.end(), fold) != folds.end();
}

ExclusionKey ExclusionKey::with(int fold) const {
    std::vector<int> f = folds;
    f.push_back(fold);
    return ExclusionKey(std::move(f));
}

std::string ExclusionKey::str() const {
    std::ostringstream os;
    os << "{";
    for (size_t i = 0; i < folds.size(); ++i) os << (i ? "," : "") << folds[i];
    os << "}";
    return os.str();
}

std::vector<int> complement_rows(const FoldPartition& part, const ExclusionKey& key) {
    for (int f : key.folds)
        if (f >= part.L) throw ConfigError("exclusion key fold out of range");
    std::vector<int> rows;
    for (size_t i = 0; i < part.assignment.size(); ++i)
        if (!key.contains(part.assignment[i])) rows.push_back(static_cast<int>(i));
    if (rows.empty())
        throw ConfigError("empty training set for exclusion key " +
                          key.str());
    return rows;
}

void EstimatorCache::insert(const ExclusionKey& key, FitBundle bundle) {
    entries_.emplace(key, std::move(bundle));
}

bool EstimatorCache::contains(const ExclusionKey& key) const { return entries_.count(key) > 0; }

const FitBundle& EstimatorCache::at(const ExclusionKey& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw NumericalError("estimator cache: missing key " +
                             key.str());
    return it->second;
}

std::size_t EstimatorCache::count_depth(int depth) const {
    std::size_t c = 0;
    for (const auto& [k, v] : entries_)
        if (k.depth() == depth) ++c;
    return c;
}

void EstimatorCache::dump_json(const std::string& path) const {
    nlohmann::json j;
    std::uint64_t content = 0;
    for (const auto& [key, b] : entries_) {
        nlohmann::json e;
        e["g_lambda"] = b.g.lambda();
        e["h_lambda"] = b.h.lambda();
        e["theta_tilde"] = b.theta_tilde;
        e["g_coef"] = std::vector<double>(b.g.coef().data(), b.g.coef().data() + b.g.coef().size());
        e["h_coef"] = std::vector<double>(b.h.coef().data(), b.h.coef().data() + b.h.coef().size());
        e["train_rows"] = b.train_rows;
        j["entries"][key.str()] = e;
        content = stream_seed(content, b.g.train_fingerprint(), b.h.train_fingerprint());
    }
    j["content_hash"] = content;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write cache dump '" + path + "'");
    out << j.dump(2) << "\n";
}

int default_draw_count(int n) { return std::min(10 * n, 100000); }

Eigen::MatrixXd draws_for_key(const CounterfactualSampler& sampler, int S, std::uint64_t seed,
                              const ExclusionKey& key) {
    std::uint64_t k = stream_seed(seed, streams::draws);
    for (int f : key.folds) k = stream_seed(k, 0xD4A, static_cast<std::uint64_t>(f));
    return sampler.draw(S, k);
}

namespace {

double stddev(const Eigen::VectorXd& v) {
    const double mu = v.mean();
    return std::sqrt((v.array() - mu).square().sum() / static_cast<double>(v.size()));
}

FitBundle train_bundle(const Dataset& ds, const std::vector<int>& rows,
                       const PipelineSpecs& specs, const MomentFunctional& fn,
                       const ExclusionKey& key, std::uint64_t seed) {
    const std::uint64_t key_seed =
        stream_seed(seed, 0xB0B, hash_bytes(key.folds.data(), key.folds.size() * sizeof(int), 0));

    FitBundle b;
    b.train_rows = rows;
    b.g = fit_learner(specs.g_spec, ds.z_matrix(rows), ds.d_vector(rows),
                      stream_seed(key_seed, 0x61));

    const GeneratedRegressorSpec vspec = fn.vspec();
    Eigen::MatrixXd xv(rows.size(), ds.xdim() + 1);
    for (size_t r = 0; r < rows.size(); ++r) {
        const Observation& o = ds.obs(rows[r]);
        xv.row(static_cast<Eigen::Index>(r)).head(ds.xdim()) = ds.extract_x(o).transpose();
        xv(static_cast<Eigen::Index>(r), ds.xdim()) = generated_regressor(vspec, b.g, o);
    }
    b.h = fit_learner(specs.h_spec, xv, ds.y_vector(rows), stream_seed(key_seed, 0x68));

    const double n_rate = std::pow(static_cast<double>(rows.size()), -0.2);
    const double sd_v = stddev(xv.col(ds.xdim()));
    b.t_n = specs.t_n_override > 0.0 ? specs.t_n_override
                                     : std::max(1e-6, sd_v * n_rate);
    const double sd_x = stddev(xv.col(0));
    b.s_n = specs.s_n_override > 0.0 ? specs.s_n_override
                                     : std::max(1e-6, sd_x * n_rate);

    FunctionalContext ctx;
    ctx.t_n = b.t_n;
    ctx.s_n = b.s_n;
    Eigen::MatrixXd draws;
    if (fn.needs_draws()) {
        const int S = specs.S > 0 ? specs.S : default_draw_count(ds.n());
        draws = draws_for_key(static_cast<const CasfFunctional&>(fn).sampler(), S, seed, key);
        ctx.draws = &draws;
    }
    b.theta_tilde = fn.mean_linear(ds, rows, b.g, b.h, ctx);
    return b;
}

}  // namespace

EstimatorCache populate_cache(const Dataset& ds, const FoldPartition& part,
                              const PipelineSpecs& specs, const MomentFunctional& fn,
                              int depth, std::uint64_t seed) {
    if (depth < 1 || depth > 3) throw ConfigError("populate_cache: depth must be in 1..3");
    const int min_rows = std::max(
        10, 2 * std::max(specs.g_spec.dictionary.size(), specs.h_spec.dictionary.size()));
    EstimatorCache cache;

    std::vector<ExclusionKey> keys;
    for (int a = 0; a < part.L; ++a) {
        keys.push_back(ExclusionKey{a});
        if (depth >= 2)
            for (int b = a + 1; b < part.L; ++b) {
                keys.push_back(ExclusionKey{a, b});
                if (depth >= 3)
                    for (int c = b + 1; c < part.L; ++c) keys.push_back(ExclusionKey{a, b, c});
            }
    }
    for (const ExclusionKey& key : keys) {
        if (key.depth() >= part.L)
            throw ConfigError("populate_cache: exclusion key " + key.str() +
                              " leaves an empty training set");
        const std::vector<int> rows = complement_rows(part, key);
        if (static_cast<int>(rows.size()) < min_rows)
            throw ConfigError("populate_cache: undersized complement for key " + key.str() +
                              " (" + std::to_string(rows.size()) + " rows, need " +
                              std::to_string(min_rows) + ")");
        cache.insert(key, train_bundle(ds, rows, specs, fn, key, seed));
    }
    return cache;
}

}  // namespace genreg
