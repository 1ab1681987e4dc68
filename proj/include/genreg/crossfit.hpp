#pragma once

#include <map>
#include <string>
#include <vector>

#include "genreg/functionals.hpp"
#include "genreg/learners.hpp"

namespace genreg {

struct FoldPartition {
    int L = 0;
    std::vector<int> assignment;  // fold index per observation
    std::uint64_t seed = 0;

    std::vector<int> fold_rows(int l) const;
    int fold_size(int l) const;
};

// Balanced random partition, a deterministic function of (n, L, seed).
FoldPartition make_partition(int n, int L, std::uint64_t seed);

// Sorted fold-index set of size 1..3 defining the excluded folds.
struct ExclusionKey {
    std::vector<int> folds;

    ExclusionKey() = default;
    ExclusionKey(std::initializer_list<int> f);
    explicit ExclusionKey(std::vector<int> f);

    int depth() const { return static_cast<int>(folds.size()); }
    bool contains(int fold) const;
    ExclusionKey with(int fold) const;  // key ∪ {fold}
    std::string str() const;
    bool operator<(const ExclusionKey& o) const { return folds < o.folds; }
    bool operator==(const ExclusionKey& o) const { return folds == o.folds; }
};

// Rows whose fold is not in the key, in dataset order.
std::vector<int> complement_rows(const FoldPartition& part, const ExclusionKey& key);

// Estimators trained on the complement of an exclusion set, plus the
// derivative steps derived from that training split.
struct FitBundle {
    FittedLearner g;
    FittedLearner h;
    double theta_tilde = 0.0;
    std::vector<int> train_rows;
    double t_n = 0.0;
    double s_n = 0.0;
};

class EstimatorCache {
  public:
    void insert(const ExclusionKey& key, FitBundle bundle);
    bool contains(const ExclusionKey& key) const;
    const FitBundle& at(const ExclusionKey& key) const;
    std::size_t size() const { return entries_.size(); }
    std::size_t count_depth(int depth) const;
    const std::map<ExclusionKey, FitBundle>& entries() const { return entries_; }

    // Diagnostic/resume dump: JSON keyed by a content hash of the entries.
    void dump_json(const std::string& path) const;

  private:
    std::map<ExclusionKey, FitBundle> entries_;
};

struct PipelineSpecs {
    LearnerSpec g_spec;
    LearnerSpec h_spec;
    // Overrides for the derivative steps; 0 means sigma_V * n^(-1/5).
    double t_n_override = 0.0;
    double s_n_override = 0.0;
    int S = 0;  // 0 means min(10 n, 1e5)
};

// Trains g, h and the plug-in theta for every exclusion key up to `depth`.
// h is trained on (X, V̂) where V̂ uses the same key's g.
EstimatorCache populate_cache(const Dataset& ds, const FoldPartition& part,
                              const PipelineSpecs& specs, const MomentFunctional& fn,
                              int depth, std::uint64_t seed);

// Draws for a key's shared S-sample from F*, reused across m, D2, D11.
Eigen::MatrixXd draws_for_key(const CounterfactualSampler& sampler, int S,
                              std::uint64_t seed, const ExclusionKey& key);

int default_draw_count(int n);

}  // namespace genreg
