#pragma once

#include <map>
#include <vector>

#include "genreg/crossfit.hpp"

namespace genreg {

// Penalized minimum-distance representer on a dictionary.
class RieszFit {
  public:
    RieszFit() = default;
    RieszFit(Dictionary dict, Eigen::VectorXd coef, double lambda, int q,
             std::vector<int> dropped);

    double evaluate(const Eigen::VectorXd& point) const;
    double evaluate_dv(const Eigen::VectorXd& point) const;

    const Dictionary& dictionary() const { return dict_; }
    const Eigen::VectorXd& coef() const { return coef_; }
    double lambda() const { return lambda_; }
    int q() const { return q_; }
    int active_size() const;
    const std::vector<int>& dropped_atoms() const { return dropped_; }

  private:
    Dictionary dict_ = Dictionary::raw_plus_interactions(1, 0, InputKind::over_z);
    Eigen::VectorXd coef_;
    double lambda_ = 0.0;
    int q_ = 1;
    std::vector<int> dropped_;
};

// Per-fold sums of b b' and of the target functional applied to the atoms,
// assembled out-of-fold so the representer fit never sees its own rows.
struct RieszMoments {
    // standardized on the pooled evaluation points
    Dictionary dict = Dictionary::raw_plus_interactions(1, 0, InputKind::over_z);
    std::vector<int> folds;
    std::vector<Eigen::MatrixXd> gram_f;  // sums over each fold's rows
    std::vector<Eigen::VectorXd> lin_f;
    std::vector<long> count_f;

    long total_count() const;
    Eigen::MatrixXd gram_mean() const;
    Eigen::VectorXd lin_mean() const;
    double gram_condition() const;  // eigenvalue ratio of the mean gram
};

// Second-step moments for a key: for each fold f outside the key, the rows of
// fold f are evaluated with the estimators trained without key ∪ {f}.
RieszMoments second_step_moments(const Dataset& ds, const FoldPartition& part,
                                 const EstimatorCache& cache, const ExclusionKey& key,
                                 const MomentFunctional& fn, const Dictionary& bdict,
                                 const PipelineSpecs& specs, std::uint64_t seed);

// First-step moments for a key: the direct derivative coefficient plus the
// indirect channel through the second-step representer, times the z atoms.
// alpha2 must hold a fit for every key ∪ {f} with f outside the key.
// sign_override 0 uses the generated regressor's own derivative sign.
RieszMoments first_step_moments(const Dataset& ds, const FoldPartition& part,
                                const EstimatorCache& cache, const ExclusionKey& key,
                                const MomentFunctional& fn,
                                const std::map<ExclusionKey, RieszFit>& alpha2,
                                const Dictionary& cdict, const PipelineSpecs& specs,
                                std::uint64_t seed, double sign_override = 0.0);

// min over rho of  -2 lin' rho + rho' gram rho + lambda ||rho||_q^q,
// lambda picked by leave-one-contributing-fold-out on the held-out objective.
// The constant atom is never penalized.
RieszFit fit_riesz(const RieszMoments& moments, const std::vector<double>& lambda_grid,
                   int q);

}  // namespace genreg
