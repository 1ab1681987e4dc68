#pragma once

#include <memory>
#include <unordered_map>

#include <Eigen/Dense>

#include "genreg/data.hpp"
#include "genreg/dictionary.hpp"
#include "genreg/learners.hpp"

namespace genreg {

// Distribution F* over counterfactual covariate points x*.
class CounterfactualSampler {
  public:
    enum class Family { gaussian, point_mass, empirical };

    static CounterfactualSampler gaussian(Eigen::VectorXd mu, Eigen::VectorXd sigma);
    static CounterfactualSampler point_mass(Eigen::VectorXd x0);
    static CounterfactualSampler empirical(Eigen::MatrixXd xs);

    // S x xdim matrix of draws, deterministic given the seed.
    Eigen::MatrixXd draw(int S, std::uint64_t seed) const;
    int xdim() const { return xdim_; }
    Family family() const { return family_; }

  private:
    Family family_ = Family::gaussian;
    Eigen::VectorXd mu_, sigma_, x0_;
    Eigen::MatrixXd pool_;
    int xdim_ = 0;
};

// Per-call evaluation context: the shared draw set plus derivative steps.
// Profiles of learners/dictionaries over the draw set are cached by address.
struct FunctionalContext {
    const Eigen::MatrixXd* draws = nullptr;  // S x xdim; required by CASF
    double t_n = 1e-2;
    double s_n = 1e-2;
    mutable std::unordered_map<const void*, Eigen::VectorXd> profiles;
};

// Target-specific contract: the identifying moment's theta-free part, the
// second-step linearization applied to dictionary atoms, and the scalar
// direct first-step coefficient (the factor multiplying g(z)).
class MomentFunctional {
  public:
    virtual ~MomentFunctional() = default;

    virtual Mode mode() const = 0;
    virtual bool needs_draws() const = 0;

    GeneratedRegressorSpec vspec() const { return GeneratedRegressorSpec::for_mode(mode()); }

    virtual double m_linear(const Dataset& ds, int i, const FittedLearner& g,
                            const FittedLearner& h, const FunctionalContext& ctx) const = 0;
    virtual Eigen::VectorXd d2_apply(const Dataset& ds, int i, const Dictionary& bdict,
                                     const FittedLearner& g,
                                     const FunctionalContext& ctx) const = 0;
    virtual double d11_coeff(const Dataset& ds, int i, const FittedLearner& g,
                             const FittedLearner& h, const FunctionalContext& ctx) const = 0;

    // m is affine in theta with slope -1 for both built-ins.
    double m(const Dataset& ds, int i, const FittedLearner& g, const FittedLearner& h,
             double theta, const FunctionalContext& ctx) const {
        return m_linear(ds, i, g, h, ctx) - theta;
    }

    double mean_linear(const Dataset& ds, const std::vector<int>& rows, const FittedLearner& g,
                       const FittedLearner& h, const FunctionalContext& ctx) const;
};

// Counterfactual average structural function in the control-function model:
// m = (1/S) sum_s h(x*_s, d - g(z)) - theta.
class CasfFunctional : public MomentFunctional {
  public:
    explicit CasfFunctional(CounterfactualSampler sampler) : sampler_(std::move(sampler)) {}

    Mode mode() const override { return Mode::control_function; }
    bool needs_draws() const override { return true; }
    const CounterfactualSampler& sampler() const { return sampler_; }

    double m_linear(const Dataset& ds, int i, const FittedLearner& g, const FittedLearner& h,
                    const FunctionalContext& ctx) const override;
    Eigen::VectorXd d2_apply(const Dataset& ds, int i, const Dictionary& bdict,
                             const FittedLearner& g, const FunctionalContext& ctx) const override;
    double d11_coeff(const Dataset& ds, int i, const FittedLearner& g, const FittedLearner& h,
                     const FunctionalContext& ctx) const override;

  private:
    CounterfactualSampler sampler_;
};

// Average partial effect in the selection model, scalar continuous x:
// m = (h(x + s_n, g(z)) - h(x, g(z))) / s_n - theta.
class ApeFunctional : public MomentFunctional {
  public:
    Mode mode() const override { return Mode::selection; }
    bool needs_draws() const override { return false; }

    double m_linear(const Dataset& ds, int i, const FittedLearner& g, const FittedLearner& h,
                    const FunctionalContext& ctx) const override;
    Eigen::VectorXd d2_apply(const Dataset& ds, int i, const Dictionary& bdict,
                             const FittedLearner& g, const FunctionalContext& ctx) const override;
    double d11_coeff(const Dataset& ds, int i, const FittedLearner& g, const FittedLearner& h,
                     const FunctionalContext& ctx) const override;
};

}  // namespace genreg
