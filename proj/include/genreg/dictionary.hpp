#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genreg/data.hpp"

namespace genreg {

enum class InputKind { over_z, over_xv };
enum class DictionaryFamily { tensor_polynomial, partly_linear, raw_plus_interactions };

// Ordered monomial basis over z or over (x, v); atom 0 is the constant.
// For over_xv inputs the last coordinate is v. Inputs are mapped through a
// per-coordinate affine standardization (identity until standardized() is
// called with training points), so every atom factorizes across coordinates
// and has exact analytic partial derivatives.
class Dictionary {
  public:
    static Dictionary tensor_polynomial(int x_dim, int degree_x, int degree_v);
    static Dictionary partly_linear(int x_dim, int degree_v);
    // All monomials of total degree <= degree (main effects plus interactions).
    static Dictionary raw_plus_interactions(int dim, int degree, InputKind kind);

    int size() const { return static_cast<int>(exps_.size()); }
    int dim() const { return dim_; }
    InputKind kind() const { return kind_; }
    DictionaryFamily family() const { return family_; }
    const std::vector<std::vector<int>>& exponents() const { return exps_; }

    // Copy with standardization fitted on training points (rows = points).
    // Zero-variance coordinates keep unit scale.
    Dictionary standardized(const Eigen::MatrixXd& training_points) const;

    Eigen::VectorXd eval(const Eigen::VectorXd& point) const;
    // Exact d/dv (raw scale, chain rule through standardization). over_xv only.
    Eigen::VectorXd eval_dv(const Eigen::VectorXd& point) const;
    // Exact d/dx for x coordinate `x_coord` (raw scale).
    Eigen::VectorXd eval_dx(const Eigen::VectorXd& point, int x_coord = 0) const;

    // Factorized pieces for over_xv atoms: eval = x_part(x) .* v_part(v).
    Eigen::VectorXd x_part(const Eigen::VectorXd& x) const;
    Eigen::VectorXd v_part(double v) const;
    // Mean of x_part over the rows of `xs` (one row per draw).
    Eigen::VectorXd mean_x_part(const Eigen::MatrixXd& xs) const;

    // n x J design matrix for a batch of points.
    Eigen::MatrixXd design(const Eigen::MatrixXd& points) const;

    std::string describe() const;

  private:
    Dictionary() = default;
    void init_identity_map();

    std::vector<std::vector<int>> exps_;
    Eigen::VectorXd center_, scale_;
    InputKind kind_ = InputKind::over_z;
    DictionaryFamily family_ = DictionaryFamily::tensor_polynomial;
    int dim_ = 0;
};

}  // namespace genreg
