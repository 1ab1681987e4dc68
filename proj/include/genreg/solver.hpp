#pragma once

#include <vector>

#include <Eigen/Dense>

#include "genreg/data.hpp"

namespace genreg {

// minimize  -2 linear' rho + rho' gram rho + lambda * ||rho||_q^q
// over the penalized coordinates (penalty_mask); unpenalized coordinates are
// never shrunk. q=2 is solved in closed form, q=1 by cyclic coordinate
// descent with soft-thresholding.
struct PenalizedQuadraticProblem {
    Eigen::MatrixXd gram;    // symmetric J x J
    Eigen::VectorXd linear;  // length J
    double lambda = 0.0;
    int q = 2;
    std::vector<bool> penalty_mask;  // empty = all penalized
    bool trace_objective = false;    // record the objective after every sweep (q=1)
};

struct QuadraticSolution {
    Eigen::VectorXd coef;
    std::vector<int> dropped;  // q=1 coordinates with zero curvature, fixed at 0
    int sweeps = 0;
    std::vector<double> objective_trace;
};

QuadraticSolution solve_penalized_quadratic(const PenalizedQuadraticProblem& p);

double penalized_objective(const PenalizedQuadraticProblem& p, const Eigen::VectorXd& rho);

// q=1: max over coordinates of the KKT violation
//   |linear_j - (gram rho)_j| - lambda_j/2   on inactive coordinates,
//   |linear_j - (gram rho)_j - sign(rho_j) lambda_j/2|  on active ones.
// q=2: max |(gram + lambda Mask) rho - linear|.
double kkt_residual(const PenalizedQuadraticProblem& p, const Eigen::VectorXd& rho);

constexpr double kCoordinateDescentTol = 1e-8;
constexpr int kCoordinateDescentMaxSweeps = 10000;

}  // namespace genreg
