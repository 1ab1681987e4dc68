#include "genreg/solver.hpp"

#include <cmath>

namespace genreg {

namespace {

void validate(const PenalizedQuadraticProblem& p) {
    const Eigen::Index J = p.gram.rows();
    if (p.gram.cols() != J || p.linear.size() != J)
        throw NumericalError("penalized quadratic: shape mismatch");
    if (p.lambda < 0.0) throw NumericalError("penalized quadratic: lambda < 0");
    if (p.q != 1 && p.q != 2) throw NumericalError("penalized quadratic: q must be 1 or 2");
    if (!p.penalty_mask.empty() && static_cast<Eigen::Index>(p.penalty_mask.size()) != J)
        throw NumericalError("penalized quadratic: mask size mismatch");
    if ((p.gram - p.gram.transpose()).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + p.gram.cwiseAbs().maxCoeff()))
        throw NumericalError("penalized quadratic: gram is not symmetric");
    for (Eigen::Index j = 0; j < J; ++j)
        if (p.gram(j, j) < -1e-12) throw NumericalError("penalized quadratic: negative diagonal");
}

bool penalized(const PenalizedQuadraticProblem& p, Eigen::Index j) {
    return p.penalty_mask.empty() || p.penalty_mask[static_cast<size_t>(j)];
}

double soft_threshold(double u, double t) {
    if (u > t) return u - t;
    if (u < -t) return u + t;
    return 0.0;
}

}  // namespace

QuadraticSolution solve_penalized_quadratic(const PenalizedQuadraticProblem& p) {
    validate(p);
    const Eigen::Index J = p.gram.rows();
    QuadraticSolution sol;

    if (p.q == 2) {
        Eigen::MatrixXd A = p.gram;
        for (Eigen::Index j = 0; j < J; ++j)
            if (penalized(p, j)) A(j, j) += p.lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("ridge solve failed; try a larger lambda");
        sol.coef = ldlt.solve(p.linear);
        const double resid = (A * sol.coef - p.linear).cwiseAbs().maxCoeff();
        if (!sol.coef.allFinite() || resid > 1e-6 * (1.0 + p.linear.cwiseAbs().maxCoeff()))
            throw NumericalError("singular unpenalized solve; choose lambda > 0");
        return sol;
    }

    // q = 1: cyclic coordinate descent. Coordinates with zero curvature cannot
    // be updated and are pinned at 0.
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(J);
    std::vector<bool> usable(static_cast<size_t>(J), true);
    for (Eigen::Index j = 0; j < J; ++j) {
        if (p.gram(j, j) <= 0.0) {
            usable[static_cast<size_t>(j)] = false;
            sol.dropped.push_back(static_cast<int>(j));
        }
    }
    Eigen::VectorXd gram_rho = Eigen::VectorXd::Zero(J);  // gram * rho, kept incrementally
    for (int sweep = 0; sweep < kCoordinateDescentMaxSweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < J; ++j) {
            if (!usable[static_cast<size_t>(j)]) continue;
            const double gjj = p.gram(j, j);
            const double partial = p.linear[j] - (gram_rho[j] - gjj * rho[j]);
            const double updated = penalized(p, j)
                                       ? soft_threshold(partial, p.lambda / 2.0) / gjj
                                       : partial / gjj;
            const double delta = updated - rho[j];
            if (delta != 0.0) {
                rho[j] = updated;
                gram_rho += delta * p.gram.col(j);
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        sol.sweeps = sweep + 1;
        if (p.trace_objective) sol.objective_trace.push_back(penalized_objective(p, rho));
        if (max_change < kCoordinateDescentTol) break;
    }
    if (!rho.allFinite()) throw NumericalError("coordinate descent diverged");
    sol.coef = rho;
    return sol;
}

double penalized_objective(const PenalizedQuadraticProblem& p, const Eigen::VectorXd& rho) {
    double pen = 0.0;
    for (Eigen::Index j = 0; j < rho.size(); ++j) {
        if (!penalized(p, j)) continue;
        pen += p.q == 1 ? std::abs(rho[j]) : rho[j] * rho[j];
    }
    return -2.0 * p.linear.dot(rho) + rho.dot(p.gram * rho) + p.lambda * pen;
}

double kkt_residual(const PenalizedQuadraticProblem& p, const Eigen::VectorXd& rho) {
    const Eigen::VectorXd grad_half = p.linear - p.gram * rho;  // -(1/2) d obj / d rho, sans penalty
    double worst = 0.0;
    for (Eigen::Index j = 0; j < rho.size(); ++j) {
        const double lam = (p.q == 1 && penalized(p, j)) ? p.lambda / 2.0 : 0.0;
        double viol;
        if (p.q == 2) {
            viol = std::abs(grad_half[j] - (penalized(p, j) ? p.lambda * rho[j] : 0.0));
        } else if (rho[j] == 0.0) {
            viol = std::max(0.0, std::abs(grad_half[j]) - lam);
        } else {
            viol = std::abs(grad_half[j] - (rho[j] > 0 ? lam : -lam));
        }
        worst = std::max(worst, viol);
    }
    return worst;
}

}  // namespace genreg
