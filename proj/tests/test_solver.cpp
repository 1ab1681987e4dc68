#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "genreg/solver.hpp"

using namespace genreg;

namespace {

PenalizedQuadraticProblem random_problem(std::mt19937_64& rng, int J, int q, double lambda) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd A(2 * J, J);
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < J; ++j) A(i, j) = nd(rng);
    PenalizedQuadraticProblem p;
    p.gram = A.transpose() * A / static_cast<double>(2 * J);
    p.linear.resize(J);
    for (int j = 0; j < J; ++j) p.linear[j] = nd(rng);
    p.lambda = lambda;
    p.q = q;
    return p;
}

}  // namespace

TEST_CASE("ridge closed forms") {
    PenalizedQuadraticProblem p;
    p.gram = Eigen::MatrixXd::Identity(2, 2);
    p.linear.resize(2);
    p.q = 2;

    p.linear << 1, 0;
    p.lambda = 0.0;
    Eigen::VectorXd rho = solve_penalized_quadratic(p).coef;
    CHECK(rho[0] == doctest::Approx(1.0));
    CHECK(rho[1] == doctest::Approx(0.0));

    p.linear << 1, 1;
    p.lambda = 1.0;
    rho = solve_penalized_quadratic(p).coef;
    CHECK(rho[0] == doctest::Approx(0.5));
    CHECK(rho[1] == doctest::Approx(0.5));
}

TEST_CASE("one dimensional soft threshold") {
    PenalizedQuadraticProblem p;
    p.gram = Eigen::MatrixXd::Identity(1, 1);
    p.linear = Eigen::VectorXd::Constant(1, 1.0);
    p.q = 1;

    p.lambda = 1.0;
    CHECK(solve_penalized_quadratic(p).coef[0] == doctest::Approx(0.5));
    p.lambda = 3.0;
    CHECK(solve_penalized_quadratic(p).coef[0] == doctest::Approx(0.0));
}

TEST_CASE("singular unpenalized ridge rejected with guidance") {
    PenalizedQuadraticProblem p;
    p.gram = Eigen::MatrixXd::Ones(2, 2);  // rank 1
    p.linear.resize(2);
    p.linear << 1, -1;
    p.q = 2;
    p.lambda = 0.0;
    CHECK_THROWS_WITH_AS(solve_penalized_quadratic(p),
                         "singular unpenalized solve; choose lambda > 0", NumericalError);
    p.lambda = 0.1;
    CHECK_NOTHROW(solve_penalized_quadratic(p));
}

TEST_CASE("zero curvature coordinates are pinned and reported") {
    PenalizedQuadraticProblem p;
    p.gram = Eigen::MatrixXd::Zero(2, 2);
    p.gram(0, 0) = 1.0;
    p.linear.resize(2);
    p.linear << 1.0, 5.0;
    p.q = 1;
    p.lambda = 0.2;
    QuadraticSolution sol = solve_penalized_quadratic(p);
    CHECK(sol.coef[0] == doctest::Approx(0.9));
    CHECK(sol.coef[1] == 0.0);
    REQUIRE(sol.dropped.size() == 1);
    CHECK(sol.dropped[0] == 1);
}

TEST_CASE("unpenalized mask coordinate is not shrunk") {
    PenalizedQuadraticProblem p;
    p.gram = Eigen::MatrixXd::Identity(2, 2);
    p.linear.resize(2);
    p.linear << 1.0, 1.0;
    p.q = 1;
    p.lambda = 3.0;
    p.penalty_mask = {false, true};
    QuadraticSolution sol = solve_penalized_quadratic(p);
    CHECK(sol.coef[0] == doctest::Approx(1.0));
    CHECK(sol.coef[1] == doctest::Approx(0.0));
}

TEST_CASE("lasso kkt property on random problems") {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 50; ++rep) {
        PenalizedQuadraticProblem p = random_problem(rng, 8, 1, 0.3);
        p.penalty_mask.assign(8, true);
        p.penalty_mask[0] = false;
        const QuadraticSolution sol = solve_penalized_quadratic(p);
        CHECK(kkt_residual(p, sol.coef) < 1e-6);
    }
}

TEST_CASE("ridge normal equation property on random problems") {
    std::mt19937_64 rng(43);
    for (int rep = 0; rep < 50; ++rep) {
        PenalizedQuadraticProblem p = random_problem(rng, 8, 2, 0.5);
        const QuadraticSolution sol = solve_penalized_quadratic(p);
        CHECK(kkt_residual(p, sol.coef) < 1e-8);
    }
}

TEST_CASE("objective never increases across sweeps") {
    std::mt19937_64 rng(44);
    for (int rep = 0; rep < 20; ++rep) {
        PenalizedQuadraticProblem p = random_problem(rng, 10, 1, 0.2);
        p.trace_objective = true;
        const QuadraticSolution sol = solve_penalized_quadratic(p);
        REQUIRE(!sol.objective_trace.empty());
        for (size_t s = 1; s < sol.objective_trace.size(); ++s)
            CHECK(sol.objective_trace[s] <= sol.objective_trace[s - 1] + 1e-10);
        // the trace ends at the reported solution's objective
        CHECK(sol.objective_trace.back() ==
              doctest::Approx(penalized_objective(p, sol.coef)));
    }
}

TEST_CASE("input validation") {
    PenalizedQuadraticProblem p;
    p.gram = Eigen::MatrixXd::Identity(2, 2);
    p.gram(0, 1) = 0.5;  // asymmetric
    p.linear = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(solve_penalized_quadratic(p), NumericalError);
    p.gram(1, 0) = 0.5;
    p.lambda = -1.0;
    CHECK_THROWS_AS(solve_penalized_quadratic(p), NumericalError);
    p.lambda = 0.0;
    p.q = 3;
    CHECK_THROWS_AS(solve_penalized_quadratic(p), NumericalError);
}
