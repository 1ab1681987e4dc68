#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "genreg/dictionary.hpp"

using namespace genreg;

namespace {

Eigen::VectorXd pt(std::initializer_list<double> vals) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(vals.size()));
    int k = 0;
    for (double v : vals) p[k++] = v;
    return p;
}

}  // namespace

TEST_CASE("tensor polynomial atom values and order") {
    Dictionary d = Dictionary::tensor_polynomial(1, 1, 1);
    REQUIRE(d.size() == 4);
    const Eigen::VectorXd a = d.eval(pt({2, 3}));
    CHECK(a[0] == 1.0);  // constant first
    CHECK(a[1] == 2.0);  // x
    CHECK(a[2] == 3.0);  // v
    CHECK(a[3] == 6.0);  // xv
    const Eigen::VectorXd at0 = d.eval(pt({0, 0}));
    CHECK(at0[0] == 1.0);
    CHECK(at0.tail(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("partly linear atoms") {
    Dictionary d = Dictionary::partly_linear(1, 2);
    REQUIRE(d.size() == 4);
    const Eigen::VectorXd a = d.eval(pt({2, 3}));
    CHECK(a[0] == 1.0);
    CHECK(a[1] == 2.0);
    CHECK(a[2] == 3.0);
    CHECK(a[3] == 9.0);
}

TEST_CASE("analytic v derivative") {
    {
        Dictionary d = Dictionary::tensor_polynomial(1, 1, 1);  // 1, x, v, xv
        const Eigen::VectorXd dv = d.eval_dv(pt({2, 3}));
        CHECK(dv[0] == 0.0);
        CHECK(dv[1] == 0.0);
        CHECK(dv[2] == 1.0);
        CHECK(dv[3] == 2.0);
    }
    {
        Dictionary d = Dictionary::tensor_polynomial(1, 1, 2);  // contains v^2
        const Eigen::VectorXd a = d.eval(pt({2, 3}));
        const Eigen::VectorXd dv = d.eval_dv(pt({2, 3}));
        // locate the pure v^2 atom
        int j2 = -1;
        for (int j = 0; j < d.size(); ++j)
            if (d.exponents()[j] == std::vector<int>{0, 2}) j2 = j;
        REQUIRE(j2 >= 0);
        CHECK(a[j2] == 9.0);
        CHECK(dv[j2] == 6.0);
    }
    {
        Dictionary d = Dictionary::tensor_polynomial(1, 0, 0);
        CHECK(d.eval_dv(pt({1, 1})).cwiseAbs().maxCoeff() == 0.0);
    }
    Dictionary z = Dictionary::raw_plus_interactions(2, 2, InputKind::over_z);
    CHECK_THROWS_AS(z.eval_dv(pt({1, 2})), ConfigError);
}

TEST_CASE("derivatives match central differences after standardization") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd train(50, 3);
    for (Eigen::Index i = 0; i < 50; ++i)
        for (int c = 0; c < 3; ++c) train(i, c) = 2.0 * nd(rng) + 0.5;
    Dictionary d = Dictionary::tensor_polynomial(2, 2, 3).standardized(train);
    const double step = 1e-4;
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd p = pt({nd(rng), nd(rng), nd(rng)});
        Eigen::VectorXd up = p, dn = p;
        up[2] += step;
        dn[2] -= step;
        const Eigen::VectorXd fd = (d.eval(up) - d.eval(dn)) / (2.0 * step);
        CHECK((fd - d.eval_dv(p)).cwiseAbs().maxCoeff() < 1e-6);
        up = p;
        dn = p;
        up[0] += step;
        dn[0] -= step;
        const Eigen::VectorXd fdx = (d.eval(up) - d.eval(dn)) / (2.0 * step);
        CHECK((fdx - d.eval_dx(p, 0)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("gram matrices are symmetric positive semidefinite") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd points(40, 2);
    for (Eigen::Index i = 0; i < 40; ++i)
        for (int c = 0; c < 2; ++c) points(i, c) = nd(rng);
    Dictionary d = Dictionary::tensor_polynomial(1, 2, 2).standardized(points);
    const Eigen::MatrixXd design = d.design(points);
    const Eigen::MatrixXd gram = design.transpose() * design / 40.0;
    CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("factorized parts reproduce eval") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd train(30, 3);
    for (Eigen::Index i = 0; i < 30; ++i)
        for (int c = 0; c < 3; ++c) train(i, c) = nd(rng) - 1.0;
    Dictionary d = Dictionary::raw_plus_interactions(3, 3, InputKind::over_xv)
                       .standardized(train);
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::VectorXd x = pt({nd(rng), nd(rng)});
        const double v = nd(rng);
        Eigen::VectorXd full(3);
        full << x[0], x[1], v;
        const Eigen::VectorXd prod = d.x_part(x).cwiseProduct(d.v_part(v));
        CHECK((prod - d.eval(full)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("mean_x_part equals averaged x_part") {
    Dictionary d = Dictionary::tensor_polynomial(1, 2, 1);
    Eigen::MatrixXd xs(3, 1);
    xs << 1.0, 2.0, 4.0;
    Eigen::VectorXd manual = Eigen::VectorXd::Zero(d.size());
    for (int s = 0; s < 3; ++s) manual += d.x_part(xs.row(s).transpose());
    manual /= 3.0;
    CHECK((d.mean_x_part(xs) - manual).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standardization keeps unit scale on constant coordinates") {
    Eigen::MatrixXd train(5, 2);
    train.col(0).setConstant(3.0);
    train.col(1) << 1, 2, 3, 4, 5;
    Dictionary d = Dictionary::tensor_polynomial(1, 1, 1).standardized(train);
    // x column centered at 3 with unit scale: atom x at x=4 evaluates to 1
    const Eigen::VectorXd a = d.eval(pt({4.0, 3.0}));
    CHECK(a[1] == doctest::Approx(1.0));
}
