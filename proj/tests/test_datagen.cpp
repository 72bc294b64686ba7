#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <set>

#include "atl/datagen.hpp"
#include "atl/error.hpp"

using namespace atl;

TEST_CASE("AR(1) covariance") {
    const Eigen::MatrixXd s = make_ar1_covariance(10, 0.5);
    CHECK(s(0, 1) == 0.5);
    CHECK(s(0, 2) == 0.25);
    for (int j = 0; j < 10; ++j) {
        CHECK(s(j, j) == 1.0);
    }
    CHECK(make_ar1_covariance(3, 0.0).isIdentity(0.0));
    const Eigen::MatrixXd s4 = make_ar1_covariance(4, 0.9);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(s4).info() == Eigen::Success);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s4).eigenvalues().minCoeff() > 0.0);
    CHECK_THROWS_AS(make_ar1_covariance(3, 1.0), ParameterError);
    CHECK_THROWS_AS(make_ar1_covariance(3, -0.1), ParameterError);
}

TEST_CASE("default model and inconsistent sources") {
    const TrueModel t = default_true_model();
    Eigen::VectorXd expect(10);
    expect << 3, 1.5, 0, 0, 2, 0, 0, 0, 0, 0;
    CHECK(t.beta_star == expect);
    CHECK(t.support() == std::vector<Index>{0, 1, 4});
    CHECK(default_true_model(20).beta_star.tail(10).isZero(0.0));

    Eigen::VectorXd a = expect;
    a(5) = 2;
    CHECK(inconsistent_source_beta(t, 'A') == a);
    Eigen::VectorXd b = expect;
    b(4) = 0;
    CHECK(inconsistent_source_beta(t, 'B') == b);
}

TEST_CASE("sampling is deterministic and noiseless data is exact") {
    const TrueModel t = default_true_model();
    const auto a = sample_problem(t, 100, 7);
    const auto b = sample_problem(t, 100, 7);
    CHECK(a.design == b.design);
    CHECK(a.response == b.response);
    const auto c = sample_problem(t, 100, 8);
    CHECK((c.response - c.design * t.beta_star) != (a.response - a.design * t.beta_star));

    TrueModel quiet = t;
    quiet.sigma = 0.0;
    const auto q = sample_problem(quiet, 50, 7);
    CHECK(q.response == q.design * t.beta_star);
    // design does not depend on sigma
    CHECK(q.design == sample_problem(t, 50, 7).design);
}

TEST_CASE("empirical moments at n = 100000") {
    const TrueModel t = default_true_model();
    const auto prob = sample_problem(t, 100000, 1);
    const double n = static_cast<double>(prob.n());
    const Eigen::MatrixXd cov = prob.design.transpose() * prob.design / n;
    CHECK((cov - make_ar1_covariance(10, 0.5)).cwiseAbs().maxCoeff() < 0.02);
    const Eigen::VectorXd eps = prob.response - prob.design * t.beta_star;
    const double var = eps.squaredNorm() / n;
    CHECK(std::abs(var - 1.0) < 0.03);
    // 5 relative standard errors of a chi-square variance estimate
    CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("source and target come from disjoint streams") {
    const TrueModel t = default_true_model();
    const StreamKey key{3, 4, Role::target, 5};
    std::set<std::uint64_t> ids;
    for (Role r : {Role::source, Role::target, Role::test}) {
        for (std::uint8_t part : {std::uint8_t{0}, std::uint8_t{1}}) {
            ids.insert(key.with_role(r).stream_id(part));
        }
    }
    CHECK(ids.size() == 6);
    // replicate and cell enter the stream id too
    CHECK(StreamKey{3, 5, Role::target, 5}.stream_id(0) != key.stream_id(0));
    CHECK(StreamKey{3, 4, Role::target, 6}.stream_id(0) != key.stream_id(0));

    const auto pair = make_source_target(t, 30, 20, key);
    CHECK(pair.source.n() == 30);
    CHECK(pair.target.n() == 20);
    CHECK(pair.source_truth.beta_star == t.beta_star);
    const auto again = sample_problem(t, 20, key);
    CHECK(pair.target.design == again.design);
    CHECK(pair.source.design == sample_problem(t, 30, key.with_role(Role::source)).design);
}

TEST_CASE("source override changes the source only") {
    const TrueModel t = default_true_model();
    const StreamKey key{1, 0, Role::target, 0};
    const Eigen::VectorXd over = inconsistent_source_beta(t, 'A');
    const auto pair = make_source_target(t, 40, 20, key, over);
    CHECK(pair.source_truth.beta_star == over);
    CHECK(pair.truth.beta_star == t.beta_star);
    CHECK(pair.target.response == make_source_target(t, 40, 20, key).target.response);
    CHECK_THROWS_AS(make_source_target(t, 40, 20, key, Eigen::VectorXd::Zero(3)), ParameterError);
}

TEST_CASE("streamed normal equations match the explicit problem") {
    const TrueModel t = default_true_model();
    const StreamKey key{11, 2, Role::source, 3};
    const auto ne = accumulate_normal_equations(t, 5000, key);
    const auto prob = sample_problem(t, 5000, key);
    const auto direct = normal_equations(prob);
    CHECK(ne.rows == 5000);
    CHECK((ne.gram - direct.gram).cwiseAbs().maxCoeff() < 1e-8 * direct.gram.cwiseAbs().maxCoeff());
    CHECK((ne.xty - direct.xty).cwiseAbs().maxCoeff() < 1e-8 * direct.xty.cwiseAbs().maxCoeff());
    CHECK(std::abs(ne.yty - direct.yty) < 1e-8 * direct.yty);
}

TEST_CASE("truth validation") {
    TrueModel t = default_true_model();
    t.sigma = -1;
    CHECK_THROWS_AS(t.validate(), ParameterError);
    t = default_true_model();
    t.covariance_rho = 1.0;
    CHECK_THROWS_AS(t.validate(), ParameterError);
}
