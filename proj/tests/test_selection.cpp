#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "atl/datagen.hpp"
#include "atl/error.hpp"
#include "atl/initial.hpp"
#include "atl/selection.hpp"

using namespace atl;

TEST_CASE("penalty reductions") {
    Eigen::VectorXd bt(4);
    bt << 2.0, -0.5, 0.0, 1e-4;
    MethodConfig atl_cfg{Family::adaptive_transfer_lasso, 0.0, 0.0, 0.4};
    MethodConfig tl_cfg{Family::transfer_lasso, 0.0, 0.0, 0.4};
    const PenaltySpec a = build_penalty(atl_cfg, bt, 1e-3, 7.0, 4);
    const PenaltySpec t = build_penalty(tl_cfg, bt, 1e-3, 7.0, 4);
    CHECK(identical(a, t));
    CHECK(a.v == Eigen::VectorXd::Ones(4));
    CHECK(a.w == Eigen::VectorXd::Ones(4));
    CHECK(a.anchor == bt);
    CHECK(a.lambda == 0.4 * 7.0);
    CHECK(a.eta == 0.6 * 7.0);

    MethodConfig tl1{Family::transfer_lasso, 0.0, 0.0, 1.0};
    const PenaltySpec one = build_penalty(tl1, bt, 1e-3, 7.0, 4);
    CHECK(one.eta == 0.0);
    CHECK(one.lambda == 7.0);
    CHECK(one.v == Eigen::VectorXd::Ones(4));

    const PenaltySpec lasso = build_penalty(MethodConfig{Family::lasso}, std::nullopt, 1e-3, 7.0, 4);
    CHECK(lasso.eta == 0.0);
    CHECK(lasso.anchor.isZero(0.0));
    CHECK(lasso.v == Eigen::VectorXd::Ones(4));
}

TEST_CASE("adaptive weights use the clipped magnitudes only") {
    Eigen::VectorXd bt(2);
    bt << 2.0, 1e-4;
    const PenaltySpec a = build_penalty(MethodConfig{Family::adaptive_lasso, 1.0}, bt, 1e-3, 1.0, 2);
    CHECK(a.v(0) == doctest::Approx(0.5));
    CHECK(a.v(1) == doctest::Approx(1000.0));
    CHECK(a.anchor.isZero(0.0));

    MethodConfig cfg{Family::adaptive_transfer_lasso, 1.0, 2.0, 0.5};
    const PenaltySpec b = build_penalty(cfg, bt, 1e-3, 1.0, 2);
    CHECK(b.w(0) == doctest::Approx(4.0));
    CHECK(b.w(1) == doctest::Approx(1e-6));
    CHECK(b.anchor == bt); // anchor is not clipped
}

TEST_CASE("families needing an initial estimate reject its absence") {
    CHECK_THROWS_AS(build_penalty(MethodConfig{Family::adaptive_lasso, 1.0}, std::nullopt, 1e-3, 1, 3),
                    ParameterError);
    CHECK_THROWS_AS(build_penalty(MethodConfig{Family::transfer_lasso, 0, 0, 0.5}, std::nullopt, 1e-3, 1, 3),
                    ParameterError);
    CHECK_THROWS_AS(build_penalty(MethodConfig{Family::transfer_lasso, 0, 0, 0.5}, Eigen::VectorXd::Zero(2), 1e-3,
                                  1, 3),
                    ParameterError);
}

TEST_CASE("method config validation") {
    MethodConfig c{Family::transfer_lasso, 0, 0, 0.0};
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c.alpha = 1.5;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c.alpha = 0.5;
    c.grid_ratio = 1.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c.grid_ratio = 1e-6;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("candidate sets") {
    CHECK(default_candidates(Family::lasso).size() == 1);
    std::set<double> gammas;
    for (const auto& c : default_candidates(Family::adaptive_lasso)) {
        gammas.insert(c.gamma1);
    }
    CHECK(gammas == std::set<double>{0.5, 1.0, 2.0});
    std::set<double> alphas;
    for (const auto& c : default_candidates(Family::transfer_lasso)) {
        alphas.insert(c.alpha);
    }
    CHECK(alphas == std::set<double>{0.25, 0.5, 0.75});
    std::set<std::tuple<double, double, double>> triples;
    for (const auto& c : default_candidates(Family::adaptive_transfer_lasso)) {
        triples.insert({c.gamma1, c.gamma2, c.alpha});
    }
    std::set<std::tuple<double, double, double>> expect;
    for (double g : {0.5, 1.0, 2.0}) {
        for (double a : {0.75, 0.5, 0.25}) {
            expect.insert({g, g, a});
        }
    }
    CHECK(triples == expect);
    CHECK(default_candidates(Family::adaptive_transfer_lasso).size() == 9);
}

TEST_CASE("log grid") {
    const auto g = log_grid(10.0, 1e-6, 100);
    REQUIRE(g.size() == 100);
    CHECK(g.front() == 10.0);
    CHECK(g.back() == doctest::Approx(1e-5));
    for (std::size_t i = 1; i < g.size(); ++i) {
        CHECK(g[i] < g[i - 1]);
    }
}

TEST_CASE("schedule values") {
    CHECK(schedule_value(10000, 0.5) == doctest::Approx(100.0));
    CHECK(schedule_value(20, -1) == doctest::Approx(0.05));
    CHECK(schedule_value(5000, 2) == doctest::Approx(2.5e7));
}

TEST_CASE("fold assignment partitions rows evenly") {
    for (Index n : {10, 23, 101}) {
        for (int k : {2, 5, 10}) {
            const auto f = assign_folds(n, k, 99);
            REQUIRE(f.size() == static_cast<std::size_t>(n));
            std::vector<int> sizes(static_cast<std::size_t>(k), 0);
            for (int id : f) {
                REQUIRE(id >= 0);
                REQUIRE(id < k);
                ++sizes[static_cast<std::size_t>(id)];
            }
            const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
            CHECK(*hi - *lo <= 1);
            CHECK(f == assign_folds(n, k, 99));
        }
    }
    CHECK(assign_folds(50, 5, 1) != assign_folds(50, 5, 2));
    CHECK_THROWS_AS(assign_folds(5, 10, 1), ParameterError);
    CHECK_THROWS_AS(assign_folds(5, 1, 1), ParameterError);
}

TEST_CASE("cross-validation report shape and determinism") {
    const auto prob = sample_problem(default_true_model(), 60, 5);
    const auto src = sample_problem(default_true_model(), 400, 6);
    const Eigen::VectorXd bt = ols(src.design, src.response);
    CvOptions opt;
    opt.folds = 5;
    opt.seed = 3;
    const auto cands = default_candidates(Family::transfer_lasso, 20);
    const CvReport r = cross_validate(prob, cands, bt, opt);
    CHECK(r.cv_curve.size() == cands.size() * 20);
    CHECK(r.fold_assignments == assign_folds(60, 5, 3));
    double best = INFINITY;
    for (const auto& pt : r.cv_curve) {
        best = std::min(best, pt.mean_mse);
        CHECK(pt.stderr_mse >= 0.0);
    }
    CHECK(r.cv_curve[r.best_candidate * 20 + r.best_grid_index].mean_mse == best);
    // the first grid point (fully anchored fit) is never better than the minimum
    for (std::size_t c = 0; c < cands.size(); ++c) {
        CHECK(r.cv_curve[c * 20].mean_mse >= best);
    }
    CHECK(r.refit.converged);
    CHECK(identical(r.penalty, build_penalty(r.best, bt, 1e-3, r.best_kappa, 10)));
    const CvReport again = cross_validate(prob, cands, bt, opt);
    CHECK(again.refit.beta_hat == r.refit.beta_hat);
    CHECK(again.best_kappa == r.best_kappa);
}

TEST_CASE("cross-validation rejects empty folds") {
    const auto prob = sample_problem(default_true_model(), 20, 5);
    CvOptions opt;
    opt.folds = 4;
    std::vector<int> f(20, 0);
    for (int i = 0; i < 20; ++i) {
        f[static_cast<std::size_t>(i)] = i % 3; // fold 3 is empty
    }
    opt.fold_assignments = f;
    CHECK_THROWS_AS(cross_validate(prob, Family::lasso, std::nullopt, opt), ParameterError);
    CvOptions few;
    few.folds = 30;
    CHECK_THROWS_AS(cross_validate(prob, Family::lasso, std::nullopt, few), ParameterError);
}

TEST_CASE("pure noise selects heavy shrinkage") {
    TrueModel t = default_true_model();
    t.beta_star.setZero();
    t.sigma = 10.0;
    int top_decile = 0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
        const auto prob = sample_problem(t, 100, 500 + rep);
        CvOptions opt;
        opt.seed = rep;
        const CvReport r = cross_validate(prob, Family::lasso, std::nullopt, opt);
        if (r.best_grid_index < 10) {
            ++top_decile;
        }
    }
    CHECK(top_decile > 5);
}

TEST_CASE("duplicated rows keep the selected grid index") {
    const auto prob = sample_problem(default_true_model(), 40, 8);
    RegressionProblem twice;
    twice.design.resize(80, 10);
    twice.design << prob.design, prob.design;
    twice.response.resize(80);
    twice.response << prob.response, prob.response;
    CvOptions opt;
    opt.folds = 5;
    opt.fold_assignments = assign_folds(40, 5, 1);
    const CvReport a = cross_validate(prob, Family::lasso, std::nullopt, opt);
    std::vector<int> paired = *opt.fold_assignments;
    paired.insert(paired.end(), opt.fold_assignments->begin(), opt.fold_assignments->end());
    opt.fold_assignments = paired;
    const CvReport b = cross_validate(twice, Family::lasso, std::nullopt, opt);
    CHECK(a.best_grid_index == b.best_grid_index);
    CHECK(b.best_kappa == doctest::Approx(2.0 * a.best_kappa).epsilon(1e-9));
}

TEST_CASE("noiseless data selects the weakest penalty and recovers the truth") {
    TrueModel t = default_true_model();
    t.sigma = 0.0;
    const auto prob = sample_problem(t, 200, 9);
    CvOptions opt;
    const CvReport r = cross_validate(prob, Family::lasso, std::nullopt, opt);
    CHECK(r.best_grid_index == 99);
    CHECK((r.refit.beta_hat - t.beta_star).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("family names") {
    for (auto f : {Family::lasso, Family::adaptive_lasso, Family::transfer_lasso, Family::adaptive_transfer_lasso}) {
        CHECK(parse_family(to_string(f)) == f);
    }
    CHECK(parse_family("adaptive") == Family::adaptive_lasso);
    CHECK(parse_family("transfer") == Family::transfer_lasso);
    CHECK(parse_family("adaptive-transfer") == Family::adaptive_transfer_lasso);
    CHECK_THROWS_AS(parse_family("ridge"), ParameterError);
    CHECK_FALSE(needs_initial_estimate(Family::lasso));
    CHECK(needs_initial_estimate(Family::adaptive_lasso));
    CHECK(needs_initial_estimate(Family::transfer_lasso));
}
