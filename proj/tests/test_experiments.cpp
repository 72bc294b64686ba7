#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "atl/config.hpp"
#include "atl/error.hpp"
#include "atl/experiments.hpp"

using namespace atl;

namespace {

std::string header_of(const std::string& csv) { return csv.substr(0, csv.find('\n')); }

std::size_t line_count(const std::string& csv) {
    return static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
}

} // namespace

TEST_CASE("study names") {
    for (Study s : all_studies()) {
        CHECK(parse_study(to_string(s)) == s);
    }
    CHECK(parse_study("phase-diagram") == Study::phase_diagram);
    CHECK(parse_study("inconsistent-source") == Study::inconsistent_source);
    CHECK_THROWS_AS(parse_study("bogus"), ParameterError);
}

TEST_CASE("m rules") {
    CHECK(MRule::parse("square").resolve(70) == 4900);
    CHECK(MRule::parse("equal").resolve(70) == 70);
    CHECK(MRule::parse("10000").resolve(70) == 10000);
    CHECK(MRule::parse(MRule::parse("250").to_string()).resolve(3) == 250);
    CHECK_THROWS_AS(MRule::parse("cube"), ParameterError);
}

TEST_CASE("convergence schedules sit in their regions") {
    const auto sched = default_convergence_schedules();
    CHECK(sched.size() == 14);
    std::map<Family, int> per_family;
    for (const auto& s : sched) {
        CAPTURE(to_string(s.family));
        CAPTURE(s.region);
        CHECK(phase_region(s.family, s.delta_lambda, s.delta_eta, std::max(s.gamma1, 1.0),
                           std::max(s.gamma2, 1.0)) == s.region);
        ++per_family[s.family];
    }
    CHECK(per_family[Family::lasso] == 2);
    CHECK(per_family[Family::adaptive_lasso] == 3);
    CHECK(per_family[Family::transfer_lasso] == 3);
    CHECK(per_family[Family::adaptive_transfer_lasso] == 6);
}

TEST_CASE("phase regions and predicted slopes") {
    CHECK(phase_region(Family::transfer_lasso, 0.5, 0.75) == "i");
    CHECK(phase_region(Family::adaptive_transfer_lasso, 0.5, 1.5) == "ii");
    CHECK(phase_region(Family::transfer_lasso, -2, -2) == "ii");
    CHECK(phase_region(Family::transfer_lasso, 1.5, 0.0) == "");
    CHECK(expected_slope(Family::transfer_lasso, "i", 0.5) == -1.0);
    CHECK(expected_slope(Family::transfer_lasso, "ii", -2) == -0.5);
    CHECK(expected_slope(Family::lasso, "ii", 0.75) == doctest::Approx(-0.25));
    CHECK_THROWS_AS(expected_slope(Family::lasso, "", 2.0), ParameterError);
    CHECK(interior_cell(Family::transfer_lasso, -1.0, -1.0, 0.25));
    CHECK_FALSE(interior_cell(Family::transfer_lasso, 0.5, 0.5, 0.25));
}

TEST_CASE("default configs describe the full protocol") {
    const auto pd = default_config(Study::phase_diagram);
    CHECK(pd.delta_lambda.size() == 17);
    CHECK(pd.delta_eta.size() == 17);
    CHECK(pd.delta_lambda.front() == -2.0);
    CHECK(pd.delta_lambda.back() == 2.0);
    CHECK(pd.n_grid == std::vector<Index>{1000, 5000});
    const auto cv = default_config(Study::convergence);
    CHECK(cv.n_grid == std::vector<Index>{20, 50, 100, 200, 500, 1000, 2000, 5000});
    CHECK(cv.m_rule.kind == MRule::Kind::square);
    CHECK(cv.replicates == 10);
    const auto cmp = default_config(Study::comparison);
    CHECK(cmp.sigmas == std::vector<double>{1, 3, 6, 10});
    CHECK(cmp.dims == std::vector<Index>{10, 20, 50, 100});
    CHECK(cmp.m_rule.resolve(5) == 10000);
    CHECK(cmp.initial == InitialMethod::lasso);
    for (Study s : all_studies()) {
        CHECK_NOTHROW(default_config(s).validate());
    }
}

TEST_CASE("config keys") {
    const auto kv = KeyValueConfig::parse_string("seed = 5\nreplicates = 3\nstudy.convergence.n = 20,50\nstudy.convergence.slope_min_n = 20\n");
    const auto c = experiment_config_from(Study::convergence, kv);
    CHECK(c.seed == 5);
    CHECK(c.replicates == 3);
    CHECK(c.n_grid == std::vector<Index>{20, 50});

    const auto bad = KeyValueConfig::parse_string("study.convergence.bogus = 1\n");
    try {
        experiment_config_from(Study::convergence, bad);
        FAIL("unknown key accepted");
    } catch (const ParameterError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("study.convergence.bogus") != std::string::npos);
        CHECK(msg.find("study.convergence.n") != std::string::npos);
    }
    // keys of another study are not valid here
    CHECK_THROWS_AS(experiment_config_from(Study::convergence,
                                           KeyValueConfig::parse_string("study.comparison.sigma = 1\n")),
                    ParameterError);
    CHECK_THROWS_AS(experiment_config_from(Study::convergence, KeyValueConfig::parse_string("replicates = 0\n")),
                    ParameterError);
    CHECK_THROWS_AS(experiment_config_from(Study::convergence,
                                           KeyValueConfig::parse_string("study.convergence.n = 50,20\n")),
                    ParameterError);
    // the slope needs two sizes at or above slope_min_n
    CHECK_THROWS_AS(experiment_config_from(Study::convergence,
                                           KeyValueConfig::parse_string("study.convergence.n = 20,50\n")),
                    ParameterError);
}

TEST_CASE("resolved configs round trip") {
    for (Study s : all_studies()) {
        CAPTURE(to_string(s));
        const ExperimentConfig c = default_config(s);
        const KeyValueConfig kv = to_key_value(c);
        const ExperimentConfig back = experiment_config_from(s, kv);
        CHECK(to_key_value(back).to_string() == kv.to_string());
        for (const auto& [key, value] : kv.entries()) {
            (void)value;
            const auto valid = valid_config_keys(s);
            CHECK(std::find(valid.begin(), valid.end(), key) != valid.end());
        }
    }
}

TEST_CASE("parallel_for visits every index and propagates errors") {
    std::vector<int> hit(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 7) {
                                         throw ParameterError("boom");
                                     }
                                 }),
                    ParameterError);
}

TEST_CASE("small convergence run: schema, seeds, determinism") {
    ExperimentConfig c = default_config(Study::convergence);
    c.n_grid = {20, 50};
    c.slope_min_n = 20;
    c.replicates = 1;
    c.seed = 1;
    const SweepResult a = run_convergence(c);
    CHECK(header_of(a.to_csv()) == "study,region,n,m,method,metric,mean,stderr,replicates,excluded");
    // 14 schedules x (2 n + 1 slope)
    CHECK(a.rows.size() == 42);
    const ResultRow* r = a.find("transfer_lasso", "log_l2_error", {{"region", "i"}, {"n", "50"}, {"m", "2500"}});
    REQUIRE(r != nullptr);
    CHECK(std::isfinite(r->mean));
    CHECK(r->replicates == 1);
    CHECK(a.to_csv() == run_convergence(c).to_csv());
    ExperimentConfig c2 = c;
    c2.seed = 2;
    const SweepResult b = run_convergence(c2);
    CHECK(b.rows.size() == a.rows.size());
    CHECK(b.to_csv() != a.to_csv());
    ExperimentConfig par = c;
    par.jobs = 3;
    CHECK(run_convergence(par).to_csv() == a.to_csv());
}

TEST_CASE("phase diagram covers the 17 x 17 grid") {
    ExperimentConfig c = default_config(Study::phase_diagram);
    c.n_grid = {20, 40};
    c.replicates = 1;
    c.methods = {Family::transfer_lasso};
    const SweepResult r = run_phase_diagram(c);
    std::set<std::pair<std::string, std::string>> cells;
    for (const auto& row : r.rows) {
        cells.insert({row.coordinates[0], row.coordinates[1]});
    }
    CHECK(cells.size() == 289);
    CHECK(r.rows.size() == 289 * 3);
    const ResultRow* cell = r.find("transfer_lasso", "slope", {{"delta_lambda", "0.5"}, {"delta_eta", "0.75"}});
    REQUIRE(cell != nullptr);
    CHECK(cell->coordinates[2] == "i");
}

TEST_CASE("phase diagram corner with weak penalties behaves like least squares") {
    ExperimentConfig c = default_config(Study::phase_diagram);
    c.methods = {Family::transfer_lasso};
    c.delta_lambda = {-2.0};
    c.delta_eta = {-2.0};
    c.replicates = 10;
    const SweepResult r = run_phase_diagram(c);
    const ResultRow* slope = r.find("transfer_lasso", "slope", {});
    REQUIRE(slope != nullptr);
    CHECK(std::abs(slope->mean + 0.5) < 0.15);
}

TEST_CASE("comparison cell smoke run") {
    ExperimentConfig c = default_config(Study::comparison);
    c.sigmas = {1};
    c.dims = {10};
    c.n_grid = {100};
    c.replicates = 2;
    c.grid_size = 30;
    const SweepResult r = run_comparison(c);
    CHECK(header_of(r.to_csv()) == "study,sigma,p,n,m,initial,method,metric,mean,stderr,replicates,excluded");
    for (const char* m : {"lasso", "adaptive_lasso", "transfer_lasso", "adaptive_transfer_lasso"}) {
        for (const char* metric : {"l2_error", "rmse", "f1", "sensitivity", "specificity", "ppv", "n_active",
                                   "active_ratio"}) {
            CAPTURE(m);
            CAPTURE(metric);
            CHECK(r.find(m, metric, {{"n", "100"}}) != nullptr);
        }
    }
    CHECK(r.find("transfer_lasso", "invariant_ratio", {}) != nullptr);
    CHECK(r.find("lasso", "invariant_ratio", {}) == nullptr);
    CHECK(r.to_csv() == run_comparison(c).to_csv());
}

TEST_CASE("inconsistent source B hurts the adaptive lasso") {
    ExperimentConfig c = default_config(Study::inconsistent_source);
    c.sigmas = {1};
    c.dims = {10};
    c.n_grid = {500};
    c.cases = {'0', 'B'};
    c.methods = {Family::adaptive_lasso};
    c.grid_size = 50;
    const SweepResult r = run_inconsistent_source(c);
    const ResultRow* base = r.find("adaptive_lasso", "l2_error", {{"case", "none"}});
    const ResultRow* b = r.find("adaptive_lasso", "l2_error", {{"case", "B"}});
    REQUIRE(base != nullptr);
    REQUIRE(b != nullptr);
    CHECK(b->mean >= 1.2 * base->mean);
}

TEST_CASE("inconsistent source A keeps adaptive selection ahead of the lasso") {
    ExperimentConfig c = default_config(Study::inconsistent_source);
    c.sigmas = {1};
    c.dims = {10};
    c.n_grid = {200};
    c.cases = {'A'};
    c.grid_size = 50;
    const SweepResult r = run_inconsistent_source(c);
    const double lasso = r.find("lasso", "f1", {{"case", "A"}})->mean;
    CHECK(r.find("adaptive_lasso", "f1", {{"case", "A"}})->mean >= lasso);
    CHECK(r.find("adaptive_transfer_lasso", "f1", {{"case", "A"}})->mean >= lasso);
}

TEST_CASE("contour grid") {
    ExperimentConfig c = default_config(Study::contours);
    c.resolution = 5;
    c.extent_lo = 0.0;
    c.extent_hi = 2.0;
    const SweepResult r = run_contours(c);
    CHECK(r.rows.size() == 4 * 25);
    const ResultRow* at = r.find("adaptive_transfer_lasso", "penalty", {{"beta1", "1"}, {"beta2", "1"}});
    REQUIRE(at != nullptr);
    CHECK(at->mean == doctest::Approx(4.75));
    const ResultRow* origin = r.find("lasso", "penalty", {{"beta1", "0"}, {"beta2", "0"}});
    REQUIRE(origin != nullptr);
    CHECK(origin->mean == 0.0);
}

TEST_CASE("prior curves") {
    ExperimentConfig c = default_config(Study::priors);
    c.resolution = 11;
    const SweepResult r = run_priors(c);
    CHECK(r.rows.size() == 4 * 2 * 11);
    for (const auto& row : r.rows) {
        CHECK(row.mean > 0.0);
    }
}

TEST_CASE("CSV writer uses 17 significant digits") {
    SweepResult r;
    r.study = "x";
    r.coordinate_names = {"k"};
    r.rows.push_back(ResultRow{{"a"}, "lasso", "m", 0.1, 1.0 / 3.0, 2, 1});
    const std::string csv = r.to_csv();
    CHECK(csv == "study,k,method,metric,mean,stderr,replicates,excluded\n"
                 "x,a,lasso,m,0.10000000000000001,0.33333333333333331,2,1\n");
    CHECK(line_count(csv) == 2);
}
