#include <algorithm>
#include <iterator>
#include <optional>
#include <cmath>
#include <limits>

#include "atl/error.hpp"
#include "atl/experiments.hpp"
#include "atl/priors.hpp"
#include "atl/solver.hpp"

namespace atl {
namespace {

struct Outcome {
    double value = 0.0;
    bool ok = false;
};

// Mean/stderr over the replicates flagged ok; the rest count as excluded.
ResultRow aggregate(std::vector<std::string> coords, std::string method, std::string metric,
                    const std::vector<Outcome>& outcomes) {
    std::vector<double> kept;
    int excluded = 0;
    for (const auto& o : outcomes) {
        if (o.ok) {
            kept.push_back(o.value);
        } else {
            ++excluded;
        }
    }
    const MeanStderr s = summarize(kept);
    ResultRow row;
    row.coordinates = std::move(coords);
    row.method = std::move(method);
    row.metric = std::move(metric);
    row.mean = s.mean;
    row.std_error = s.std_error;
    row.replicates = static_cast<int>(kept.size());
    row.excluded = excluded;
    return row;
}

std::uint16_t cell_id(std::size_t index) {
    if (index > std::numeric_limits<std::uint16_t>::max()) {
        throw ParameterError("too many cells for the stream layout");
    }
    return static_cast<std::uint16_t>(index);
}

std::uint32_t replicate_id(int r) {
    return static_cast<std::uint32_t>(r);
}

TrueModel truth_for(const TrueModel& base, Index p, double sigma) {
    TrueModel t = base;
    t.beta_star = Eigen::VectorXd::Zero(p);
    const Index keep = std::min(p, base.p());
    t.beta_star.head(keep) = base.beta_star.head(keep);
    t.sigma = sigma;
    return t;
}

std::string n_text(Index n) {
    return std::to_string(n);
}

} // namespace

// ---------------------------------------------------------------------------

SweepResult run_convergence(const ExperimentConfig& config) {
    config.validate();
    const std::size_t nn = config.n_grid.size();
    const std::size_t ns = config.schedules.size();
    const std::size_t reps = static_cast<std::size_t>(config.replicates);
    const Index p = config.truth.p();

    // log l2 error per (replicate, n, schedule)
    std::vector<Outcome> log_err(reps * nn * ns);
    parallel_for(reps * nn, config.jobs, [&](std::size_t task) {
        const std::size_t r = task / nn;
        const std::size_t ni = task % nn;
        const Index n = config.n_grid[ni];
        const StreamKey key{config.seed, replicate_id(static_cast<int>(r)), Role::target, cell_id(ni)};
        const NormalEquations ne =
            accumulate_normal_equations(config.truth, config.m_rule.resolve(n), key.with_role(Role::source));
        const Eigen::VectorXd beta_tilde = ols(ne);
        const RegressionProblem target = sample_problem(config.truth, n, key);
        for (std::size_t s = 0; s < ns; ++s) {
            const PenaltySpec pen =
                scheduled_penalty(config.schedules[s], beta_tilde, config.clip_floor, static_cast<double>(n), p);
            const FitResult fr = fit(target, pen);
            Outcome& o = log_err[(r * nn + ni) * ns + s];
            o.value = std::log((fr.beta_hat - config.truth.beta_star).norm());
            o.ok = fr.converged;
        }
    });

    SweepResult out;
    out.study = to_string(Study::convergence);
    out.coordinate_names = {"region", "n", "m"};
    std::vector<double> slope_n;
    for (Index n : config.n_grid) {
        if (n >= config.slope_min_n) {
            slope_n.push_back(static_cast<double>(n));
        }
    }
    const std::string slope_range = std::to_string(static_cast<Index>(slope_n.front())) + "-" +
                                    std::to_string(static_cast<Index>(slope_n.back()));
    for (std::size_t s = 0; s < ns; ++s) {
        const ScheduledMethod& sm = config.schedules[s];
        const std::string method = to_string(sm.family);
        for (std::size_t ni = 0; ni < nn; ++ni) {
            std::vector<Outcome> column;
            for (std::size_t r = 0; r < reps; ++r) {
                column.push_back(log_err[(r * nn + ni) * ns + s]);
            }
            const Index n = config.n_grid[ni];
            out.rows.push_back(aggregate({sm.region, n_text(n), n_text(config.m_rule.resolve(n))}, method,
                                         "log_l2_error", column));
        }
        std::vector<Outcome> slopes;
        for (std::size_t r = 0; r < reps; ++r) {
            std::vector<double> ys;
            bool ok = true;
            for (std::size_t ni = 0; ni < nn; ++ni) {
                if (config.n_grid[ni] < config.slope_min_n) {
                    continue;
                }
                const Outcome& o = log_err[(r * nn + ni) * ns + s];
                ok = ok && o.ok;
                ys.push_back(o.value);
            }
            slopes.push_back({ok ? loglog_slope(slope_n, ys) : 0.0, ok});
        }
        out.rows.push_back(aggregate({sm.region, slope_range, ""}, method, "slope", slopes));
    }
    return out;
}

// ---------------------------------------------------------------------------

SweepResult run_phase_diagram(const ExperimentConfig& config) {
    config.validate();
    const std::size_t reps = static_cast<std::size_t>(config.replicates);
    const std::size_t nm = config.methods.size();
    const std::size_t na = config.delta_lambda.size();
    const std::size_t nb = config.delta_eta.size();
    const std::size_t cells = na * nb;
    const Index p = config.truth.p();

    struct CellFit {
        double log_err = 0.0;
        double active = 0.0;
        double invariant = 0.0;
        bool ok = false;
    };
    // (replicate, n index, method, cell)
    std::vector<CellFit> fits(reps * 2 * nm * cells);
    auto slot = [&](std::size_t r, std::size_t ni, std::size_t mi, std::size_t c) -> CellFit& {
        return fits[((r * 2 + ni) * nm + mi) * cells + c];
    };

    parallel_for(reps * 2, config.jobs, [&](std::size_t task) {
        const std::size_t r = task / 2;
        const std::size_t ni = task % 2;
        const Index n = config.n_grid[ni];
        const StreamKey key{config.seed, replicate_id(static_cast<int>(r)), Role::target, cell_id(ni)};
        const NormalEquations ne =
            accumulate_normal_equations(config.truth, config.m_rule.resolve(n), key.with_role(Role::source));
        const Eigen::VectorXd beta_tilde = ols(ne);
        const RegressionProblem target = sample_problem(config.truth, n, key);
        for (std::size_t mi = 0; mi < nm; ++mi) {
            const Family family = config.methods[mi];
            const bool adaptive = family == Family::adaptive_transfer_lasso;
            for (std::size_t ia = 0; ia < na; ++ia) {
                for (std::size_t ib = 0; ib < nb; ++ib) {
                    const ScheduledMethod sm{family, "", config.delta_lambda[ia], config.delta_eta[ib],
                                             adaptive ? config.gamma1 : 0.0, adaptive ? config.gamma2 : 0.0};
                    const PenaltySpec pen =
                        scheduled_penalty(sm, beta_tilde, config.clip_floor, static_cast<double>(n), p);
                    const FitResult fr = fit(target, pen);
                    CellFit& cf = slot(r, ni, mi, ia * nb + ib);
                    cf.log_err = std::log((fr.beta_hat - config.truth.beta_star).norm());
                    cf.active = selection_scores(fr.beta_hat, config.truth.beta_star).active_ratio;
                    cf.invariant =
                        invariant_ratio(fr.beta_hat, beta_tilde, config.truth.beta_star).value_or(0.0);
                    cf.ok = fr.converged;
                }
            }
        }
    });

    SweepResult out;
    out.study = to_string(Study::phase_diagram);
    out.coordinate_names = {"delta_lambda", "delta_eta", "region"};
    const double log_ratio = std::log(static_cast<double>(config.n_grid[1]) / static_cast<double>(config.n_grid[0]));
    for (std::size_t mi = 0; mi < nm; ++mi) {
        const Family family = config.methods[mi];
        const bool adaptive = family == Family::adaptive_transfer_lasso;
        for (std::size_t ia = 0; ia < na; ++ia) {
            for (std::size_t ib = 0; ib < nb; ++ib) {
                const std::size_t c = ia * nb + ib;
                const double a = config.delta_lambda[ia];
                const double b = config.delta_eta[ib];
                const std::string region = phase_region(family, a, b, adaptive ? config.gamma1 : 0.0,
                                                        adaptive ? config.gamma2 : 0.0);
                std::vector<Outcome> slope, active, invariant;
                for (std::size_t r = 0; r < reps; ++r) {
                    const CellFit& small = slot(r, 0, mi, c);
                    const CellFit& large = slot(r, 1, mi, c);
                    slope.push_back({(large.log_err - small.log_err) / log_ratio, small.ok && large.ok});
                    active.push_back({large.active, large.ok});
                    invariant.push_back({large.invariant, large.ok});
                }
                const std::vector<std::string> coords = {coordinate_text(a), coordinate_text(b),
                                                         region.empty() ? "none" : region};
                const std::string method = to_string(family);
                out.rows.push_back(aggregate(coords, method, "slope", slope));
                out.rows.push_back(aggregate(coords, method, "active_ratio", active));
                out.rows.push_back(aggregate(coords, method, "invariant_ratio", invariant));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

SweepResult comparison_sweep(const ExperimentConfig& config, Study study) {
    config.validate();
    const std::vector<char> cases = study == Study::inconsistent_source ? config.cases : std::vector<char>{'0'};
    const std::size_t nc = cases.size();
    const std::size_t nsig = config.sigmas.size();
    const std::size_t np = config.dims.size();
    const std::size_t nn = config.n_grid.size();
    const std::size_t nm = config.methods.size();
    const std::size_t reps = static_cast<std::size_t>(config.replicates);
    const std::size_t groups = nsig * np;
    const bool shared_source = config.m_rule.kind == MRule::Kind::fixed;

    static const char* kMetrics[] = {"l2_error", "rmse",     "f1",           "sensitivity",    "specificity",
                                     "ppv",      "n_active", "active_ratio", "invariant_ratio"};
    constexpr std::size_t kMetricCount = std::size(kMetrics);

    std::vector<std::vector<MethodConfig>> candidates;
    for (Family f : config.methods) {
        candidates.push_back(default_candidates(f, config.grid_size, config.grid_ratio));
    }

    // (case, group, replicate, n, method, metric)
    const std::size_t per_task = nn * nm * kMetricCount;
    std::vector<Outcome> values(nc * groups * reps * per_task);
    parallel_for(nc * groups * reps, config.jobs, [&](std::size_t task) {
        const std::size_t ci = task / (groups * reps);
        const std::size_t g = (task / reps) % groups;
        const std::size_t r = task % reps;
        const double sigma = config.sigmas[g / np];
        const Index p = config.dims[g % np];
        const TrueModel truth = truth_for(config.truth, p, sigma);
        TrueModel source_truth = truth;
        if (cases[ci] != '0') {
            source_truth.beta_star = inconsistent_source_beta(truth, cases[ci]);
        }
        const std::uint32_t rep = replicate_id(static_cast<int>(r));

        std::optional<Eigen::VectorXd> shared_tilde;
        auto initial_for = [&](std::size_t ni) {
            const std::uint16_t cell = cell_id(shared_source ? g : g * nn + ni);
            const StreamKey skey{config.seed, rep, Role::source, cell};
            const RegressionProblem source =
                sample_problem(source_truth, config.m_rule.resolve(config.n_grid[ni]), skey);
            InitialEstimatorSpec spec;
            spec.method = config.initial;
            spec.clip = config.clip_floor;
            spec.folds = config.folds;
            spec.cv_seed = derive_seed(config.seed, rep, cell, 1u);
            return estimate_initial(source, spec);
        };
        if (shared_source) {
            shared_tilde = initial_for(0);
        }
        const RegressionProblem test =
            sample_problem(truth, config.test_size, StreamKey{config.seed, rep, Role::test, cell_id(g)});

        for (std::size_t ni = 0; ni < nn; ++ni) {
            const Index n = config.n_grid[ni];
            const std::uint16_t cell = cell_id(g * nn + ni);
            const RegressionProblem target = sample_problem(truth, n, StreamKey{config.seed, rep, Role::target, cell});
            const Eigen::VectorXd beta_tilde = shared_source ? *shared_tilde : initial_for(ni);
            CvOptions options;
            options.folds = config.folds;
            options.seed = derive_seed(config.seed, rep, cell, 2u);
            options.clip_floor = config.clip_floor;
            for (std::size_t mi = 0; mi < nm; ++mi) {
                const Family family = config.methods[mi];
                const std::optional<Eigen::VectorXd> bt =
                    family == Family::lasso ? std::nullopt : std::optional<Eigen::VectorXd>(beta_tilde);
                const CvReport cv = cross_validate(target, candidates[mi], bt, options);
                const bool anchored = family == Family::transfer_lasso || family == Family::adaptive_transfer_lasso;
                const MetricsRecord m = evaluate(cv.refit.beta_hat, truth.beta_star,
                                                 anchored ? bt : std::nullopt, &test);
                const bool ok = cv.refit.converged;
                const double metric_values[kMetricCount] = {m.l2_error,
                                                            m.rmse.value_or(0.0),
                                                            m.f1,
                                                            m.sensitivity,
                                                            m.specificity,
                                                            m.ppv,
                                                            static_cast<double>(m.n_active),
                                                            m.active_ratio,
                                                            m.invariant_ratio.value_or(0.0)};
                Outcome* base = &values[task * per_task + (ni * nm + mi) * kMetricCount];
                for (std::size_t k = 0; k < kMetricCount; ++k) {
                    const bool defined = k != kMetricCount - 1 || m.invariant_ratio.has_value();
                    base[k] = {metric_values[k], ok && defined};
                }
            }
        }
    });

    SweepResult out;
    out.study = to_string(study);
    if (study == Study::inconsistent_source) {
        out.coordinate_names = {"case", "sigma", "p", "n", "m", "initial"};
    } else {
        out.coordinate_names = {"sigma", "p", "n", "m", "initial"};
    }
    for (std::size_t ci = 0; ci < nc; ++ci) {
        for (std::size_t g = 0; g < groups; ++g) {
            for (std::size_t ni = 0; ni < nn; ++ni) {
                const Index n = config.n_grid[ni];
                std::vector<std::string> coords = {coordinate_text(config.sigmas[g / np]),
                                                   n_text(config.dims[g % np]), n_text(n),
                                                   n_text(config.m_rule.resolve(n)), to_string(config.initial)};
                if (study == Study::inconsistent_source) {
                    coords.insert(coords.begin(), cases[ci] == '0' ? "none" : std::string(1, cases[ci]));
                }
                for (std::size_t mi = 0; mi < nm; ++mi) {
                    const Family family = config.methods[mi];
                    const bool anchored =
                        family == Family::transfer_lasso || family == Family::adaptive_transfer_lasso;
                    for (std::size_t k = 0; k < kMetricCount; ++k) {
                        if (k == kMetricCount - 1 && !anchored) {
                            continue;
                        }
                        std::vector<Outcome> column;
                        for (std::size_t r = 0; r < reps; ++r) {
                            const std::size_t task = (ci * groups + g) * reps + r;
                            column.push_back(values[task * per_task + (ni * nm + mi) * kMetricCount + k]);
                        }
                        out.rows.push_back(aggregate(coords, to_string(family), kMetrics[k], column));
                    }
                }
            }
        }
    }
    return out;
}

struct WeightedMethod {
    Family family;
    double lambda;
    double eta;
    double gamma1;
    double gamma2;
};

WeightedMethod weighted_method(Family family, const ExperimentConfig& config) {
    switch (family) {
    case Family::lasso: return {family, config.lambda, 0.0, 0.0, 0.0};
    case Family::adaptive_lasso: return {family, config.lambda, 0.0, config.gamma1, 0.0};
    case Family::transfer_lasso: return {family, config.lambda, config.eta, 0.0, 0.0};
    case Family::adaptive_transfer_lasso: return {family, config.lambda, config.eta, config.gamma1, config.gamma2};
    }
    throw InternalError("unhandled family");
}

double axis_point(const ExperimentConfig& config, int i) {
    return config.extent_lo + (config.extent_hi - config.extent_lo) * i / (config.resolution - 1);
}

} // namespace

SweepResult run_comparison(const ExperimentConfig& config) {
    return comparison_sweep(config, Study::comparison);
}

SweepResult run_inconsistent_source(const ExperimentConfig& config) {
    return comparison_sweep(config, Study::inconsistent_source);
}

SweepResult run_contours(const ExperimentConfig& config) {
    config.validate();
    SweepResult out;
    out.study = to_string(Study::contours);
    out.coordinate_names = {"beta1", "beta2"};
    for (Family family : config.methods) {
        const WeightedMethod wm = weighted_method(family, config);
        for (int i = 0; i < config.resolution; ++i) {
            for (int j = 0; j < config.resolution; ++j) {
                const Eigen::Vector2d beta(axis_point(config, i), axis_point(config, j));
                ResultRow row;
                row.coordinates = {coordinate_text(beta(0)), coordinate_text(beta(1))};
                row.method = to_string(family);
                row.metric = "penalty";
                row.mean = contour_value(beta, wm.lambda, wm.eta, wm.gamma1, wm.gamma2, config.contour_anchor,
                                         config.clip_floor);
                row.replicates = 1;
                out.rows.push_back(std::move(row));
            }
        }
    }
    return out;
}

SweepResult run_priors(const ExperimentConfig& config) {
    config.validate();
    SweepResult out;
    out.study = to_string(Study::priors);
    out.coordinate_names = {"beta_tilde", "b"};
    for (Family family : config.methods) {
        const WeightedMethod wm = weighted_method(family, config);
        for (double anchor : config.prior_anchors) {
            const double mag = std::max(std::abs(anchor), config.clip_floor);
            const double v = std::pow(mag, -wm.gamma1);
            const double w = std::pow(mag, wm.gamma2);
            // The Lasso and Adaptive Lasso priors are centred at 0 only.
            const double centre = wm.eta > 0.0 ? anchor : 0.0;
            for (int i = 0; i < config.resolution; ++i) {
                const double b = axis_point(config, i);
                ResultRow row;
                row.coordinates = {coordinate_text(anchor), coordinate_text(b)};
                row.method = to_string(family);
                row.metric = "density";
                row.mean = prior_density(b, wm.lambda, wm.eta, v, w, centre);
                row.replicates = 1;
                out.rows.push_back(std::move(row));
            }
        }
    }
    return out;
}

} // namespace atl
