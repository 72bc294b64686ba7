#include "atl/selection.hpp"

#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "atl/error.hpp"
#include "atl/initial.hpp"

namespace atl {
namespace {

// Fold shuffles use their own stream so they never overlap sampling streams.
constexpr std::uint64_t kFoldStream = 0xF0ULL << 24;

struct FoldData {
    Eigen::MatrixXd train_x;
    Eigen::VectorXd train_y;
    Eigen::MatrixXd valid_x;
    Eigen::VectorXd valid_y;
};

std::vector<FoldData> split_folds(const RegressionProblem& problem, const std::vector<int>& fold_of, int k) {
    std::vector<FoldData> folds(static_cast<std::size_t>(k));
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (int f : fold_of) {
        ++counts[static_cast<std::size_t>(f)];
    }
    const Index n = problem.n();
    const Index p = problem.p();
    for (int f = 0; f < k; ++f) {
        const Index nv = counts[static_cast<std::size_t>(f)];
        if (nv == 0) {
            throw ParameterError("fold " + std::to_string(f) + " has no rows");
        }
        if (nv == n) {
            throw ParameterError("fold " + std::to_string(f) + " leaves no training rows");
        }
        FoldData& d = folds[static_cast<std::size_t>(f)];
        d.train_x.resize(n - nv, p);
        d.train_y.resize(n - nv);
        d.valid_x.resize(nv, p);
        d.valid_y.resize(nv);
        Index it = 0, iv = 0;
        for (Index i = 0; i < n; ++i) {
            if (fold_of[static_cast<std::size_t>(i)] == f) {
                d.valid_x.row(iv) = problem.design.row(i);
                d.valid_y(iv++) = problem.response(i);
            } else {
                d.train_x.row(it) = problem.design.row(i);
                d.train_y(it++) = problem.response(i);
            }
        }
    }
    return folds;
}

} // namespace

std::string to_string(Family family) {
    switch (family) {
    case Family::lasso: return "lasso";
    case Family::adaptive_lasso: return "adaptive_lasso";
    case Family::transfer_lasso: return "transfer_lasso";
    case Family::adaptive_transfer_lasso: return "adaptive_transfer_lasso";
    }
    return "unknown";
}

Family parse_family(const std::string& name) {
    if (name == "lasso") return Family::lasso;
    if (name == "adaptive_lasso" || name == "adaptive") return Family::adaptive_lasso;
    if (name == "transfer_lasso" || name == "transfer") return Family::transfer_lasso;
    if (name == "adaptive_transfer_lasso" || name == "adaptive-transfer" || name == "adaptive_transfer") {
        return Family::adaptive_transfer_lasso;
    }
    throw ParameterError("unknown method '" + name +
                         "' (expected lasso, adaptive_lasso, transfer_lasso, adaptive_transfer_lasso)");
}

bool needs_initial_estimate(Family family) noexcept {
    return family != Family::lasso;
}

void MethodConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ParameterError("alpha must lie in (0, 1]");
    }
    if (!(grid_ratio > 0.0 && grid_ratio < 1.0)) {
        throw ParameterError("grid_ratio must lie in (0, 1)");
    }
    if (grid_size < 2) {
        throw ParameterError("grid_size must be at least 2");
    }
    if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0)) {
        throw ParameterError("gamma exponents must be nonnegative");
    }
}

std::string MethodConfig::label() const {
    std::ostringstream out;
    out << to_string(family);
    switch (family) {
    case Family::lasso: break;
    case Family::adaptive_lasso: out << "(gamma=" << gamma1 << ")"; break;
    case Family::transfer_lasso: out << "(alpha=" << alpha << ")"; break;
    case Family::adaptive_transfer_lasso:
        out << "(gamma1=" << gamma1 << ",gamma2=" << gamma2 << ",alpha=" << alpha << ")";
        break;
    }
    return out.str();
}

std::vector<MethodConfig> default_candidates(Family family, int grid_size, double grid_ratio) {
    static constexpr double kGammas[] = {0.5, 1.0, 2.0};
    static constexpr double kAlphas[] = {0.75, 0.5, 0.25};
    std::vector<MethodConfig> out;
    MethodConfig base;
    base.family = family;
    base.grid_size = grid_size;
    base.grid_ratio = grid_ratio;
    switch (family) {
    case Family::lasso:
        out.push_back(base);
        break;
    case Family::adaptive_lasso:
        for (double g : kGammas) {
            MethodConfig c = base;
            c.gamma1 = g;
            out.push_back(c);
        }
        break;
    case Family::transfer_lasso:
        for (double a : kAlphas) {
            MethodConfig c = base;
            c.alpha = a;
            out.push_back(c);
        }
        break;
    case Family::adaptive_transfer_lasso:
        for (double g : kGammas) {
            for (double a : kAlphas) {
                MethodConfig c = base;
                c.gamma1 = g;
                c.gamma2 = g;
                c.alpha = a;
                out.push_back(c);
            }
        }
        break;
    }
    return out;
}

PenaltySpec make_penalty(Family family, double gamma1, double gamma2, double lambda, double eta,
                         const std::optional<Eigen::VectorXd>& beta_tilde, double clip_floor, Index p) {
    if (!(lambda >= 0.0) || !(eta >= 0.0)) {
        throw ParameterError("penalty strengths must be nonnegative");
    }
    if (family != Family::lasso) {
        if (!beta_tilde) {
            throw ParameterError(to_string(family) + " needs an initial estimator");
        }
        if (beta_tilde->size() != p) {
            throw ParameterError("initial estimator length does not match p");
        }
    }
    PenaltySpec out;
    out.lambda = lambda;
    out.v = Eigen::VectorXd::Ones(p);
    out.w = Eigen::VectorXd::Ones(p);
    out.anchor = Eigen::VectorXd::Zero(p);
    switch (family) {
    case Family::lasso:
        break;
    case Family::adaptive_lasso:
        out.v = clip_small(*beta_tilde, clip_floor).array().pow(-gamma1).matrix();
        break;
    case Family::transfer_lasso:
        out.eta = eta;
        out.anchor = *beta_tilde;
        break;
    case Family::adaptive_transfer_lasso: {
        const Eigen::VectorXd mag = clip_small(*beta_tilde, clip_floor);
        out.eta = eta;
        out.v = mag.array().pow(-gamma1).matrix();
        out.w = mag.array().pow(gamma2).matrix();
        out.anchor = *beta_tilde;
        break;
    }
    }
    return out;
}

PenaltySpec build_penalty(const MethodConfig& config, const std::optional<Eigen::VectorXd>& beta_tilde,
                          double clip_floor, double kappa, Index p) {
    config.validate();
    if (!(kappa >= 0.0)) {
        throw ParameterError("kappa must be nonnegative");
    }
    if (config.family == Family::lasso || config.family == Family::adaptive_lasso) {
        return make_penalty(config.family, config.gamma1, config.gamma2, kappa, 0.0, beta_tilde, clip_floor, p);
    }
    return make_penalty(config.family, config.gamma1, config.gamma2, config.alpha * kappa,
                        (1.0 - config.alpha) * kappa, beta_tilde, clip_floor, p);
}

std::vector<double> log_grid(double kappa_max, double ratio, int size) {
    if (!(kappa_max > 0.0) || !(ratio > 0.0 && ratio < 1.0) || size < 2) {
        throw ParameterError("log grid needs kappa_max > 0, ratio in (0, 1) and at least two points");
    }
    std::vector<double> grid(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) {
        grid[static_cast<std::size_t>(i)] = kappa_max * std::pow(ratio, static_cast<double>(i) / (size - 1));
    }
    return grid;
}

double schedule_value(double n, double delta) {
    if (!(n >= 1.0)) {
        throw ParameterError("schedule needs n >= 1");
    }
    return std::pow(n, delta);
}

std::vector<int> assign_folds(Index n, int k, std::uint64_t seed) {
    if (k < 2 || n < k) {
        throw ParameterError("cross-validation needs 2 <= folds <= n (folds = " + std::to_string(k) +
                             ", n = " + std::to_string(n) + ")");
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Philox4x32 rng(seed, kFoldStream);
    for (Index i = n - 1; i > 0; --i) {
        boost::random::uniform_int_distribution<Index> pick(0, i);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (int f = 0; f < k; ++f) {
        const Index begin = f * n / k;
        const Index end = (f + 1) * n / k;
        for (Index pos = begin; pos < end; ++pos) {
            fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = f;
        }
    }
    return fold_of;
}

CvReport cross_validate(const RegressionProblem& problem, std::span<const MethodConfig> candidates,
                        const std::optional<Eigen::VectorXd>& beta_tilde, const CvOptions& options) {
    if (candidates.empty()) {
        throw ParameterError("cross-validation needs at least one candidate");
    }
    const Index n = problem.n();
    const Index p = problem.p();
    const int k = options.folds;
    CvReport report;
    if (options.fold_assignments) {
        if (static_cast<Index>(options.fold_assignments->size()) != n) {
            throw ParameterError("fold assignment length does not match n");
        }
        for (int f : *options.fold_assignments) {
            if (f < 0 || f >= k) {
                throw ParameterError("fold id out of range");
            }
        }
        report.fold_assignments = *options.fold_assignments;
    } else {
        report.fold_assignments = assign_folds(n, k, options.seed);
    }
    const std::vector<FoldData> folds = split_folds(problem, report.fold_assignments, k);

    FitOptions path_options = options.fit;
    path_options.warm_start.reset();

    bool have_best = false;
    CvPoint best;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const MethodConfig& config = candidates[c];
        config.validate();
        // Shape at unit strength gives the weights and anchor; strength is applied per grid point.
        const PenaltySpec shape = build_penalty(config, beta_tilde, options.clip_floor, 1.0, p);
        const double alpha = (config.family == Family::lasso || config.family == Family::adaptive_lasso)
                                 ? 1.0
                                 : config.alpha;
        const double kmax = lambda_max(problem, shape.v, shape.w, shape.anchor, alpha, path_options);
        const std::vector<double> grid = log_grid(kmax, config.grid_ratio, config.grid_size);

        Eigen::MatrixXd mse(grid.size(), k);
        for (int f = 0; f < k; ++f) {
            const FoldData& d = folds[static_cast<std::size_t>(f)];
            FitOptions fo = path_options;
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const PenaltySpec pen = build_penalty(config, beta_tilde, options.clip_floor, grid[g], p);
                const FitResult r = fit(d.train_x, d.train_y, pen, fo);
                if (!r.converged) {
                    ++report.nonconverged_fits;
                }
                fo.warm_start = r.beta_hat;
                mse(static_cast<Index>(g), f) =
                    (d.valid_y - d.valid_x * r.beta_hat).squaredNorm() / static_cast<double>(d.valid_y.size());
            }
        }
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto row = mse.row(static_cast<Index>(g));
            CvPoint pt;
            pt.candidate = c;
            pt.grid_index = g;
            pt.kappa = grid[g];
            pt.mean_mse = row.mean();
            const double var = (row.array() - pt.mean_mse).square().sum() / (k - 1);
            pt.stderr_mse = std::sqrt(var / k);
            report.cv_curve.push_back(pt);
            if (!have_best || pt.mean_mse < best.mean_mse || (pt.mean_mse == best.mean_mse && pt.kappa > best.kappa)) {
                best = pt;
                have_best = true;
            }
        }
    }

    report.best = candidates[best.candidate];
    report.best_candidate = best.candidate;
    report.best_grid_index = best.grid_index;
    report.best_kappa = best.kappa;
    report.penalty = build_penalty(report.best, beta_tilde, options.clip_floor, best.kappa, p);
    report.refit = fit(problem, report.penalty, path_options);
    if (!report.refit.converged) {
        ++report.nonconverged_fits;
    }
    return report;
}

CvReport cross_validate(const RegressionProblem& problem, Family family,
                        const std::optional<Eigen::VectorXd>& beta_tilde, const CvOptions& options) {
    const std::vector<MethodConfig> candidates = default_candidates(family);
    return cross_validate(problem, candidates, beta_tilde, options);
}

} // namespace atl
