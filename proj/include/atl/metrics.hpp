#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

#include "atl/datagen.hpp"

namespace atl {

struct SelectionScores {
    double f1 = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double ppv = 0.0;
    Index n_active = 0;
    double active_ratio = 0.0;
};

/**
 * Support recovery scores of beta_hat against the true support S = {j : beta*_j != 0}.
 *
 * Empty selection: ppv = 1 if S is empty, else 0. Empty S: sensitivity = 1.
 * Empty S^c: specificity = 1. f1 = 0 whenever ppv * sensitivity = 0.
 */
SelectionScores selection_scores(const Eigen::Ref<const Eigen::VectorXd>& beta_hat,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta_star);

/// Fraction of j in S with beta_hat_j == beta_tilde_j exactly; empty when S is empty.
std::optional<double> invariant_ratio(const Eigen::Ref<const Eigen::VectorXd>& beta_hat,
                                      const Eigen::Ref<const Eigen::VectorXd>& beta_tilde,
                                      const Eigen::Ref<const Eigen::VectorXd>& beta_star);

/// OLS slope of log_error against log n. Needs at least two distinct n.
double loglog_slope(std::span<const double> n, std::span<const double> log_error);

/// sqrt(mean((y - X beta)^2)) on a held-out problem.
double prediction_rmse(const Eigen::Ref<const Eigen::VectorXd>& beta_hat, const RegressionProblem& test);

struct MetricsRecord {
    double l2_error = 0.0;
    std::optional<double> rmse;
    double f1 = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double ppv = 0.0;
    Index n_active = 0;
    double active_ratio = 0.0;
    std::optional<double> invariant_ratio;
};

/// All metrics of one fit. rmse needs `test`; invariant_ratio needs `beta_tilde`.
MetricsRecord evaluate(const Eigen::Ref<const Eigen::VectorXd>& beta_hat, const Eigen::VectorXd& beta_star,
                       const std::optional<Eigen::VectorXd>& beta_tilde, const RegressionProblem* test);

struct MeanStderr {
    double mean = 0.0;
    double std_error = 0.0; ///< sample sd / sqrt(count); 0 for a single value
    std::size_t count = 0;
};

/// Mean and standard error of the mean. Empty input gives count 0 and NaN mean.
MeanStderr summarize(std::span<const double> values);

} // namespace atl
