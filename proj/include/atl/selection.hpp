#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atl/datagen.hpp"
#include "atl/solver.hpp"

namespace atl {

enum class Family { lasso, adaptive_lasso, transfer_lasso, adaptive_transfer_lasso };

std::string to_string(Family family);
/// Accepts the canonical names plus the short CLI spellings (adaptive, transfer, adaptive-transfer).
Family parse_family(const std::string& name);
/// Every family but the Lasso takes an initial estimate (for weights, anchor or both).
bool needs_initial_estimate(Family family) noexcept;

/// One point of the hyperparameter search space. `gamma1` is the Adaptive Lasso
/// gamma for that family; `alpha` = lambda / (lambda + eta) for the transfer families.
struct MethodConfig {
    Family family = Family::lasso;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double alpha = 1.0;
    int grid_size = 100;
    double grid_ratio = 1e-6;

    void validate() const;
    std::string label() const;
};

/// Candidate settings searched by cross-validation:
/// gamma in {0.5, 1, 2}; alpha in {0.75, 0.5, 0.25}; (gamma1, gamma2) in {(.5,.5), (1,1), (2,2)} x alpha.
std::vector<MethodConfig> default_candidates(Family family, int grid_size = 100, double grid_ratio = 1e-6);

/// Family-specific weights at explicit strengths. The Lasso ignores beta_tilde,
/// the Adaptive Lasso uses it for weights only (anchor 0); eta is dropped for both.
PenaltySpec make_penalty(Family family, double gamma1, double gamma2, double lambda, double eta,
                         const std::optional<Eigen::VectorXd>& beta_tilde, double clip_floor, Index p);

/// Family-specific (lambda, eta, v, w, anchor) at total strength kappa.
PenaltySpec build_penalty(const MethodConfig& config, const std::optional<Eigen::VectorXd>& beta_tilde,
                          double clip_floor, double kappa, Index p);

/// kappa_max * ratio^(i / (size - 1)), i = 0..size-1; strictly decreasing.
std::vector<double> log_grid(double kappa_max, double ratio, int size);

/// n^delta.
double schedule_value(double n, double delta);

/// Seeded shuffle, then contiguous blocks; fold sizes differ by at most one.
std::vector<int> assign_folds(Index n, int k, std::uint64_t seed);

struct CvPoint {
    std::size_t candidate = 0;
    std::size_t grid_index = 0;
    double kappa = 0.0;
    double mean_mse = 0.0;
    double stderr_mse = 0.0;
};

struct CvReport {
    MethodConfig best;
    std::size_t best_candidate = 0;
    std::size_t best_grid_index = 0;
    double best_kappa = 0.0;
    std::vector<CvPoint> cv_curve;
    std::vector<int> fold_assignments; ///< fold id of each row
    PenaltySpec penalty;               ///< penalty of the selected point
    FitResult refit;                   ///< fit on all rows at the selected point
    int nonconverged_fits = 0;
};

struct CvOptions {
    int folds = 10;
    std::uint64_t seed = 0;
    double clip_floor = 1e-3;
    /// Overrides the seeded fold assignment (fold id per row).
    std::optional<std::vector<int>> fold_assignments;
    FitOptions fit;
};

/**
 * k-fold cross-validation over candidates x log-spaced kappa grid.
 *
 * For every candidate, kappa_max comes from lambda_max on all rows and the grid
 * is walked from largest to smallest with warm starts. The selected point
 * minimises mean validation MSE (ties go to the larger kappa), then is refitted
 * on all rows.
 */
CvReport cross_validate(const RegressionProblem& problem, std::span<const MethodConfig> candidates,
                        const std::optional<Eigen::VectorXd>& beta_tilde, const CvOptions& options);

/// Cross-validates the full search space of `family`.
CvReport cross_validate(const RegressionProblem& problem, Family family,
                        const std::optional<Eigen::VectorXd>& beta_tilde, const CvOptions& options);

} // namespace atl
