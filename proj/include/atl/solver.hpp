#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "atl/datagen.hpp"

namespace atl {

/**
 * Penalty of the anchored weighted-L1 objective
 *
 *   (1/n)||y - X b||^2 + (lambda/n) sum_j v_j |b_j| + (eta/n) sum_j w_j |b_j - anchor_j|.
 *
 * Lasso: eta = 0, v = 1. Adaptive Lasso: eta = 0, v_j = 1/|anchor_j|^gamma.
 * Transfer Lasso: v = w = 1. Adaptive Transfer Lasso: v_j = 1/|anchor_j|^gamma1,
 * w_j = |anchor_j|^gamma2.
 */
struct PenaltySpec {
    double lambda = 0.0;
    double eta = 0.0;
    Eigen::VectorXd v;
    Eigen::VectorXd w;
    Eigen::VectorXd anchor;

    Index p() const noexcept { return v.size(); }
    /// Throws ParameterError unless strengths and weights are nonnegative and all vectors have length p.
    void validate(Index p) const;

    /// lambda = kappa_l, eta = kappa_e, unit weights, given anchor.
    static PenaltySpec uniform(Index p, double lambda, double eta, Eigen::VectorXd anchor);
};

/// Bitwise equality of every field.
bool identical(const PenaltySpec& a, const PenaltySpec& b) noexcept;

struct FitOptions {
    /// Sweeps stop once max |change| < tolerance * (1 + ||beta||_inf).
    double tolerance = 1e-10;
    int max_sweeps = 100000;
    /// A fit is only reported converged when its KKT residual is at most this.
    double certification_tolerance = 1e-8;
    std::optional<Eigen::VectorXd> warm_start;
};

struct FitResult {
    Eigen::VectorXd beta_hat;
    Eigen::VectorXd anchor;
    int iterations = 0;
    bool converged = false;
    double kkt_residual = 0.0;
    double objective = 0.0;

    /// {j : beta_hat_j != 0}
    std::vector<Index> active_set() const;
    /// {j : beta_hat_j == anchor_j}, exact comparison.
    std::vector<Index> anchored_set() const;
};

/**
 * Exact minimiser of f(b) = a b^2 - 2 c b + p_w |b| + q_w |b - t| for a > 0.
 *
 * f is strictly convex and piecewise quadratic with kinks at 0 and t. When the
 * minimiser is a kink the kink itself is returned (bit-equal to 0 or t); the
 * kink at 0 is tested first.
 */
double prox_two_kink(double a, double c, double p_w, double q_w, double t);

/// Value of the anchored weighted-L1 objective.
double objective_value(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const PenaltySpec& penalty, const Eigen::Ref<const Eigen::VectorXd>& beta);
double objective_value(const RegressionProblem& problem, const PenaltySpec& penalty,
                       const Eigen::Ref<const Eigen::VectorXd>& beta);

/// Cyclic coordinate descent with an incrementally maintained residual.
/// Never throws on non-convergence; check FitResult::converged.
FitResult fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
              const PenaltySpec& penalty, const FitOptions& options = {});
FitResult fit(const RegressionProblem& problem, const PenaltySpec& penalty, const FitOptions& options = {});

/**
 * Largest violation of the subgradient optimality conditions at beta.
 *
 * With g_j = -(2/n) x_j^T (y - X beta), coordinate j is optimal when -g_j lies in
 * (lambda v_j/n) d|beta_j| + (eta w_j/n) d|beta_j - anchor_j|; the violation is
 * the distance from -g_j to that interval.
 */
double kkt_certificate(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const PenaltySpec& penalty, const Eigen::Ref<const Eigen::VectorXd>& beta);
double kkt_certificate(const RegressionProblem& problem, const PenaltySpec& penalty,
                       const Eigen::Ref<const Eigen::VectorXd>& beta);

/// True when every beta_j is exactly 0 or exactly anchor_j.
bool fully_anchored(const Eigen::Ref<const Eigen::VectorXd>& beta, const Eigen::Ref<const Eigen::VectorXd>& anchor);

/**
 * True when every beta_j minimises its own penalty term
 * alpha v_j |b| + (1 - alpha) w_j |b - anchor_j|: 0 when the first weight is larger,
 * anchor_j when the second is, and anywhere on [0, anchor_j] when they tie
 * (relative difference <= 1e-12). Without ties this is fully_anchored with the
 * side fixed by the weights.
 */
bool at_penalty_minimum(const Eigen::Ref<const Eigen::VectorXd>& beta, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& w, const Eigen::VectorXd& anchor, double alpha);

/**
 * Smallest total strength kappa = lambda + eta (on a doubling ladder) at which the
 * fit with lambda = alpha kappa, eta = (1 - alpha) kappa has reached its
 * large-kappa limit (at_penalty_minimum). Without weight ties that fit is fully anchored.
 *
 * Starts from kappa_0 = 2 max_j(|x_j^T y| + [alpha < 1] |x_j^T (y - X anchor)|) / max(alpha, 1 - alpha)
 * and doubles until a converged fit passes the check.
 */
double lambda_max(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                  const Eigen::VectorXd& v, const Eigen::VectorXd& w, const Eigen::VectorXd& anchor, double alpha,
                  const FitOptions& options = {});
double lambda_max(const RegressionProblem& problem, const Eigen::VectorXd& v, const Eigen::VectorXd& w,
                  const Eigen::VectorXd& anchor, double alpha, const FitOptions& options = {});

/// Process-wide fit counters, used to audit certification across whole runs.
struct SolverStatistics {
    std::uint64_t fits = 0;
    std::uint64_t converged = 0;
    double max_converged_kkt = 0.0;
};
SolverStatistics solver_statistics() noexcept;
void reset_solver_statistics() noexcept;

} // namespace atl
