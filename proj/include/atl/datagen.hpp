#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "atl/rng.hpp"

namespace atl {

class KeyValueConfig;

using Index = Eigen::Index;

/// Ground truth of a synthetic linear model y = X beta* + eps.
struct TrueModel {
    Eigen::VectorXd beta_star;
    double sigma = 1.0;          ///< noise standard deviation
    double covariance_rho = 0.5; ///< AR(1) feature correlation

    Index p() const noexcept { return beta_star.size(); }
    /// Indices of nonzero coefficients (the true support S).
    std::vector<Index> support() const;
    /// Throws ParameterError when sigma < 0, rho outside [0,1) or beta_star empty.
    void validate() const;
};

/// beta* = [3, 1.5, 0, 0, 2, 0, ...] zero-padded to length p (p >= 5), sigma 1, rho 0.5.
TrueModel default_true_model(Index p = 10);

/// Source coefficients for the inconsistent-source cases. 'A' adds a signal at
/// the sixth coordinate, 'B' removes the one at the fifth.
Eigen::VectorXd inconsistent_source_beta(const TrueModel& target, char which);

/// Builds a TrueModel from `truth.p`, `truth.sigma`, `truth.rho` and
/// optionally `truth.beta` (comma separated) keys.
TrueModel true_model_from_config(const KeyValueConfig& config);

/// Sigma_jk = rho^|j-k|.
Eigen::MatrixXd make_ar1_covariance(Index p, double rho);

struct RegressionProblem {
    Eigen::MatrixXd design;
    Eigen::VectorXd response;
    std::optional<TrueModel> truth;

    Index n() const noexcept { return design.rows(); }
    Index p() const noexcept { return design.cols(); }
};

enum class Role : std::uint8_t { source = 0, target = 1, test = 2 };

/// Identifies one independent random stream. Distinct keys map to distinct
/// Philox stream ids under the same seed.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t replicate = 0;
    Role role = Role::target;
    std::uint16_t cell = 0;

    /// Stream id for the design (part 0) or noise (part 1) draws.
    std::uint64_t stream_id(std::uint8_t part) const noexcept;
    StreamKey with_role(Role r) const noexcept {
        StreamKey k = *this;
        k.role = r;
        return k;
    }
};

/// Rows of the design are i.i.d. N(0, Sigma(rho)); response = X beta* + sigma * N(0,1).
/// Design and noise come from separate sub-streams of `key`, so the design does not
/// depend on sigma and sigma = 0 gives response == X beta* exactly.
RegressionProblem sample_problem(const TrueModel& truth, Index n, const StreamKey& key);
RegressionProblem sample_problem(const TrueModel& truth, Index n, std::uint64_t seed);

struct SourceTargetPair {
    RegressionProblem source;
    RegressionProblem target;
    TrueModel truth;        ///< target truth
    TrueModel source_truth; ///< equals truth unless an override was given
};

/// Source (size m, role source) and target (size n, role target) drawn from the
/// streams of `key` with the role replaced.
SourceTargetPair make_source_target(const TrueModel& truth, Index m, Index n, const StreamKey& key,
                                    const std::optional<Eigen::VectorXd>& source_beta_override = std::nullopt);

/// X^T X, X^T y, y^T y of a sampled problem, accumulated without storing the rows.
/// Generates exactly the rows sample_problem(truth, rows, key) would.
struct NormalEquations {
    Eigen::MatrixXd gram;
    Eigen::VectorXd xty;
    double yty = 0.0;
    Index rows = 0;
};

NormalEquations accumulate_normal_equations(const TrueModel& truth, Index rows, const StreamKey& key);

/// X^T X, X^T y, y^T y of an explicit problem.
NormalEquations normal_equations(const RegressionProblem& problem);

} // namespace atl
