#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

#include "atl/datagen.hpp"

namespace atl {

enum class InitialMethod { ols, lasso, ridge, ridgeless, lassoless };

std::string to_string(InitialMethod method);
InitialMethod parse_initial_method(const std::string& name);

struct InitialEstimatorSpec {
    InitialMethod method = InitialMethod::ols;
    /// Lasso lambda or ridge alpha; selected by cross-validation on the source when absent.
    std::optional<double> hyper;
    /// Magnitude floor used when the estimate feeds adaptive weights.
    double clip = 1e-3;
    int folds = 10;
    std::uint64_t cv_seed = 0;
};

/// Initial estimator beta~ fitted on source data.
Eigen::VectorXd estimate_initial(const RegressionProblem& source, const InitialEstimatorSpec& spec);

/// (X^T X)^{-1} X^T y. Throws ParameterError when m < p or X is rank deficient.
Eigen::VectorXd ols(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);
/// OLS from accumulated normal equations (used for very large sources).
Eigen::VectorXd ols(const NormalEquations& ne);

/// (X^T X + alpha I)^{-1} X^T y.
Eigen::VectorXd ridge(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                      double alpha);

/// Minimum-l2-norm least-squares solution; singular values below 1e-10 sigma_max count as zero.
Eigen::VectorXd ridgeless(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Minimum-l1-norm least-squares solution, solved as a linear program.
Eigen::VectorXd lassoless(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Ridge alpha minimising k-fold validation error over a 50-point log grid.
double select_ridge_alpha(const RegressionProblem& problem, int folds, std::uint64_t seed);

/// |beta~_j|, raised to `floor` wherever |beta~_j| <= floor. Only for weight construction.
Eigen::VectorXd clip_small(const Eigen::Ref<const Eigen::VectorXd>& beta_tilde, double floor);

} // namespace atl
