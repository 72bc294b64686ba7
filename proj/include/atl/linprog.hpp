#pragma once

#include <Eigen/Dense>

namespace atl {

struct LinearProgramResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    int pivots = 0;
};

/**
 * Dense two-phase tableau simplex for
 *
 *   minimise c^T x  subject to  A x = b,  x >= 0.
 *
 * Bland's rule, so it terminates on degenerate problems. Redundant equality
 * rows are detected after phase one and dropped. Intended for small problems
 * (a few hundred columns). Throws InternalError when infeasible or unbounded.
 */
LinearProgramResult solve_standard_lp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                                      double tolerance = 1e-9);

/// min ||beta||_1 subject to A beta = b, through the split beta = u - v.
Eigen::VectorXd basis_pursuit(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tolerance = 1e-9);

} // namespace atl
