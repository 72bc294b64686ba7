#pragma once

#include <Eigen/Dense>

namespace atl {

/**
 * Integral over the real line of exp(-A|b| - B|b - t|) with A = lambda v, B = eta w.
 * Equal strengths use the limit (1/A) exp(-A|t|) (1 + A|t|).
 * Throws ParameterError unless A, B >= 0 and A + B > 0.
 */
double prior_normalizer(double lambda, double eta, double v, double w, double beta_tilde);

/// exp(-lambda v |b| - eta w |b - beta_tilde|) / Z.
double prior_density(double b, double lambda, double eta, double v, double w, double beta_tilde);

/**
 * lambda sum_j v_j |beta_j| + eta sum_j w_j |beta_j - beta_tilde_j| with
 * v_j = 1/|beta_tilde_j|^gamma1 and w_j = |beta_tilde_j|^gamma2, magnitudes
 * floored at `clip`.
 */
double contour_value(const Eigen::Ref<const Eigen::VectorXd>& beta, double lambda, double eta, double gamma1,
                     double gamma2, const Eigen::Ref<const Eigen::VectorXd>& beta_tilde, double clip);

} // namespace atl
