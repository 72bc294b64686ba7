#include "atl/priors.hpp"

#include <cmath>

#include "atl/error.hpp"
#include "atl/initial.hpp"

namespace atl {

double prior_normalizer(double lambda, double eta, double v, double w, double beta_tilde) {
    const double a = lambda * v;
    const double b = eta * w;
    if (!(a >= 0.0) || !(b >= 0.0) || !(a + b > 0.0)) {
        throw ParameterError("prior needs nonnegative strengths with lambda v + eta w > 0");
    }
    const double t = std::abs(beta_tilde);
    // Left of both kinks, right of both kinks, then between them.
    const double outer = (std::exp(-b * t) + std::exp(-a * t)) / (a + b);
    double middle;
    if (a == b) {
        middle = t * std::exp(-a * t);
    } else {
        middle = -std::exp(-a * t) * std::expm1(-(b - a) * t) / (b - a);
    }
    return outer + middle;
}

double prior_density(double b, double lambda, double eta, double v, double w, double beta_tilde) {
    const double z = prior_normalizer(lambda, eta, v, w, beta_tilde);
    return std::exp(-lambda * v * std::abs(b) - eta * w * std::abs(b - beta_tilde)) / z;
}

double contour_value(const Eigen::Ref<const Eigen::VectorXd>& beta, double lambda, double eta, double gamma1,
                     double gamma2, const Eigen::Ref<const Eigen::VectorXd>& beta_tilde, double clip) {
    if (beta.size() != beta_tilde.size()) {
        throw ParameterError("contour point and anchor differ in length");
    }
    const Eigen::VectorXd mag = clip_small(beta_tilde, clip);
    double value = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double v = std::pow(mag(j), -gamma1);
        const double w = std::pow(mag(j), gamma2);
        value += lambda * v * std::abs(beta(j)) + eta * w * std::abs(beta(j) - beta_tilde(j));
    }
    return value;
}

} // namespace atl
