#include "atl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atl/error.hpp"

namespace atl {

SelectionScores selection_scores(const Eigen::Ref<const Eigen::VectorXd>& beta_hat,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta_star) {
    if (beta_hat.size() != beta_star.size()) {
        throw ParameterError("selection scores need vectors of equal length");
    }
    Index tp = 0, fp = 0, tn = 0, fn = 0;
    for (Index j = 0; j < beta_hat.size(); ++j) {
        const bool selected = beta_hat(j) != 0.0;
        const bool truth = beta_star(j) != 0.0;
        if (selected && truth) ++tp;
        else if (selected) ++fp;
        else if (truth) ++fn;
        else ++tn;
    }
    SelectionScores s;
    s.n_active = tp + fp;
    s.sensitivity = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    s.specificity = (tn + fp) == 0 ? 1.0 : static_cast<double>(tn) / static_cast<double>(tn + fp);
    if (s.n_active == 0) {
        s.ppv = (tp + fn) == 0 ? 1.0 : 0.0;
    } else {
        s.ppv = static_cast<double>(tp) / static_cast<double>(s.n_active);
    }
    s.f1 = (s.ppv * s.sensitivity == 0.0) ? 0.0 : 2.0 * s.ppv * s.sensitivity / (s.ppv + s.sensitivity);
    s.active_ratio = beta_hat.size() == 0 ? 1.0 : static_cast<double>(tp + tn) / static_cast<double>(beta_hat.size());
    return s;
}

std::optional<double> invariant_ratio(const Eigen::Ref<const Eigen::VectorXd>& beta_hat,
                                      const Eigen::Ref<const Eigen::VectorXd>& beta_tilde,
                                      const Eigen::Ref<const Eigen::VectorXd>& beta_star) {
    if (beta_hat.size() != beta_star.size() || beta_tilde.size() != beta_star.size()) {
        throw ParameterError("invariant ratio needs vectors of equal length");
    }
    Index active = 0, kept = 0;
    for (Index j = 0; j < beta_star.size(); ++j) {
        if (beta_star(j) != 0.0) {
            ++active;
            if (beta_hat(j) == beta_tilde(j)) {
                ++kept;
            }
        }
    }
    if (active == 0) {
        return std::nullopt;
    }
    return static_cast<double>(kept) / static_cast<double>(active);
}

double loglog_slope(std::span<const double> n, std::span<const double> log_error) {
    if (n.size() != log_error.size()) {
        throw ParameterError("slope needs as many errors as sample sizes");
    }
    if (n.size() < 2) {
        throw ParameterError("slope needs at least two sample sizes");
    }
    std::vector<double> sorted(n.begin(), n.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ParameterError("slope needs distinct sample sizes");
    }
    const std::size_t k = n.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(n[i] > 0.0)) {
            throw ParameterError("sample sizes must be positive");
        }
        mx += std::log(n[i]);
        my += log_error[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double dx = std::log(n[i]) - mx;
        sxy += dx * (log_error[i] - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

double prediction_rmse(const Eigen::Ref<const Eigen::VectorXd>& beta_hat, const RegressionProblem& test) {
    if (test.n() == 0) {
        throw ParameterError("prediction error needs a nonempty test set");
    }
    if (beta_hat.size() != test.p()) {
        throw ParameterError("coefficient length does not match test design");
    }
    return std::sqrt((test.response - test.design * beta_hat).squaredNorm() / static_cast<double>(test.n()));
}

MetricsRecord evaluate(const Eigen::Ref<const Eigen::VectorXd>& beta_hat, const Eigen::VectorXd& beta_star,
                       const std::optional<Eigen::VectorXd>& beta_tilde, const RegressionProblem* test) {
    MetricsRecord m;
    m.l2_error = (beta_hat - beta_star).norm();
    const SelectionScores s = selection_scores(beta_hat, beta_star);
    m.f1 = s.f1;
    m.sensitivity = s.sensitivity;
    m.specificity = s.specificity;
    m.ppv = s.ppv;
    m.n_active = s.n_active;
    m.active_ratio = s.active_ratio;
    if (beta_tilde) {
        m.invariant_ratio = invariant_ratio(beta_hat, *beta_tilde, beta_star);
    }
    if (test != nullptr) {
        m.rmse = prediction_rmse(beta_hat, *test);
    }
    return m;
}

MeanStderr summarize(std::span<const double> values) {
    MeanStderr out;
    out.count = values.size();
    if (values.empty()) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - out.mean) * (v - out.mean);
        }
        out.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    }
    return out;
}

} // namespace atl
