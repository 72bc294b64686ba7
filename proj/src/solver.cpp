#include "atl/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <string>

#include "atl/error.hpp"

namespace atl {
namespace {

std::atomic<std::uint64_t> g_fits{0};
std::atomic<std::uint64_t> g_converged{0};
std::atomic<double> g_max_kkt{0.0};

void record_fit(const FitResult& r) noexcept {
    g_fits.fetch_add(1, std::memory_order_relaxed);
    if (!r.converged) {
        return;
    }
    g_converged.fetch_add(1, std::memory_order_relaxed);
    double seen = g_max_kkt.load(std::memory_order_relaxed);
    while (r.kkt_residual > seen && !g_max_kkt.compare_exchange_weak(seen, r.kkt_residual)) {
    }
}

// Interval [lo, hi] of weight * d|b - kink|.
inline void abs_subgradient(double b, double kink, double weight, double& lo, double& hi) noexcept {
    if (b > kink) {
        lo = hi = weight;
    } else if (b < kink) {
        lo = hi = -weight;
    } else {
        lo = -weight;
        hi = weight;
    }
}

double kkt_from_residual(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::VectorXd& residual,
                         const PenaltySpec& penalty, const Eigen::Ref<const Eigen::VectorXd>& beta) {
    const double n = static_cast<double>(x.rows());
    double worst = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
        // -g_j = (2/n) x_j^T r
        const double neg_grad = 2.0 * x.col(j).dot(residual) / n;
        double l1 = 0.0, u1 = 0.0, l2 = 0.0, u2 = 0.0;
        abs_subgradient(beta(j), 0.0, penalty.lambda * penalty.v(j) / n, l1, u1);
        abs_subgradient(beta(j), penalty.anchor(j), penalty.eta * penalty.w(j) / n, l2, u2);
        const double violation = std::max({0.0, (l1 + l2) - neg_grad, neg_grad - (u1 + u2)});
        worst = std::max(worst, violation);
    }
    return worst;
}

double penalty_term(const PenaltySpec& penalty, const Eigen::Ref<const Eigen::VectorXd>& beta) {
    return penalty.lambda * penalty.v.cwiseProduct(beta.cwiseAbs()).sum() +
           penalty.eta * penalty.w.cwiseProduct((beta - penalty.anchor).cwiseAbs()).sum();
}

} // namespace

void PenaltySpec::validate(Index p) const {
    if (!(lambda >= 0.0) || !(eta >= 0.0) || !std::isfinite(lambda) || !std::isfinite(eta)) {
        throw ParameterError("penalty strengths must be finite and nonnegative");
    }
    if (v.size() != p || w.size() != p || anchor.size() != p) {
        throw ParameterError("penalty vectors must have length " + std::to_string(p));
    }
    if ((v.array() < 0.0).any() || (w.array() < 0.0).any() || !v.allFinite() || !w.allFinite()) {
        throw ParameterError("penalty weights must be finite and nonnegative");
    }
    if (!anchor.allFinite()) {
        throw ParameterError("anchor must be finite");
    }
}

PenaltySpec PenaltySpec::uniform(Index p, double lambda, double eta, Eigen::VectorXd anchor) {
    return PenaltySpec{lambda, eta, Eigen::VectorXd::Ones(p), Eigen::VectorXd::Ones(p), std::move(anchor)};
}

bool identical(const PenaltySpec& a, const PenaltySpec& b) noexcept {
    auto same = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        return x.size() == y.size() && (x.array() == y.array()).all();
    };
    return a.lambda == b.lambda && a.eta == b.eta && same(a.v, b.v) && same(a.w, b.w) && same(a.anchor, b.anchor);
}

std::vector<Index> FitResult::active_set() const {
    std::vector<Index> out;
    for (Index j = 0; j < beta_hat.size(); ++j) {
        if (beta_hat(j) != 0.0) {
            out.push_back(j);
        }
    }
    return out;
}

std::vector<Index> FitResult::anchored_set() const {
    std::vector<Index> out;
    for (Index j = 0; j < beta_hat.size(); ++j) {
        if (beta_hat(j) == anchor(j)) {
            out.push_back(j);
        }
    }
    return out;
}

double prox_two_kink(double a, double c, double p_w, double q_w, double t) {
    if (!(a > 0.0)) {
        throw ParameterError("prox_two_kink: quadratic coefficient must be positive");
    }
    if (!(p_w >= 0.0) || !(q_w >= 0.0)) {
        throw ParameterError("prox_two_kink: kink weights must be nonnegative");
    }
    const double two_a = 2.0 * a;
    const double two_c = 2.0 * c;

    if (t == 0.0) {
        const double weight = p_w + q_w;
        if (two_c > weight) {
            return (two_c - weight) / two_a;
        }
        if (two_c < -weight) {
            return (two_c + weight) / two_a;
        }
        return 0.0;
    }

    // One-sided derivatives of f at the kinks; s = sign of the other kink's term.
    const double s_at_zero = t > 0.0 ? -1.0 : 1.0; // sign(0 - t)
    const double zero_lo = -two_c - p_w + q_w * s_at_zero;
    const double zero_hi = -two_c + p_w + q_w * s_at_zero;
    if (zero_lo <= 0.0 && 0.0 <= zero_hi) {
        return 0.0;
    }
    const double s_at_t = t > 0.0 ? 1.0 : -1.0; // sign(t - 0)
    const double slope_t = two_a * t - two_c + p_w * s_at_t;
    const double t_lo = slope_t - q_w;
    const double t_hi = slope_t + q_w;
    if (t_lo <= 0.0 && 0.0 <= t_hi) {
        return t;
    }

    const double lo = std::min(0.0, t);
    const double hi = std::max(0.0, t);
    const double lo_left = t > 0.0 ? zero_lo : t_lo;
    const double hi_right = t > 0.0 ? t_hi : zero_hi;
    if (lo_left > 0.0) {
        return std::min((two_c + p_w + q_w) / two_a, lo);
    }
    if (hi_right < 0.0) {
        return std::max((two_c - p_w - q_w) / two_a, hi);
    }
    // Strictly between the kinks: b has the sign of t and b - t the opposite sign.
    const double b = (two_c - p_w * s_at_t + q_w * s_at_t) / two_a;
    return std::clamp(b, lo, hi);
}

double objective_value(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const PenaltySpec& penalty, const Eigen::Ref<const Eigen::VectorXd>& beta) {
    const double n = static_cast<double>(x.rows());
    return ((y - x * beta).squaredNorm() + penalty_term(penalty, beta)) / n;
}

double objective_value(const RegressionProblem& problem, const PenaltySpec& penalty,
                       const Eigen::Ref<const Eigen::VectorXd>& beta) {
    return objective_value(problem.design, problem.response, penalty, beta);
}

FitResult fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
              const PenaltySpec& penalty, const FitOptions& options) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (n < 1) {
        throw ParameterError("fit needs at least one observation");
    }
    if (y.size() != n) {
        throw ParameterError("response length does not match the design");
    }
    penalty.validate(p);
    const double nd = static_cast<double>(n);

    Eigen::VectorXd curvature(p);
    Eigen::VectorXd zero_weight(p);
    Eigen::VectorXd anchor_weight(p);
    for (Index j = 0; j < p; ++j) {
        curvature(j) = x.col(j).squaredNorm() / nd;
        zero_weight(j) = penalty.lambda * penalty.v(j) / nd;
        anchor_weight(j) = penalty.eta * penalty.w(j) / nd;
    }

    FitResult result;
    result.anchor = penalty.anchor;
    if (options.warm_start) {
        if (options.warm_start->size() != p) {
            throw ParameterError("warm start has the wrong length");
        }
        result.beta_hat = *options.warm_start;
    } else {
        result.beta_hat = Eigen::VectorXd::Zero(p);
    }
    Eigen::VectorXd& beta = result.beta_hat;
    Eigen::VectorXd residual = y - x * beta;

#ifndef NDEBUG
    double previous_objective = (residual.squaredNorm() + penalty_term(penalty, beta)) / nd;
#endif

    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        result.iterations = sweep;
        double max_change = 0.0;
        for (Index j = 0; j < p; ++j) {
            const double old = beta(j);
            const double t = penalty.anchor(j);
            double updated;
            if (curvature(j) == 0.0) {
                // Zero column: only the penalty depends on b_j.
                updated = anchor_weight(j) * std::abs(t) <= zero_weight(j) * std::abs(t) ? 0.0 : t;
            } else {
                const double c = x.col(j).dot(residual) / nd + curvature(j) * old;
                updated = prox_two_kink(curvature(j), c, zero_weight(j), anchor_weight(j), t);
            }
            if (updated != old) {
                const double delta = updated - old;
                residual.noalias() -= delta * x.col(j);
                beta(j) = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
#ifndef NDEBUG
        const double current_objective = (residual.squaredNorm() + penalty_term(penalty, beta)) / nd;
        assert(current_objective <= previous_objective + 1e-12 * (1.0 + std::abs(previous_objective)));
        previous_objective = current_objective;
#endif
        const double scale = 1.0 + beta.cwiseAbs().maxCoeff();
        if (max_change < options.tolerance * scale || max_change == 0.0) {
            residual = y - x * beta;
            result.kkt_residual = kkt_from_residual(x, residual, penalty, beta);
            if (result.kkt_residual <= options.certification_tolerance) {
                result.converged = true;
                break;
            }
            if (max_change == 0.0) {
                break; // fixed point that fails certification
            }
        }
    }
    if (!result.converged) {
        residual = y - x * beta;
        result.kkt_residual = kkt_from_residual(x, residual, penalty, beta);
    }
    result.objective = (residual.squaredNorm() + penalty_term(penalty, beta)) / nd;
    record_fit(result);
    return result;
}

FitResult fit(const RegressionProblem& problem, const PenaltySpec& penalty, const FitOptions& options) {
    return fit(problem.design, problem.response, penalty, options);
}

double kkt_certificate(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const PenaltySpec& penalty, const Eigen::Ref<const Eigen::VectorXd>& beta) {
    if (beta.size() != x.cols() || y.size() != x.rows()) {
        throw ParameterError("kkt_certificate: shapes do not agree");
    }
    penalty.validate(x.cols());
    const Eigen::VectorXd residual = y - x * beta;
    return kkt_from_residual(x, residual, penalty, beta);
}

double kkt_certificate(const RegressionProblem& problem, const PenaltySpec& penalty,
                       const Eigen::Ref<const Eigen::VectorXd>& beta) {
    return kkt_certificate(problem.design, problem.response, penalty, beta);
}

bool fully_anchored(const Eigen::Ref<const Eigen::VectorXd>& beta, const Eigen::Ref<const Eigen::VectorXd>& anchor) {
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta(j) != 0.0 && beta(j) != anchor(j)) {
            return false;
        }
    }
    return true;
}

bool at_penalty_minimum(const Eigen::Ref<const Eigen::VectorXd>& beta, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& w, const Eigen::VectorXd& anchor, double alpha) {
    for (Index j = 0; j < beta.size(); ++j) {
        const double a = alpha * v(j);
        const double b = (1.0 - alpha) * w(j);
        const double t = anchor(j);
        if (std::abs(a - b) <= 1e-12 * std::max(a, b)) {
            // Flat penalty between the kinks: any point of the segment minimises it.
            if (!(beta(j) >= std::min(0.0, t) && beta(j) <= std::max(0.0, t))) {
                return false;
            }
        } else if (beta(j) != (a > b ? 0.0 : t)) {
            return false;
        }
    }
    return true;
}

double lambda_max(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                  const Eigen::VectorXd& v, const Eigen::VectorXd& w, const Eigen::VectorXd& anchor, double alpha,
                  const FitOptions& options) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ParameterError("lambda_max: alpha must lie in (0, 1]");
    }
    const Index p = x.cols();
    PenaltySpec penalty{0.0, 0.0, v, w, anchor};
    penalty.validate(p);
    for (Index j = 0; j < p; ++j) {
        if (alpha * v(j) == 0.0 && (1.0 - alpha) * w(j) == 0.0) {
            throw ParameterError("lambda_max: coordinate " + std::to_string(j) + " carries no penalty");
        }
    }

    const Eigen::VectorXd xty = x.transpose() * y;
    Eigen::VectorXd scores = xty.cwiseAbs();
    if (alpha < 1.0) {
        scores += (x.transpose() * (y - x * anchor)).cwiseAbs();
    }
    double kappa = 2.0 * scores.maxCoeff() / std::max(alpha, 1.0 - alpha);
    if (!(kappa > 0.0)) {
        kappa = 1.0;
    }

    FitOptions opts = options;
    FitResult last;
    for (int doubling = 0; doubling < 256; ++doubling) {
        penalty.lambda = alpha * kappa;
        penalty.eta = (1.0 - alpha) * kappa;
        last = fit(x, y, penalty, opts);
        if (last.converged && at_penalty_minimum(last.beta_hat, v, w, anchor, alpha)) {
            return kappa;
        }
        opts.warm_start = last.beta_hat;
        kappa *= 2.0;
    }
    throw InternalError("lambda_max: no fully anchored strength found (last fit converged=" +
                        std::string(last.converged ? "yes" : "no") + ", kkt=" + std::to_string(last.kkt_residual) +
                        ", alpha=" + std::to_string(alpha) + ")");
}

double lambda_max(const RegressionProblem& problem, const Eigen::VectorXd& v, const Eigen::VectorXd& w,
                  const Eigen::VectorXd& anchor, double alpha, const FitOptions& options) {
    return lambda_max(problem.design, problem.response, v, w, anchor, alpha, options);
}

SolverStatistics solver_statistics() noexcept {
    return {g_fits.load(), g_converged.load(), g_max_kkt.load()};
}

void reset_solver_statistics() noexcept {
    g_fits = 0;
    g_converged = 0;
    g_max_kkt = 0.0;
}

} // namespace atl
