#include "atl/datagen.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>

#include "atl/config.hpp"
#include "atl/error.hpp"

namespace atl {
namespace {

constexpr Index kBlockRows = 4096;
constexpr std::uint8_t kDesignPart = 0;
constexpr std::uint8_t kNoisePart = 1;

Eigen::MatrixXd cholesky_factor(const TrueModel& truth) {
    const Eigen::MatrixXd sigma = make_ar1_covariance(truth.p(), truth.covariance_rho);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw InternalError("Cholesky factorisation of the AR(1) covariance failed");
    }
    return llt.matrixL();
}

// Produces the rows of one sampled problem block by block. Both the materialising
// and the streaming paths go through here so they see identical numbers.
class RowSampler {
public:
    RowSampler(const TrueModel& truth, const StreamKey& key)
        : truth_(truth), factor_t_(cholesky_factor(truth).transpose()),
          design_rng_(key.seed, key.stream_id(kDesignPart)), noise_rng_(key.seed, key.stream_id(kNoisePart)) {}

    /// Fills the first `rows` rows of x (row-major draw order) and y.
    void next(Index rows, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
        const Index p = truth_.p();
        z_.resize(rows, p);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < p; ++j) {
                z_(i, j) = normal_(design_rng_);
            }
        }
        x.noalias() = z_ * factor_t_;
        y.noalias() = x * truth_.beta_star;
        for (Index i = 0; i < rows; ++i) {
            y(i) += truth_.sigma * normal_(noise_rng_);
        }
    }

private:
    const TrueModel& truth_;
    Eigen::MatrixXd factor_t_;
    Philox4x32 design_rng_;
    Philox4x32 noise_rng_;
    boost::random::normal_distribution<double> normal_;
    Eigen::MatrixXd z_;
};

} // namespace

std::vector<Index> TrueModel::support() const {
    std::vector<Index> s;
    for (Index j = 0; j < beta_star.size(); ++j) {
        if (beta_star(j) != 0.0) {
            s.push_back(j);
        }
    }
    return s;
}

void TrueModel::validate() const {
    if (beta_star.size() == 0) {
        throw ParameterError("true model needs at least one coefficient");
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ParameterError("noise standard deviation must be finite and nonnegative");
    }
    if (!(covariance_rho >= 0.0 && covariance_rho < 1.0)) {
        throw ParameterError("AR(1) correlation must lie in [0, 1)");
    }
}

TrueModel default_true_model(Index p) {
    if (p < 5) {
        throw ParameterError("default true model needs p >= 5");
    }
    TrueModel t;
    t.beta_star = Eigen::VectorXd::Zero(p);
    t.beta_star(0) = 3.0;
    t.beta_star(1) = 1.5;
    t.beta_star(4) = 2.0;
    return t;
}

Eigen::VectorXd inconsistent_source_beta(const TrueModel& target, char which) {
    Eigen::VectorXd beta = target.beta_star;
    switch (which) {
    case 'A':
    case 'a':
        if (beta.size() < 6) {
            throw ParameterError("case A needs p >= 6");
        }
        beta(5) = 2.0;
        break;
    case 'B':
    case 'b':
        if (beta.size() < 5) {
            throw ParameterError("case B needs p >= 5");
        }
        beta(4) = 0.0;
        break;
    default:
        throw ParameterError(std::string("unknown inconsistent-source case '") + which + "'");
    }
    return beta;
}

TrueModel true_model_from_config(const KeyValueConfig& config) {
    const auto p = static_cast<Index>(config.get_int("truth.p", 10));
    TrueModel t;
    if (const auto beta = config.get("truth.beta")) {
        const auto values = config.get_doubles("truth.beta", {});
        if (static_cast<Index>(values.size()) > p) {
            throw ParameterError("truth.beta has more entries than truth.p");
        }
        t.beta_star = Eigen::VectorXd::Zero(p);
        for (std::size_t j = 0; j < values.size(); ++j) {
            t.beta_star(static_cast<Index>(j)) = values[j];
        }
    } else {
        t = default_true_model(p);
    }
    t.sigma = config.get_double("truth.sigma", 1.0);
    t.covariance_rho = config.get_double("truth.rho", 0.5);
    t.validate();
    return t;
}

Eigen::MatrixXd make_ar1_covariance(Index p, double rho) {
    if (p < 1) {
        throw ParameterError("covariance dimension must be at least 1");
    }
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw ParameterError("AR(1) correlation must lie in [0, 1)");
    }
    Eigen::MatrixXd sigma(p, p);
    for (Index j = 0; j < p; ++j) {
        for (Index k = 0; k < p; ++k) {
            sigma(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
        }
    }
    return sigma;
}

std::uint64_t StreamKey::stream_id(std::uint8_t part) const noexcept {
    return (static_cast<std::uint64_t>(replicate) << 32) | (static_cast<std::uint64_t>(role) << 24) |
           (static_cast<std::uint64_t>(part) << 16) | static_cast<std::uint64_t>(cell);
}

RegressionProblem sample_problem(const TrueModel& truth, Index n, const StreamKey& key) {
    truth.validate();
    if (n < 0) {
        throw ParameterError("sample size must be nonnegative");
    }
    RegressionProblem out;
    out.design.resize(n, truth.p());
    out.response.resize(n);
    out.truth = truth;

    RowSampler sampler(truth, key);
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    for (Index start = 0; start < n; start += kBlockRows) {
        const Index rows = std::min(kBlockRows, n - start);
        sampler.next(rows, x, y);
        out.design.middleRows(start, rows) = x;
        out.response.segment(start, rows) = y;
    }
    return out;
}

RegressionProblem sample_problem(const TrueModel& truth, Index n, std::uint64_t seed) {
    return sample_problem(truth, n, StreamKey{seed});
}

SourceTargetPair make_source_target(const TrueModel& truth, Index m, Index n, const StreamKey& key,
                                    const std::optional<Eigen::VectorXd>& source_beta_override) {
    if (m < 0 || n < 1) {
        throw ParameterError("source size must be >= 0 and target size >= 1");
    }
    TrueModel source_truth = truth;
    if (source_beta_override) {
        if (source_beta_override->size() != truth.p()) {
            throw ParameterError("source coefficient override has length " +
                                 std::to_string(source_beta_override->size()) + ", expected " +
                                 std::to_string(truth.p()));
        }
        source_truth.beta_star = *source_beta_override;
    }
    SourceTargetPair pair{sample_problem(source_truth, m, key.with_role(Role::source)),
                          sample_problem(truth, n, key.with_role(Role::target)), truth, source_truth};
    return pair;
}

NormalEquations accumulate_normal_equations(const TrueModel& truth, Index rows, const StreamKey& key) {
    truth.validate();
    const Index p = truth.p();
    NormalEquations ne;
    ne.gram = Eigen::MatrixXd::Zero(p, p);
    ne.xty = Eigen::VectorXd::Zero(p);
    ne.rows = rows;

    RowSampler sampler(truth, key);
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    for (Index start = 0; start < rows; start += kBlockRows) {
        const Index count = std::min(kBlockRows, rows - start);
        sampler.next(count, x, y);
        ne.gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
        ne.xty.noalias() += x.transpose() * y;
        ne.yty += y.squaredNorm();
    }
    ne.gram.triangularView<Eigen::StrictlyUpper>() = ne.gram.transpose();
    return ne;
}

NormalEquations normal_equations(const RegressionProblem& problem) {
    NormalEquations ne;
    ne.gram = problem.design.transpose() * problem.design;
    ne.xty = problem.design.transpose() * problem.response;
    ne.yty = problem.response.squaredNorm();
    ne.rows = problem.n();
    return ne;
}

} // namespace atl
