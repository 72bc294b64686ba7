#include "atl/initial.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "atl/error.hpp"
#include "atl/linprog.hpp"
#include "atl/selection.hpp"

namespace atl {
namespace {

constexpr double kRankTolerance = 1e-10;

struct ThinSvd {
    Eigen::MatrixXd u;
    Eigen::VectorXd s;
    Eigen::MatrixXd v;
};

// Thin SVD truncated to the numerical rank.
ThinSvd truncated_svd(const Eigen::Ref<const Eigen::MatrixXd>& x) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Index rank = 0;
    if (s.size() > 0 && s(0) > 0.0) {
        const double cutoff = kRankTolerance * s(0);
        while (rank < s.size() && s(rank) > cutoff) {
            ++rank;
        }
    }
    return {svd.matrixU().leftCols(rank), s.head(rank), svd.matrixV().leftCols(rank)};
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Index>& rows) {
    Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Index>(i)) = m.row(rows[i]);
    }
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<Index>& rows) {
    Eigen::VectorXd out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out(static_cast<Index>(i)) = v(rows[i]);
    }
    return out;
}

} // namespace

std::string to_string(InitialMethod method) {
    switch (method) {
    case InitialMethod::ols: return "ols";
    case InitialMethod::lasso: return "lasso";
    case InitialMethod::ridge: return "ridge";
    case InitialMethod::ridgeless: return "ridgeless";
    case InitialMethod::lassoless: return "lassoless";
    }
    return "unknown";
}

InitialMethod parse_initial_method(const std::string& name) {
    for (auto m : {InitialMethod::ols, InitialMethod::lasso, InitialMethod::ridge, InitialMethod::ridgeless,
                   InitialMethod::lassoless}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw ParameterError("unknown initial estimator '" + name + "' (expected ols, lasso, ridge, ridgeless, lassoless)");
}

Eigen::VectorXd ols(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (x.rows() < x.cols()) {
        throw ParameterError("OLS needs at least as many rows as columns (m = " + std::to_string(x.rows()) +
                             ", p = " + std::to_string(x.cols()) + "); use ridgeless or lassoless instead");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < x.cols()) {
        throw ParameterError("OLS design is rank deficient; use ridgeless or lassoless instead");
    }
    return qr.solve(y);
}

Eigen::VectorXd ols(const NormalEquations& ne) {
    if (ne.rows < ne.gram.cols()) {
        throw ParameterError("OLS needs at least as many rows as columns; use ridgeless or lassoless instead");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(ne.gram);
    if (llt.info() != Eigen::Success) {
        throw ParameterError("OLS normal equations are singular; use ridgeless or lassoless instead");
    }
    return llt.solve(ne.xty);
}

Eigen::VectorXd ridge(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                      double alpha) {
    if (!(alpha >= 0.0)) {
        throw ParameterError("ridge penalty must be nonnegative");
    }
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += alpha;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) {
        throw ParameterError("ridge system is singular");
    }
    return ldlt.solve(x.transpose() * y);
}

Eigen::VectorXd ridgeless(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
    const ThinSvd svd = truncated_svd(x);
    return svd.v * (svd.u.transpose() * y).cwiseQuotient(svd.s);
}

Eigen::VectorXd lassoless(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
    // Least-squares solutions are exactly {b : V_r^T b = S_r^{-1} U_r^T y}; the
    // orthonormal rows keep the LP well conditioned.
    const ThinSvd svd = truncated_svd(x);
    const Index p = x.cols();
    if (svd.s.size() == 0) {
        return Eigen::VectorXd::Zero(p);
    }
    const Eigen::MatrixXd a = svd.v.transpose();
    const Eigen::VectorXd b = (svd.u.transpose() * y).cwiseQuotient(svd.s);
    Eigen::VectorXd beta = basis_pursuit(a, b);

    // Re-solve on the LP support to strip tableau round-off.
    std::vector<Index> support;
    for (Index j = 0; j < p; ++j) {
        if (std::abs(beta(j)) > 1e-12 * (1.0 + beta.cwiseAbs().maxCoeff())) {
            support.push_back(j);
        }
    }
    if (!support.empty() && static_cast<Index>(support.size()) <= a.rows()) {
        Eigen::MatrixXd sub(a.rows(), static_cast<Index>(support.size()));
        for (std::size_t k = 0; k < support.size(); ++k) {
            sub.col(static_cast<Index>(k)) = a.col(support[k]);
        }
        const Eigen::VectorXd coef = sub.colPivHouseholderQr().solve(b);
        if ((sub * coef - b).norm() <= 1e-10 * (1.0 + b.norm())) {
            Eigen::VectorXd polished = Eigen::VectorXd::Zero(p);
            for (std::size_t k = 0; k < support.size(); ++k) {
                polished(support[k]) = coef(static_cast<Index>(k));
            }
            if (polished.lpNorm<1>() <= beta.lpNorm<1>() + 1e-9) {
                beta = polished;
            }
        }
    }
    return beta;
}

double select_ridge_alpha(const RegressionProblem& problem, int folds, std::uint64_t seed) {
    const Index n = problem.n();
    if (folds < 2 || n < folds) {
        throw ParameterError("ridge cross-validation needs 2 <= folds <= n");
    }
    const double scale = problem.design.squaredNorm() / static_cast<double>(problem.p());
    constexpr int kGrid = 50;
    std::vector<double> alphas(kGrid);
    for (int i = 0; i < kGrid; ++i) {
        alphas[static_cast<std::size_t>(i)] = scale * std::pow(10.0, 2.0 - 8.0 * i / (kGrid - 1));
    }
    const std::vector<int> fold_of = assign_folds(n, folds, seed);
    std::vector<double> mse(alphas.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        std::vector<Index> train, valid;
        for (Index i = 0; i < n; ++i) {
            (fold_of[static_cast<std::size_t>(i)] == f ? valid : train).push_back(i);
        }
        const Eigen::MatrixXd xt = take_rows(problem.design, train);
        const Eigen::VectorXd yt = take_rows(problem.response, train);
        const Eigen::MatrixXd xv = take_rows(problem.design, valid);
        const Eigen::VectorXd yv = take_rows(problem.response, valid);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const Eigen::VectorXd beta = ridge(xt, yt, alphas[a]);
            mse[a] += (yv - xv * beta).squaredNorm() / static_cast<double>(valid.size()) / folds;
        }
    }
    // Alphas are decreasing, so strict improvement keeps ties at the larger alpha.
    std::size_t best = 0;
    for (std::size_t a = 1; a < alphas.size(); ++a) {
        if (mse[a] < mse[best]) {
            best = a;
        }
    }
    return alphas[best];
}

Eigen::VectorXd estimate_initial(const RegressionProblem& source, const InitialEstimatorSpec& spec) {
    if (source.n() == 0) {
        throw ParameterError("initial estimator needs a nonempty source sample");
    }
    if (!(spec.clip > 0.0)) {
        throw ParameterError("clip floor must be positive");
    }
    switch (spec.method) {
    case InitialMethod::ols:
        return ols(source.design, source.response);
    case InitialMethod::ridge: {
        const double alpha = spec.hyper ? *spec.hyper : select_ridge_alpha(source, spec.folds, spec.cv_seed);
        return ridge(source.design, source.response, alpha);
    }
    case InitialMethod::ridgeless:
        return ridgeless(source.design, source.response);
    case InitialMethod::lassoless:
        return lassoless(source.design, source.response);
    case InitialMethod::lasso: {
        const Index p = source.p();
        if (spec.hyper) {
            const PenaltySpec penalty = PenaltySpec::uniform(p, *spec.hyper, 0.0, Eigen::VectorXd::Zero(p));
            return fit(source, penalty).beta_hat;
        }
        CvOptions options;
        options.folds = spec.folds;
        options.seed = spec.cv_seed;
        options.clip_floor = spec.clip;
        return cross_validate(source, Family::lasso, std::nullopt, options).refit.beta_hat;
    }
    }
    throw InternalError("unhandled initial estimator");
}

Eigen::VectorXd clip_small(const Eigen::Ref<const Eigen::VectorXd>& beta_tilde, double floor) {
    if (!(floor > 0.0)) {
        throw ParameterError("clip floor must be positive");
    }
    Eigen::VectorXd out = beta_tilde.cwiseAbs();
    for (Index j = 0; j < out.size(); ++j) {
        if (out(j) <= floor) {
            out(j) = floor;
        }
    }
    return out;
}

} // namespace atl
