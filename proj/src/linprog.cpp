#include "atl/linprog.hpp"

#include <limits>
#include <vector>

#include "atl/error.hpp"

namespace atl {
namespace {

class Tableau {
public:
    Tableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol)
        : rows_(a.rows()), cols_(a.cols()), tol_(tol), t_(a.rows() + 1, a.cols() + a.rows() + 1),
          basis_(static_cast<std::size_t>(a.rows())), allowed_(static_cast<std::size_t>(a.cols() + a.rows()), true) {
        t_.setZero();
        for (Eigen::Index i = 0; i < rows_; ++i) {
            const double sign = b(i) < 0.0 ? -1.0 : 1.0;
            t_.row(i).head(cols_) = sign * a.row(i);
            t_(i, cols_ + i) = 1.0;
            t_(i, rhs()) = sign * b(i);
            basis_[static_cast<std::size_t>(i)] = cols_ + i;
        }
    }

    Eigen::Index rhs() const { return t_.cols() - 1; }
    Eigen::Index obj() const { return rows_; }

    /// Loads reduced costs for the cost vector (length cols_ + rows_).
    void set_cost(const Eigen::VectorXd& cost) {
        t_.row(obj()).setZero();
        t_.row(obj()).head(cost.size()) = cost.transpose();
        for (Eigen::Index i = 0; i < rows_; ++i) {
            if (removed(i)) {
                continue;
            }
            const double cb = cost(basis_[static_cast<std::size_t>(i)]);
            if (cb != 0.0) {
                t_.row(obj()) -= cb * t_.row(i);
            }
        }
    }

    void run(int& pivots) {
        for (;;) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < rhs(); ++j) {
                if (allowed_[static_cast<std::size_t>(j)] && t_(obj(), j) < -tol_) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) {
                return;
            }
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < rows_; ++i) {
                if (!removed(i) && t_(i, enter) > tol_) {
                    best = std::min(best, t_(i, rhs()) / t_(i, enter));
                }
            }
            Eigen::Index leave = -1;
            for (Eigen::Index i = 0; i < rows_; ++i) {
                if (removed(i) || t_(i, enter) <= tol_ || t_(i, rhs()) / t_(i, enter) > best + tol_) {
                    continue;
                }
                if (leave < 0 || basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]) {
                    leave = i;
                }
            }
            if (leave < 0) {
                throw InternalError("linear program is unbounded");
            }
            pivot(leave, enter);
            ++pivots;
        }
    }

    void pivot(Eigen::Index r, Eigen::Index c) {
        t_.row(r) /= t_(r, c);
        for (Eigen::Index i = 0; i < t_.rows(); ++i) {
            if (i != r && t_(i, c) != 0.0) {
                t_.row(i) -= t_(i, c) * t_.row(r);
            }
        }
        basis_[static_cast<std::size_t>(r)] = c;
    }

    /// Pivots zero-level artificials out of the basis; rows that cannot be
    /// pivoted are linearly dependent and get dropped.
    void expel_artificials() {
        for (Eigen::Index i = 0; i < rows_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < cols_) {
                continue;
            }
            Eigen::Index col = -1;
            for (Eigen::Index j = 0; j < cols_; ++j) {
                if (std::abs(t_(i, j)) > tol_) {
                    col = j;
                    break;
                }
            }
            if (col >= 0) {
                pivot(i, col);
            } else {
                t_.row(i).setZero();
                basis_[static_cast<std::size_t>(i)] = -1;
            }
        }
        for (Eigen::Index j = cols_; j < cols_ + rows_; ++j) {
            allowed_[static_cast<std::size_t>(j)] = false;
        }
    }

    double objective_value() const { return -t_(obj(), rhs()); }

    Eigen::VectorXd solution() const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(cols_);
        for (Eigen::Index i = 0; i < rows_; ++i) {
            const auto var = basis_[static_cast<std::size_t>(i)];
            if (var >= 0 && var < cols_) {
                x(var) = t_(i, rhs());
            }
        }
        return x;
    }

private:
    bool removed(Eigen::Index i) const { return basis_[static_cast<std::size_t>(i)] < 0; }

    Eigen::Index rows_;
    Eigen::Index cols_;
    double tol_;
    Eigen::MatrixXd t_;
    std::vector<Eigen::Index> basis_;
    std::vector<bool> allowed_;
};

} // namespace

LinearProgramResult solve_standard_lp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                                      double tolerance) {
    if (a.rows() != b.size() || a.cols() != c.size()) {
        throw ParameterError("linear program dimensions do not agree");
    }
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    Tableau tableau(a, b, tolerance);
    LinearProgramResult result;

    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
    phase1.tail(m).setOnes();
    tableau.set_cost(phase1);
    tableau.run(result.pivots);
    if (tableau.objective_value() > tolerance * (1.0 + b.cwiseAbs().sum())) {
        throw InternalError("linear program is infeasible");
    }

    tableau.expel_artificials();
    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
    phase2.head(n) = c;
    tableau.set_cost(phase2);
    tableau.run(result.pivots);

    result.x = tableau.solution();
    result.objective = c.dot(result.x);
    return result;
}

Eigen::VectorXd basis_pursuit(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tolerance) {
    const Eigen::Index p = a.cols();
    Eigen::MatrixXd split(a.rows(), 2 * p);
    split << a, -a;
    const LinearProgramResult lp = solve_standard_lp(split, b, Eigen::VectorXd::Ones(2 * p), tolerance);
    return lp.x.head(p) - lp.x.tail(p);
}

} // namespace atl
