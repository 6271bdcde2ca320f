#include "cmdp/simplex.hpp"

#include "cmdp/mdp_core.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace cmdp::lp {

const char* to_string(Status status) {
    switch (status) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
    }
    return "unknown";
}

namespace {

class Tableau {
public:
    Tableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const SimplexOptions& options)
        : m_(a.rows()), n_(a.cols()), opt_(options), t_(Eigen::MatrixXd::Zero(m_ + 1, n_ + m_ + 1)), basis_(m_) {
        t_.topLeftCorner(m_, n_) = a;
        t_.block(0, n_, m_, m_).setIdentity();
        t_.col(rhs()).head(m_) = b;
        for (Eigen::Index i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = n_ + i;
    }

    Eigen::Index rhs() const { return n_ + m_; }
    const std::vector<Eigen::Index>& basis() const { return basis_; }
    double value() const { return -t_(m_, rhs()); }
    long pivots() const { return pivots_; }

    /// Loads cost vector `cost` (length n + m) into the objective row in reduced form.
    void set_objective(const Eigen::VectorXd& cost) {
        t_.row(m_).head(n_ + m_) = cost.transpose();
        t_(m_, rhs()) = 0.0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const double cb = cost(basis_[static_cast<std::size_t>(i)]);
            if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
        }
    }

    /// Runs Bland's rule over columns [0, allowed). Returns false when unbounded.
    bool optimize(Eigen::Index allowed) {
        while (true) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < allowed; ++j) {
                if (t_(m_, j) < -opt_.pivot_tol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;

            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double coef = t_(i, enter);
                if (coef <= opt_.pivot_tol) continue;
                const double ratio = t_(i, rhs()) / coef;
                const bool better = ratio < best - 1e-12;
                const bool tie = !better && std::abs(ratio - best) <= 1e-12;
                if (better || (tie && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
            if (pivots_ > opt_.max_pivots) throw Error("simplex exceeded the pivot limit");
        }
    }

    /// Pivots zero-level artificial variables out of the basis where possible.
    void expel_artificials() {
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < n_) continue;
            for (Eigen::Index j = 0; j < n_; ++j) {
                if (std::abs(t_(i, j)) > opt_.pivot_tol) {
                    pivot(i, j);
                    break;
                }
            }
        }
    }

private:
    void pivot(Eigen::Index row, Eigen::Index col) {
        t_.row(row) /= t_(row, col);
        for (Eigen::Index i = 0; i <= m_; ++i) {
            if (i == row) continue;
            const double factor = t_(i, col);
            if (factor != 0.0) t_.row(i) -= factor * t_.row(row);
            // round-off can push a degenerate basic value slightly negative
            if (i < m_ && t_(i, rhs()) < 0.0 && t_(i, rhs()) > -1e-12) t_(i, rhs()) = 0.0;
        }
        basis_[static_cast<std::size_t>(row)] = col;
        ++pivots_;
    }

    Eigen::Index m_;
    Eigen::Index n_;
    SimplexOptions opt_;
    Eigen::MatrixXd t_;
    std::vector<Eigen::Index> basis_;
    long pivots_ = 0;
};

}  // namespace

Solution simplex_solve(const StandardFormLp& lp, const SimplexOptions& options) {
    const Eigen::Index m = lp.a.rows();
    const Eigen::Index n = lp.a.cols();
    if (lp.b.size() != m || lp.c.size() != n) throw Error("LP dimensions are inconsistent");
    if (!lp.a.allFinite() || !lp.b.allFinite() || !lp.c.allFinite()) throw Error("LP has non-finite coefficients");

    Eigen::VectorXd sign = Eigen::VectorXd::Ones(m);
    for (Eigen::Index i = 0; i < m; ++i)
        if (lp.b(i) < 0.0) sign(i) = -1.0;
    const Eigen::MatrixXd a = sign.asDiagonal() * lp.a;
    const Eigen::VectorXd b = sign.asDiagonal() * lp.b;

    Tableau tab(a, b, options);
    Solution sol;

    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
    phase1.tail(m).setOnes();
    tab.set_objective(phase1);
    tab.optimize(n + m);
    if (tab.value() > options.feasibility_tol * std::max(1.0, b.lpNorm<Eigen::Infinity>())) {
        sol.status = Status::Infeasible;
        sol.pivots = tab.pivots();
        return sol;
    }
    tab.expel_artificials();

    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
    phase2.head(n) = lp.c;
    tab.set_objective(phase2);
    const bool bounded = tab.optimize(n);
    sol.pivots = tab.pivots();
    if (!bounded) {
        sol.status = Status::Unbounded;
        return sol;
    }

    // Recover primal and dual values from the final basis using the original data.
    Eigen::MatrixXd basis_matrix(m, m);
    Eigen::VectorXd basis_cost(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index j = tab.basis()[static_cast<std::size_t>(i)];
        if (j < n) {
            basis_matrix.col(i) = a.col(j);
            basis_cost(i) = lp.c(j);
        } else {
            basis_matrix.col(i) = Eigen::VectorXd::Unit(m, j - n);
            basis_cost(i) = 0.0;
        }
    }
    const auto lu = basis_matrix.partialPivLu();
    const Eigen::VectorXd xb = lu.solve(b);
    const Eigen::VectorXd y = basis_matrix.transpose().partialPivLu().solve(basis_cost);

    sol.x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index j = tab.basis()[static_cast<std::size_t>(i)];
        if (j < n) sol.x(j) = std::max(0.0, xb(i));
    }
    sol.duals = sign.asDiagonal() * y;
    sol.objective = lp.c.dot(sol.x);
    sol.dual_objective = lp.b.dot(sol.duals);
    sol.status = Status::Optimal;
    return sol;
}

}  // namespace cmdp::lp
