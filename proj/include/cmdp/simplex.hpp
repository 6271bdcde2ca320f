#pragma once

#include <Eigen/Dense>

namespace cmdp::lp {

/// minimize c^T x  subject to  A x = b,  x >= 0.
struct StandardFormLp {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
};

enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status status);

struct Solution {
    Status status = Status::Infeasible;
    Eigen::VectorXd x;
    /// One multiplier per equality row: A^T y <= c at optimality, b^T y = c^T x.
    Eigen::VectorXd duals;
    double objective = 0.0;
    double dual_objective = 0.0;
    long pivots = 0;
};

struct SimplexOptions {
    double pivot_tol = 1e-10;
    double feasibility_tol = 1e-9;
    long max_pivots = 1'000'000;
};

/// Dense two-phase tableau simplex with Bland's rule.
Solution simplex_solve(const StandardFormLp& lp, const SimplexOptions& options = {});

}  // namespace cmdp::lp
