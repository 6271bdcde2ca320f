#pragma once

#include "cmdp/mdp_core.hpp"
#include "cmdp/simplex.hpp"

#include <vector>

namespace cmdp {

struct OccupancyMeasure {
    Eigen::MatrixXd mu;
    TabularPolicy policy;
    double total_mass = 0.0;
};

/// Ground truth for a CMDP, obtained from the occupancy-measure LP.
struct OracleResult {
    bool feasible = false;
    double v_star = 0.0;
    TabularPolicy policy;
    Eigen::VectorXd lambda_star;
    /// Slater constant max_pi min_i (V_{c_i}(rho) - b_i); <= 0 means no strictly feasible policy.
    double zeta_star = 0.0;
    OccupancyMeasure occupancy;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
};

/// pi(a | s) = mu(s, a) / sum_a mu(s, a), uniform where a state carries no mass.
TabularPolicy policy_from_occupancy(const Eigen::MatrixXd& mu);

/// max_s |sum_a mu(s,a) - rho(s) - gamma sum_{s',a'} P(s | s',a') mu(s',a')|.
double flow_residual(const CmdpSpec& spec, const Eigen::MatrixXd& mu);

OracleResult solve_cmdp_lp(const CmdpSpec& spec);

struct SlaterResult {
    double zeta_star = 0.0;
    TabularPolicy policy;
};

SlaterResult slater_constant(const CmdpSpec& spec);

inline constexpr int kBruteForceMaxPairs = 8;

/// Enumerates deterministic policies and optimizes over the convex hull of
/// their value vectors. Requires |S| * |A| <= kBruteForceMaxPairs.
OracleResult brute_force_small(const CmdpSpec& spec);

}  // namespace cmdp
