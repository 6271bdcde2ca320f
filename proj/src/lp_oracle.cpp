#include "cmdp/lp_oracle.hpp"

#include <cmath>
#include <limits>

namespace cmdp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Flow rows of the occupancy LP; columns [0, |S||A|) hold mu.
void fill_flow_rows(const CmdpSpec& spec, Eigen::MatrixXd& a, Eigen::VectorXd& b) {
    const int ns = spec.num_states;
    const int na = spec.num_actions;
    for (int s = 0; s < ns; ++s) {
        for (int sp = 0; sp < ns; ++sp) {
            for (int ap = 0; ap < na; ++ap) {
                const Eigen::Index col = spec.row(sp, ap);
                a(s, col) = (sp == s ? 1.0 : 0.0) - spec.gamma * spec.kernel(col, s);
            }
        }
        b(s) = spec.rho(s);
    }
}

Eigen::VectorXd flatten(const Table& t) {
    Eigen::VectorXd out(t.size());
    for (Eigen::Index s = 0; s < t.rows(); ++s)
        for (Eigen::Index a = 0; a < t.cols(); ++a) out(s * t.cols() + a) = t(s, a);
    return out;
}

/// Cost rows sum_k coef(i, k) x_k - slack_i [- zeta_plus + zeta_minus] = b_i
/// appended after `first_row`. The value matrix has one row per constraint.
void fill_constraint_rows(const Eigen::MatrixXd& values, const std::vector<double>& thresholds, Eigen::Index first_row,
                          Eigen::Index slack_col, Eigen::Index zeta_col, Eigen::MatrixXd& a, Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        const Eigen::Index row = first_row + i;
        a.row(row).head(values.cols()) = values.row(i);
        a(row, slack_col + i) = -1.0;
        if (zeta_col >= 0) {
            a(row, zeta_col) = -1.0;
            a(row, zeta_col + 1) = 1.0;
        }
        b(row) = thresholds[static_cast<std::size_t>(i)];
    }
}

Eigen::MatrixXd cost_rows(const CmdpSpec& spec) {
    Eigen::MatrixXd rows(spec.num_constraints(), static_cast<Eigen::Index>(spec.num_states) * spec.num_actions);
    for (int i = 0; i < spec.num_constraints(); ++i) rows.row(i) = flatten(spec.costs[i]).transpose();
    return rows;
}

/// Builds and solves the occupancy LP. With `maximize_margin` the objective is
/// max zeta (Slater problem) instead of max sum mu r.
lp::Solution solve_occupancy_lp(const CmdpSpec& spec, bool maximize_margin) {
    const Eigen::Index pairs = static_cast<Eigen::Index>(spec.num_states) * spec.num_actions;
    const Eigen::Index d = spec.num_constraints();
    const Eigen::Index extra = maximize_margin ? 2 : 0;
    const Eigen::Index rows = spec.num_states + d;
    const Eigen::Index cols = pairs + d + extra;

    lp::StandardFormLp lp;
    lp.a = Eigen::MatrixXd::Zero(rows, cols);
    lp.b = Eigen::VectorXd::Zero(rows);
    lp.c = Eigen::VectorXd::Zero(cols);
    fill_flow_rows(spec, lp.a, lp.b);
    fill_constraint_rows(cost_rows(spec), spec.thresholds, spec.num_states, pairs, maximize_margin ? pairs + d : -1, lp.a,
                         lp.b);
    if (maximize_margin) {
        lp.c(pairs + d) = -1.0;
        lp.c(pairs + d + 1) = 1.0;
    } else {
        lp.c.head(pairs) = -flatten(spec.reward);
    }
    return lp::simplex_solve(lp);
}

Eigen::MatrixXd mu_from_solution(const CmdpSpec& spec, const Eigen::VectorXd& x) {
    Eigen::MatrixXd mu(spec.num_states, spec.num_actions);
    for (int s = 0; s < spec.num_states; ++s)
        for (int a = 0; a < spec.num_actions; ++a) mu(s, a) = x(spec.row(s, a));
    return mu;
}

OccupancyMeasure make_occupancy(Eigen::MatrixXd mu) {
    OccupancyMeasure occ;
    occ.total_mass = mu.sum();
    occ.policy = policy_from_occupancy(mu);
    occ.mu = std::move(mu);
    return occ;
}

}  // namespace

TabularPolicy policy_from_occupancy(const Eigen::MatrixXd& mu) {
    Eigen::MatrixXd probs(mu.rows(), mu.cols());
    for (Eigen::Index s = 0; s < mu.rows(); ++s) {
        const Eigen::RowVectorXd row = mu.row(s).cwiseMax(0.0);
        const double mass = row.sum();
        if (mass > 0.0)
            probs.row(s) = row / mass;
        else
            probs.row(s).setConstant(1.0 / static_cast<double>(mu.cols()));
    }
    return TabularPolicy(std::move(probs));
}

double flow_residual(const CmdpSpec& spec, const Eigen::MatrixXd& mu) {
    double worst = 0.0;
    for (int s = 0; s < spec.num_states; ++s) {
        double inflow = spec.rho(s);
        for (int sp = 0; sp < spec.num_states; ++sp)
            for (int ap = 0; ap < spec.num_actions; ++ap) inflow += spec.gamma * spec.kernel(spec.row(sp, ap), s) * mu(sp, ap);
        worst = std::max(worst, std::abs(mu.row(s).sum() - inflow));
    }
    return worst;
}

SlaterResult slater_constant(const CmdpSpec& spec) {
    require_valid(spec);
    const auto sol = solve_occupancy_lp(spec, true);
    if (sol.status != lp::Status::Optimal) throw Error(std::string("Slater LP ended ") + lp::to_string(sol.status));
    const Eigen::Index pairs = static_cast<Eigen::Index>(spec.num_states) * spec.num_actions;
    const Eigen::Index d = spec.num_constraints();
    SlaterResult out;
    out.zeta_star = sol.x(pairs + d) - sol.x(pairs + d + 1);
    out.policy = policy_from_occupancy(mu_from_solution(spec, sol.x));
    return out;
}

OracleResult solve_cmdp_lp(const CmdpSpec& spec) {
    require_valid(spec);
    OracleResult out;
    out.zeta_star = slater_constant(spec).zeta_star;

    const auto sol = solve_occupancy_lp(spec, false);
    if (sol.status == lp::Status::Infeasible) {
        out.feasible = false;
        out.v_star = kNaN;
        return out;
    }
    if (sol.status != lp::Status::Optimal) throw Error("CMDP LP reported an unbounded objective");

    out.feasible = true;
    out.occupancy = make_occupancy(mu_from_solution(spec, sol.x));
    out.policy = out.occupancy.policy;
    out.v_star = -sol.objective;
    out.primal_objective = -sol.objective;
    out.dual_objective = -sol.dual_objective;
    out.lambda_star = sol.duals.tail(spec.num_constraints()).cwiseMax(0.0);
    return out;
}

OracleResult brute_force_small(const CmdpSpec& spec) {
    require_valid(spec);
    const int ns = spec.num_states;
    const int na = spec.num_actions;
    if (ns * na > kBruteForceMaxPairs)
        throw Error("brute force is limited to |S||A| <= " + std::to_string(kBruteForceMaxPairs));
    const int d = spec.num_constraints();

    std::vector<TabularPolicy> policies;
    std::vector<int> actions(static_cast<std::size_t>(ns), 0);
    while (true) {
        policies.push_back(TabularPolicy::deterministic(actions, na));
        int s = 0;
        while (s < ns && ++actions[static_cast<std::size_t>(s)] == na) actions[static_cast<std::size_t>(s++)] = 0;
        if (s == ns) break;
    }
    const auto k = static_cast<Eigen::Index>(policies.size());

    Eigen::VectorXd v_reward(k);
    Eigen::MatrixXd v_cost(d, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        v_reward(j) = policy_evaluation(spec, Objective::reward(), policies[static_cast<std::size_t>(j)]).scalar_v;
        for (int i = 0; i < d; ++i)
            v_cost(i, j) = policy_evaluation(spec, Objective::cost(i), policies[static_cast<std::size_t>(j)]).scalar_v;
    }

    // Mixture weights w over deterministic policies: sum w = 1, w . V_c_i >= b_i.
    auto hull_lp = [&](bool maximize_margin) {
        const Eigen::Index extra = maximize_margin ? 2 : 0;
        lp::StandardFormLp lp;
        lp.a = Eigen::MatrixXd::Zero(1 + d, k + d + extra);
        lp.b = Eigen::VectorXd::Zero(1 + d);
        lp.c = Eigen::VectorXd::Zero(k + d + extra);
        lp.a.row(0).head(k).setOnes();
        lp.b(0) = 1.0;
        fill_constraint_rows(v_cost, spec.thresholds, 1, k, maximize_margin ? k + d : -1, lp.a, lp.b);
        if (maximize_margin) {
            lp.c(k + d) = -1.0;
            lp.c(k + d + 1) = 1.0;
        } else {
            lp.c.head(k) = -v_reward;
        }
        return lp::simplex_solve(lp);
    };

    OracleResult out;
    const auto margin = hull_lp(true);
    if (margin.status != lp::Status::Optimal) throw Error("hull margin LP did not reach an optimum");
    out.zeta_star = margin.x(k + d) - margin.x(k + d + 1);

    const auto sol = hull_lp(false);
    if (sol.status == lp::Status::Infeasible) {
        out.feasible = false;
        out.v_star = kNaN;
        return out;
    }
    if (sol.status != lp::Status::Optimal) throw Error("hull LP reported an unbounded objective");

    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(ns, na);
    for (Eigen::Index j = 0; j < k; ++j)
        if (sol.x(j) > 0.0) mu += sol.x(j) * occupancy_measure(spec, policies[static_cast<std::size_t>(j)]);

    out.feasible = true;
    out.v_star = -sol.objective;
    out.primal_objective = -sol.objective;
    out.dual_objective = -sol.dual_objective;
    out.lambda_star = sol.duals.tail(d).cwiseMax(0.0);
    out.occupancy = make_occupancy(std::move(mu));
    out.policy = out.occupancy.policy;
    return out;
}

}  // namespace cmdp
