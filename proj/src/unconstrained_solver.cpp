#include "cmdp/unconstrained_solver.hpp"

#include <cmath>
#include <limits>

namespace cmdp {

SolveResult value_iteration(const Kernel& kernel, const Table& objective, double gamma, const ViOptions& options) {
    const int ns = static_cast<int>(objective.rows());
    const int na = static_cast<int>(objective.cols());
    if (ns == 0 || na == 0) throw Error("objective table is empty");
    if (kernel.rows() != static_cast<Eigen::Index>(ns) * na || kernel.cols() != ns)
        throw Error("kernel shape does not match the objective table");
    if (!objective.allFinite()) throw Error("objective has non-finite entries");
    if (!(options.tol > 0.0)) throw Error("value iteration tolerance must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("gamma must lie in [0, 1)");

    const double stop = gamma == 0.0 ? std::numeric_limits<double>::infinity()
                                     : options.tol * (1.0 - gamma) / (2.0 * gamma);

    SolveResult out;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(ns);
    if (options.warm_start) {
        if (options.warm_start->size() != ns) throw Error("warm start has the wrong length");
        v = *options.warm_start;
    }
    Eigen::VectorXd next(ns);
    Eigen::VectorXd pv(static_cast<Eigen::Index>(ns) * na);
    Eigen::MatrixXd q(ns, na);

    for (long k = 0;; ++k) {
        if (k >= options.max_iterations)
            throw Error("value iteration did not converge within " + std::to_string(options.max_iterations) + " sweeps");
        pv.noalias() = kernel * v;
        for (int s = 0; s < ns; ++s)
            for (int a = 0; a < na; ++a) q(s, a) = objective(s, a) + gamma * pv(static_cast<Eigen::Index>(s) * na + a);
        next = q.rowwise().maxCoeff();
        const double diff = (next - v).cwiseAbs().maxCoeff();
        if (options.record_increments) out.increments.push_back(diff);
        v.swap(next);
        out.iterations = static_cast<int>(k + 1);
        if (diff <= stop) break;
    }

    // One more backup so that V* = max_a Q* holds exactly for the returned pair.
    pv.noalias() = kernel * v;
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) q(s, a) = objective(s, a) + gamma * pv(static_cast<Eigen::Index>(s) * na + a);
    out.v_star = q.rowwise().maxCoeff();
    out.residual = (out.v_star - v).cwiseAbs().maxCoeff();
    out.q_star = std::move(q);

    out.actions.resize(static_cast<std::size_t>(ns));
    for (int s = 0; s < ns; ++s) {
        int best = 0;
        for (int a = 1; a < na; ++a)
            if (out.q_star(s, a) > out.q_star(s, best)) best = a;
        out.actions[static_cast<std::size_t>(s)] = best;
    }
    out.policy = TabularPolicy::deterministic(out.actions, na);
    return out;
}

GapReport iota_gap(const SolveResult& solve) {
    GapReport gap;
    const auto ns = solve.q_star.rows();
    const auto na = solve.q_star.cols();
    gap.iota_hat = std::numeric_limits<double>::infinity();
    if (na < 2) return gap;
    for (Eigen::Index s = 0; s < ns; ++s) {
        const int chosen = solve.actions[static_cast<std::size_t>(s)];
        double runner_up = -std::numeric_limits<double>::infinity();
        for (Eigen::Index a = 0; a < na; ++a)
            if (a != chosen) runner_up = std::max(runner_up, solve.q_star(s, a));
        const double g = solve.v_star(s) - runner_up;
        if (g < gap.iota_hat) {
            gap.iota_hat = g;
            gap.argmin_state = static_cast<int>(s);
        }
    }
    return gap;
}

}  // namespace cmdp
