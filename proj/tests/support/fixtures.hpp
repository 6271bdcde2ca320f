#pragma once

#include "cmdp/mdp_core.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace fixtures {

/// One state, two actions: r = (1, 0), c = (0, 1), single threshold b.
inline cmdp::CmdpSpec single_state(double gamma = 0.5, double b = 0.8) {
    cmdp::CmdpSpec spec;
    spec.name = "single-state";
    spec.num_states = 1;
    spec.num_actions = 2;
    spec.gamma = gamma;
    spec.kernel = Eigen::MatrixXd::Ones(2, 1);
    spec.reward = (Eigen::MatrixXd(1, 2) << 1.0, 0.0).finished();
    spec.costs = {(Eigen::MatrixXd(1, 2) << 0.0, 1.0).finished()};
    spec.thresholds = {b};
    spec.rho = Eigen::VectorXd::Ones(1);
    return spec;
}

/// s0 -> s1 -> s1 under a single action; reward 0 in s0 and 1 in s1.
inline cmdp::CmdpSpec two_state_chain(double gamma = 0.5) {
    cmdp::CmdpSpec spec;
    spec.num_states = 2;
    spec.num_actions = 1;
    spec.gamma = gamma;
    spec.kernel = (Eigen::MatrixXd(2, 2) << 0.0, 1.0, 0.0, 1.0).finished();
    spec.reward = (Eigen::MatrixXd(2, 1) << 0.0, 1.0).finished();
    spec.costs = {Eigen::MatrixXd::Zero(2, 1)};
    spec.thresholds = {0.0};
    spec.rho = (Eigen::VectorXd(2) << 1.0, 0.0).finished();
    return spec;
}

/// Small hand-rolled generator used by property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    Eigen::VectorXd simplex(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = -std::log(1.0 - uniform()) + 1e-9;
        return v / v.sum();
    }

    /// Sparse-ish distribution: some entries forced to zero.
    Eigen::VectorXd sparse_simplex(int n) {
        Eigen::VectorXd v = simplex(n);
        for (int i = 0; i < n; ++i)
            if (n > 1 && uniform() < 0.3) v(i) = 0.0;
        if (v.sum() == 0.0) v(integer(0, n - 1)) = 1.0;
        return v / v.sum();
    }

    Eigen::MatrixXd table(int ns, int na) {
        Eigen::MatrixXd t(ns, na);
        for (int s = 0; s < ns; ++s)
            for (int a = 0; a < na; ++a) t(s, a) = uniform();
        return t;
    }

    cmdp::CmdpSpec spec(int ns, int na, int d, double gamma) {
        cmdp::CmdpSpec spec;
        spec.num_states = ns;
        spec.num_actions = na;
        spec.gamma = gamma;
        spec.kernel.resize(ns * na, ns);
        for (int r = 0; r < ns * na; ++r) spec.kernel.row(r) = sparse_simplex(ns).transpose();
        spec.reward = table(ns, na);
        for (int i = 0; i < d; ++i) spec.costs.push_back(table(ns, na));
        spec.thresholds.assign(static_cast<std::size_t>(d), 0.0);
        spec.rho = simplex(ns);
        return spec;
    }

    cmdp::TabularPolicy policy(int ns, int na) {
        Eigen::MatrixXd p(ns, na);
        for (int s = 0; s < ns; ++s) p.row(s) = simplex(na).transpose();
        return cmdp::TabularPolicy(p);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// All |A|^|S| deterministic action assignments.
inline std::vector<std::vector<int>> all_deterministic(int ns, int na) {
    std::vector<std::vector<int>> out;
    std::vector<int> actions(static_cast<std::size_t>(ns), 0);
    while (true) {
        out.push_back(actions);
        int s = 0;
        while (s < ns && ++actions[static_cast<std::size_t>(s)] == na) actions[static_cast<std::size_t>(s++)] = 0;
        if (s == ns) break;
    }
    return out;
}

}  // namespace fixtures
