#pragma once

#include "cmdp/mdp_core.hpp"

#include <optional>
#include <vector>

namespace cmdp {

struct SolveResult {
    Eigen::VectorXd v_star;
    Eigen::MatrixXd q_star;
    TabularPolicy policy;
    std::vector<int> actions;
    int iterations = 0;
    /// max_s |max_a Q*(s, a) - V_prev(s)| at termination.
    double residual = 0.0;
    /// ||V_{k+1} - V_k||_inf per sweep, when requested.
    std::vector<double> increments;
};

struct ViOptions {
    double tol = 1e-9;
    long max_iterations = 1'000'000;
    bool record_increments = false;
    /// Initial iterate; zero when absent.
    const Eigen::VectorXd* warm_start = nullptr;
};

/// Value iteration on the MDP (kernel, f, gamma). Stops once
/// ||V_{k+1} - V_k||_inf <= tol (1 - gamma) / (2 gamma); greedy policy breaks
/// ties toward the lowest action index.
SolveResult value_iteration(const Kernel& kernel, const Table& objective, double gamma, const ViOptions& options = {});

struct GapReport {
    /// min_s [V*(s) - max_{a != pi*(s)} Q*(s, a)]; +inf when |A| = 1.
    double iota_hat = 0.0;
    int argmin_state = -1;
};

GapReport iota_gap(const SolveResult& solve);

}  // namespace cmdp
