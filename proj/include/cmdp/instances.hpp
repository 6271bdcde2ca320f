#pragma once

#include "cmdp/mdp_core.hpp"

#include <cstdint>

namespace cmdp {

struct RandomCmdpOptions {
    int num_states = 4;
    int num_actions = 3;
    int d = 2;
    double gamma = 0.8;
    /// Each b_i is placed a fraction kappa ~ U[kappa_lo, kappa_hi] of the way
    /// from V_{c_i} of the reward-greedy policy up to max_pi V_{c_i}.
    double kappa_lo = 0.2;
    double kappa_hi = 0.6;
    /// All thresholds 0 (constraints inactive).
    bool unconstrained = false;
};

/// Random CMDP with Dirichlet(1) kernel rows and initial distribution and
/// U[0, 1] reward / cost tables. Pure function of (seed, options).
CmdpSpec random_cmdp(std::uint64_t seed, const RandomCmdpOptions& options = {});

/// Fixed 5-state / 3-action / d = 2 instance (gamma = 0.5) on which both
/// constraints bind at the reward optimum and the Slater constant is >= 0.5.
CmdpSpec reference_instance();

}  // namespace cmdp
