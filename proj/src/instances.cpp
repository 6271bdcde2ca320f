#include "cmdp/instances.hpp"

#include "cmdp/sampling.hpp"
#include "cmdp/unconstrained_solver.hpp"

#include <cmath>
#include <random>

namespace cmdp {

namespace {

class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(rng::mix(seed)) {}
    double uniform() { return rng::to_unit(engine_()); }
    double exponential() { return -std::log1p(-uniform()); }

private:
    std::mt19937_64 engine_;
};

Eigen::VectorXd dirichlet_one(Stream& stream, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = stream.exponential() + 1e-12;
    return v / v.sum();
}

}  // namespace

CmdpSpec random_cmdp(std::uint64_t seed, const RandomCmdpOptions& options) {
    if (options.num_states < 1 || options.num_actions < 1 || options.d < 1)
        throw Error("random_cmdp needs positive |S|, |A| and d");
    Stream stream(seed);
    const int ns = options.num_states;
    const int na = options.num_actions;

    CmdpSpec spec;
    spec.num_states = ns;
    spec.num_actions = na;
    spec.gamma = options.gamma;
    spec.name = "random-" + std::to_string(seed);
    spec.kernel.resize(static_cast<Eigen::Index>(ns) * na, ns);
    for (Eigen::Index r = 0; r < spec.kernel.rows(); ++r) spec.kernel.row(r) = dirichlet_one(stream, ns).transpose();
    spec.reward.resize(ns, na);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) spec.reward(s, a) = stream.uniform();
    for (int i = 0; i < options.d; ++i) {
        Table c(ns, na);
        for (int s = 0; s < ns; ++s)
            for (int a = 0; a < na; ++a) c(s, a) = stream.uniform();
        spec.costs.push_back(std::move(c));
    }
    spec.rho = dirichlet_one(stream, ns);

    spec.thresholds.assign(static_cast<std::size_t>(options.d), 0.0);
    if (options.unconstrained) return spec;

    const auto greedy = value_iteration(spec.kernel, spec.reward, spec.gamma);
    for (int i = 0; i < options.d; ++i) {
        const double at_greedy = policy_evaluation(spec, Objective::cost(i), greedy.policy).scalar_v;
        const double best = spec.rho.dot(value_iteration(spec.kernel, spec.costs[static_cast<std::size_t>(i)], spec.gamma).v_star);
        const double kappa = options.kappa_lo + (options.kappa_hi - options.kappa_lo) * stream.uniform();
        spec.thresholds[static_cast<std::size_t>(i)] = at_greedy + kappa * std::max(0.0, best - at_greedy);
    }
    return spec;
}

CmdpSpec reference_instance() {
    constexpr int ns = 5;
    constexpr int na = 3;
    CmdpSpec spec;
    spec.name = "reference-5x3-d2";
    spec.num_states = ns;
    spec.num_actions = na;
    spec.gamma = 0.5;
    spec.kernel = Eigen::MatrixXd::Zero(ns * na, ns);
    spec.reward.resize(ns, na);
    Table c1(ns, na);
    Table c2(ns, na);
    for (int s = 0; s < ns; ++s) {
        const int up = (s + 1) % ns;
        const int down = (s + ns - 1) % ns;
        // action 0 advances around the ring, 1 mostly stays, 2 mostly steps back
        spec.kernel(spec.row(s, 0), up) += 0.9;
        spec.kernel(spec.row(s, 0), s) += 0.1;
        spec.kernel(spec.row(s, 1), s) += 0.8;
        spec.kernel(spec.row(s, 1), up) += 0.2;
        spec.kernel(spec.row(s, 2), down) += 0.8;
        spec.kernel(spec.row(s, 2), s) += 0.2;

        spec.reward(s, 0) = 0.8 + 0.04 * s;
        spec.reward(s, 1) = 0.3;
        spec.reward(s, 2) = 0.25 + 0.05 * (s % 2);
        c1(s, 0) = 0.1;
        c1(s, 1) = 0.9;
        c1(s, 2) = 0.5;
        c2(s, 0) = 0.2;
        c2(s, 1) = 0.4;
        c2(s, 2) = 0.9;
    }
    spec.costs = {c1, c2};
    spec.thresholds = {0.8, 0.8};
    spec.rho = Eigen::VectorXd::Constant(ns, 1.0 / ns);
    return spec;
}

}  // namespace cmdp
