#include "cmdp/primal_dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cmdp {

DualNet::DualNet(double eps1, double upper) : eps1_(eps1), upper_(upper) {
    if (!(eps1 > 0.0) || !std::isfinite(eps1)) throw Error("net resolution eps1 must be positive");
    if (!(upper >= eps1) || !std::isfinite(upper)) throw Error("net upper bound U must be at least eps1");
    const double ratio = upper / eps1;
    if (ratio > 9.0e15) throw Error("net has too many elements to index exactly");
    multiples_ = static_cast<std::int64_t>(std::floor(ratio));
    if (static_cast<double>(multiples_ + 1) * eps1 <= upper) ++multiples_;
    while (multiples_ > 0 && static_cast<double>(multiples_) * eps1 > upper) --multiples_;
    top_ = static_cast<double>(multiples_) * eps1 < upper ? multiples_ + 1 : multiples_;
}

double DualNet::value(std::int64_t index) const {
    if (index < 0 || index > top_) throw Error("net index out of range");
    return index > multiples_ ? upper_ : static_cast<double>(index) * eps1_;
}

std::int64_t DualNet::nearest(double x) const {
    if (!(x > 0.0)) return 0;
    if (x >= upper_) return top_;
    auto k = static_cast<std::int64_t>(std::floor(x / eps1_));
    k = std::clamp<std::int64_t>(k, 0, top_);
    // floor(x / eps1) can be off by one after rounding
    while (k > 0 && value(k) > x) --k;
    while (k < top_ && value(k + 1) <= x) ++k;
    if (k == top_) return k;
    const double below = x - value(k);
    const double above = value(k + 1) - x;
    return above < below ? k + 1 : k;
}

double round_to_net(double x, double eps1, double upper) {
    const DualNet net(eps1, upper);
    return net.value(net.nearest(x));
}

DualState DualState::zero(int d, double eta, double eps1, double upper) {
    DualState state;
    state.net = DualNet(eps1, upper);
    state.eta = eta;
    state.index.assign(static_cast<std::size_t>(d), 0);
    return state;
}

std::vector<double> DualState::lambda() const {
    std::vector<double> out(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) out[i] = net.value(index[i]);
    return out;
}

DualState dual_update(const DualState& state, const std::vector<double>& v_hat_c, const std::vector<double>& b_prime) {
    if (v_hat_c.size() != state.index.size() || b_prime.size() != state.index.size())
        throw Error("dual update: dimension mismatch between lambda, V_c and b'");
    DualState next = state;
    for (std::size_t i = 0; i < state.index.size(); ++i) {
        const double step = state.net.value(state.index[i]) - state.eta * (v_hat_c[i] - b_prime[i]);
        const double projected = std::clamp(step, 0.0, state.net.upper());
        next.index[i] = state.net.nearest(projected);
    }
    return next;
}

std::string to_string(Setting setting) {
    switch (setting) {
        case Setting::Raw: return "raw";
        case Setting::Relaxed: return "relaxed";
        case Setting::Strict: return "strict";
    }
    return "unknown";
}

Setting setting_from_string(const std::string& name) {
    if (name == "raw") return Setting::Raw;
    if (name == "relaxed") return Setting::Relaxed;
    if (name == "strict") return Setting::Strict;
    throw Error("unknown mode '" + name + "' (expected raw, relaxed or strict)");
}

ScheduleParams instantiate_schedule(double upper, double lambda_star_norm, double eps_opt, double gamma, int d) {
    if (!(upper > lambda_star_norm)) throw Error("need U > ||lambda*||_inf");
    if (!(lambda_star_norm >= 0.0)) throw Error("||lambda*||_inf must be non-negative");
    if (!(eps_opt > 0.0)) throw Error("eps_opt must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("gamma must lie in [0, 1)");
    if (d < 1) throw Error("d must be positive");

    const double h = 1.0 - gamma;
    const double margin = upper - lambda_star_norm;
    ScheduleParams p;
    p.t_exact = 4.0 * upper * upper * d * d / (eps_opt * eps_opt * h * h) * (1.0 + 1.0 / (margin * margin));
    constexpr double kMaxT = 1.8e19;
    const double rounded = std::ceil(p.t_exact * (1.0 - 1e-12));
    p.t = rounded >= kMaxT ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(std::max(1.0, rounded));
    p.eta = upper * h / std::sqrt(static_cast<double>(p.t));
    p.eps1 = eps_opt * eps_opt * h * h * margin / (6.0 * d * upper);
    return p;
}

namespace {

void check_epsilon(double epsilon, double delta, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("gamma must lie in [0, 1)");
    if (!(epsilon > 0.0 && epsilon <= 1.0 / (1.0 - gamma) * (1.0 + 1e-12)))
        throw Error("epsilon must lie in (0, 1/(1-gamma)]");
    if (!(delta > 0.0 && delta < 1.0)) throw Error("delta must lie in (0, 1)");
}

void fill_schedule(PdConfig& c) {
    const auto p = instantiate_schedule(c.upper, c.lambda_star_norm, c.eps_opt, c.gamma, c.d);
    c.t = p.t;
    c.t_run = p.t;
    c.truncated = false;
    c.eta = p.eta;
    c.eta_run = p.eta;
    c.eps1 = p.eps1;
}

}  // namespace

PdConfig instantiate_raw(double upper, double lambda_star_norm, double eps_opt, double gamma,
                         const std::vector<double>& b, double omega) {
    if (b.empty()) throw Error("at least one constraint is required");
    if (!(omega >= 0.0 && omega <= 1.0)) throw Error("omega must lie in [0, 1]");
    PdConfig c;
    c.setting = Setting::Raw;
    c.upper = upper;
    c.lambda_star_norm = lambda_star_norm;
    c.eps_opt = eps_opt;
    c.gamma = gamma;
    c.d = static_cast<int>(b.size());
    c.b_prime = b;
    c.omega = omega;
    fill_schedule(c);
    return c;
}

PdConfig instantiate_relaxed(double epsilon, double delta, double gamma, const std::vector<double>& b) {
    check_epsilon(epsilon, delta, gamma);
    if (b.empty()) throw Error("at least one constraint is required");
    const double h = 1.0 - gamma;
    PdConfig c;
    c.setting = Setting::Relaxed;
    c.epsilon = epsilon;
    c.delta = delta;
    c.gamma = gamma;
    c.d = static_cast<int>(b.size());
    c.omega = epsilon * h / 8.0;
    c.eps_opt = epsilon / 4.0;
    c.upper = 16.0 / (epsilon * h);
    c.lambda_star_norm = c.upper / 2.0;
    c.b_prime.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) c.b_prime[i] = b[i] - 3.0 * epsilon / 8.0;
    fill_schedule(c);
    return c;
}

PdConfig instantiate_strict(double epsilon, double delta, double gamma, const std::vector<double>& b, double zeta) {
    check_epsilon(epsilon, delta, gamma);
    if (!(zeta > 0.0)) throw Error("strict setting requires a positive Slater constant (no strictly feasible policy)");
    if (b.empty()) throw Error("at least one constraint is required");
    const double h = 1.0 - gamma;
    PdConfig c;
    c.setting = Setting::Strict;
    c.epsilon = epsilon;
    c.delta = delta;
    c.gamma = gamma;
    c.zeta = zeta;
    c.d = static_cast<int>(b.size());
    c.omega = epsilon * h / 10.0;
    c.upper = 4.0 * (1.0 + c.omega) / (zeta * h);
    c.lambda_star_norm = c.upper / 2.0;
    c.delta_shift = epsilon * h * zeta / (40.0 * c.d);
    c.eps_opt = c.delta_shift / 5.0;
    c.b_prime.resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) c.b_prime[i] = b[i] + epsilon * h * zeta / 20.0;
    fill_schedule(c);
    return c;
}

void apply_iteration_cap(PdConfig& config, std::uint64_t t_cap) {
    if (t_cap == 0 || t_cap >= config.t) {
        config.t_run = config.t;
        config.eta_run = config.eta;
        config.truncated = false;
        return;
    }
    config.t_run = t_cap;
    config.eta_run = config.upper * (1.0 - config.gamma) / std::sqrt(static_cast<double>(t_cap));
    config.truncated = true;
}

SolveResult primal_update(const CmdpSpec& empirical, const std::vector<double>& lambda, double vi_tol,
                          const Eigen::VectorXd* warm_start) {
    const Table f = combined_objective(empirical, lambda, empirical.reward);
    ViOptions opts;
    opts.tol = vi_tol;
    opts.warm_start = warm_start;
    return value_iteration(empirical.kernel, f, empirical.gamma, opts);
}

CmdpSpec make_empirical_cmdp(const CmdpSpec& spec, const EmpiricalModel& model, const PerturbedReward& reward,
                             const std::vector<double>& b_prime) {
    if (model.num_states != spec.num_states || model.num_actions != spec.num_actions)
        throw Error("empirical model does not match the instance dimensions");
    if (reward.r_p.rows() != spec.num_states || reward.r_p.cols() != spec.num_actions)
        throw Error("perturbed reward does not match the instance dimensions");
    if (static_cast<int>(b_prime.size()) != spec.num_constraints()) throw Error("b' has the wrong length");
    CmdpSpec out = spec;
    out.kernel = model.kernel_hat;
    out.reward = reward.r_p;
    out.thresholds = b_prime;
    out.name = spec.name.empty() ? "empirical" : spec.name + " (empirical)";
    return out;
}

PdTrace run_primal_dual(const CmdpSpec& empirical, const PdConfig& config, const PdOptions& options) {
    const int d = empirical.num_constraints();
    if (config.d != d || static_cast<int>(config.b_prime.size()) != d)
        throw Error("configuration has " + std::to_string(config.b_prime.size()) + " thresholds but the CMDP has d = " +
                    std::to_string(d));
    if (config.t_run < 1) throw Error("iteration count must be at least 1");

    struct Evaluation {
        double v_rp;
        std::vector<double> v_c;
        std::size_t count = 0;
    };
    std::map<std::vector<int>, Evaluation> seen;

    PdTrace trace;
    trace.d = d;
    trace.length = config.t_run;
    if (options.record_trace) {
        trace.lambdas.reserve(config.t_run * static_cast<std::size_t>(d));
        trace.v_rp.reserve(config.t_run);
        trace.v_c.reserve(config.t_run * static_cast<std::size_t>(d));
        trace.iota.reserve(config.t_run);
    }

    DualState state = DualState::zero(d, config.eta_run, config.eps1, config.upper);
    double sum_rp = 0.0;
    std::vector<double> sum_c(static_cast<std::size_t>(d), 0.0);
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd warm;

    for (std::uint64_t t = 0; t < config.t_run; ++t) {
        const std::vector<double> lambda = state.lambda();
        const SolveResult solve = primal_update(empirical, lambda, options.vi_tol, t == 0 ? nullptr : &warm);
        warm = solve.v_star;

        auto it = seen.find(solve.actions);
        if (it == seen.end()) {
            Evaluation e;
            e.v_rp = policy_evaluation(empirical, Objective::reward(), solve.policy).scalar_v;
            for (int i = 0; i < d; ++i) e.v_c.push_back(policy_evaluation(empirical, Objective::cost(i), solve.policy).scalar_v);
            it = seen.emplace(solve.actions, std::move(e)).first;
        }
        Evaluation& eval = it->second;
        ++eval.count;

        double lagrangian = eval.v_rp;
        for (int i = 0; i < d; ++i) {
            lagrangian += lambda[static_cast<std::size_t>(i)] * (eval.v_c[static_cast<std::size_t>(i)] - config.b_prime[static_cast<std::size_t>(i)]);
            sum_c[static_cast<std::size_t>(i)] += eval.v_c[static_cast<std::size_t>(i)];
        }
        sum_rp += eval.v_rp;
        best = std::min(best, lagrangian);

        if (options.record_trace) {
            trace.lambdas.insert(trace.lambdas.end(), lambda.begin(), lambda.end());
            trace.v_rp.push_back(eval.v_rp);
            trace.v_c.insert(trace.v_c.end(), eval.v_c.begin(), eval.v_c.end());
            trace.iota.push_back(iota_gap(solve).iota_hat);
        }

        state = dual_update(state, eval.v_c, config.b_prime);
    }

    const double t_total = static_cast<double>(config.t_run);
    trace.v_bar_rp = sum_rp / t_total;
    trace.v_bar_c.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) trace.v_bar_c[static_cast<std::size_t>(i)] = sum_c[static_cast<std::size_t>(i)] / t_total;
    trace.best_lagrangian = best;
    trace.final_lambda = state.lambda();
    trace.distinct_policies = seen.size();
    for (const auto& [actions, eval] : seen)
        trace.mixture.add(TabularPolicy::deterministic(actions, empirical.num_actions), eval.count);
    return trace;
}

}  // namespace cmdp
