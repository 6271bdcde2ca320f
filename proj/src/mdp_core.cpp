#include "cmdp/mdp_core.hpp"

#include <cmath>
#include <sstream>

namespace cmdp {

namespace {

std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

void add(std::vector<Violation>& out, std::string field, std::string index, double observed, std::string message) {
    out.push_back({std::move(field), std::move(index), observed, std::move(message)});
}

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

void check_table(const CmdpSpec& spec, const Table& table, const std::string& field, ValidationResult& result) {
    if (table.rows() != spec.num_states || table.cols() != spec.num_actions) {
        add(result.violations, field, "", static_cast<double>(table.size()),
            field + " has shape " + std::to_string(table.rows()) + "x" + std::to_string(table.cols()) +
                ", expected " + std::to_string(spec.num_states) + "x" + std::to_string(spec.num_actions));
        return;
    }
    for (int s = 0; s < spec.num_states; ++s) {
        for (int a = 0; a < spec.num_actions; ++a) {
            const double x = table(s, a);
            if (!in_unit(x)) {
                const std::string idx = "(s=" + std::to_string(s) + ",a=" + std::to_string(a) + ")";
                const std::string kind = field == "reward" ? "reward" : "cost";
                add(result.violations, field, idx, x, kind + " out of [0,1] at " + idx + ": " + fmt_double(x));
            }
        }
    }
}

}  // namespace

ValidationResult validate_spec(const CmdpSpec& spec) {
    ValidationResult result;
    auto& bad = result.violations;

    if (spec.num_states <= 0) add(bad, "num_states", "", spec.num_states, "num_states must be positive");
    if (spec.num_actions <= 0) add(bad, "num_actions", "", spec.num_actions, "num_actions must be positive");
    if (!(spec.gamma >= 0.0 && spec.gamma < 1.0))
        add(bad, "gamma", "", spec.gamma, "gamma out of [0,1): " + fmt_double(spec.gamma));
    if (!bad.empty()) return result;

    const Eigen::Index pairs = static_cast<Eigen::Index>(spec.num_states) * spec.num_actions;
    if (spec.kernel.rows() != pairs || spec.kernel.cols() != spec.num_states) {
        add(bad, "kernel", "", static_cast<double>(spec.kernel.size()), "kernel dimensions do not match |S| x |A| x |S|");
    } else {
        for (int s = 0; s < spec.num_states; ++s) {
            for (int a = 0; a < spec.num_actions; ++a) {
                const auto row = spec.kernel.row(spec.row(s, a));
                const std::string idx = "(s=" + std::to_string(s) + ",a=" + std::to_string(a) + ")";
                bool finite = true;
                for (Eigen::Index j = 0; j < row.size(); ++j) {
                    if (!std::isfinite(row(j)) || row(j) < 0.0) {
                        finite = finite && std::isfinite(row(j));
                        add(bad, "kernel", idx, row(j),
                            "kernel row " + idx + " has invalid entry at s'=" + std::to_string(j) + ": " +
                                fmt_double(row(j)));
                    }
                }
                const double sum = row.sum();
                if (finite && std::abs(sum - 1.0) > kProbabilityTolerance)
                    add(bad, "kernel", idx, sum, "kernel row " + idx + " sums to " + fmt_double(sum));
            }
        }
    }

    check_table(spec, spec.reward, "reward", result);
    for (int i = 0; i < spec.num_constraints(); ++i) check_table(spec, spec.costs[i], "costs[" + std::to_string(i) + "]", result);

    if (spec.num_constraints() == 0) add(bad, "costs", "", 0.0, "at least one constraint is required");
    if (spec.thresholds.size() != spec.costs.size())
        add(bad, "thresholds", "", static_cast<double>(spec.thresholds.size()),
            "d mismatch: " + std::to_string(spec.costs.size()) + " costs but " + std::to_string(spec.thresholds.size()) +
                " thresholds");

    const double horizon = 1.0 / (1.0 - spec.gamma);
    for (std::size_t i = 0; i < spec.thresholds.size(); ++i) {
        const double b = spec.thresholds[i];
        if (!std::isfinite(b)) {
            add(bad, "thresholds", std::to_string(i), b, "threshold " + std::to_string(i) + " is not finite");
        } else if (b < 0.0 || b > horizon) {
            add(result.warnings, "thresholds", std::to_string(i), b,
                "threshold " + std::to_string(i) + " = " + fmt_double(b) + " outside [0, 1/(1-gamma)]");
        }
    }

    if (spec.rho.size() != spec.num_states) {
        add(bad, "rho", "", static_cast<double>(spec.rho.size()), "rho length does not match num_states");
    } else {
        bool finite = true;
        for (int s = 0; s < spec.num_states; ++s) {
            if (!std::isfinite(spec.rho(s)) || spec.rho(s) < 0.0) {
                finite = finite && std::isfinite(spec.rho(s));
                add(bad, "rho", std::to_string(s), spec.rho(s), "rho has invalid entry at s=" + std::to_string(s));
            }
        }
        const double sum = spec.rho.sum();
        if (finite && std::abs(sum - 1.0) > kProbabilityTolerance)
            add(bad, "rho", "", sum, "rho sums to " + fmt_double(sum));
    }
    return result;
}

void require_valid(const CmdpSpec& spec) {
    const auto result = validate_spec(spec);
    if (result.ok()) return;
    std::string msg = "invalid CMDP spec:";
    for (const auto& v : result.violations) msg += "\n  " + v.message;
    throw Error(msg);
}

std::string Objective::label() const {
    return kind == Kind::Reward ? std::string("reward") : "cost[" + std::to_string(index) + "]";
}

const Table& objective_table(const CmdpSpec& spec, Objective objective) {
    if (objective.kind == Objective::Kind::Reward) return spec.reward;
    if (objective.index < 0 || objective.index >= spec.num_constraints())
        throw Error("cost index " + std::to_string(objective.index) + " out of range");
    return spec.costs[objective.index];
}

TabularPolicy::TabularPolicy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) throw Error("policy must have at least one state and action");
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
        if ((probs_.row(s).array() < 0.0).any() || !probs_.row(s).allFinite())
            throw Error("policy row " + std::to_string(s) + " has a negative or non-finite entry");
        if (std::abs(probs_.row(s).sum() - 1.0) > kProbabilityTolerance)
            throw Error("policy row " + std::to_string(s) + " sums to " + fmt_double(probs_.row(s).sum()));
    }
}

TabularPolicy TabularPolicy::uniform(int num_states, int num_actions) {
    return TabularPolicy(Eigen::MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions));
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& actions, int num_actions) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()), num_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] < 0 || actions[s] >= num_actions) throw Error("action index out of range");
        p(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
    }
    return TabularPolicy(std::move(p));
}

bool TabularPolicy::is_deterministic() const {
    for (Eigen::Index s = 0; s < probs_.rows(); ++s)
        if (probs_.row(s).maxCoeff() != 1.0) return false;
    return true;
}

std::vector<int> TabularPolicy::greedy_actions() const {
    std::vector<int> out(static_cast<std::size_t>(probs_.rows()));
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
        Eigen::Index best = 0;
        probs_.row(s).maxCoeff(&best);
        out[static_cast<std::size_t>(s)] = static_cast<int>(best);
    }
    return out;
}

void MixturePolicy::add(const TabularPolicy& policy, std::size_t multiplicity) {
    if (multiplicity == 0) return;
    for (std::size_t i = 0; i < components_.size(); ++i) {
        if (components_[i].probs() == policy.probs()) {
            counts_[i] += multiplicity;
            total_ += multiplicity;
            return;
        }
    }
    components_.push_back(policy);
    counts_.push_back(multiplicity);
    total_ += multiplicity;
}

double MixturePolicy::weight(std::size_t distinct_index) const {
    return static_cast<double>(counts_.at(distinct_index)) / static_cast<double>(total_);
}

Eigen::MatrixXd policy_kernel(const Kernel& kernel, const TabularPolicy& policy) {
    const int ns = policy.num_states();
    const int na = policy.num_actions();
    if (kernel.rows() != static_cast<Eigen::Index>(ns) * na || kernel.cols() != ns)
        throw Error("policy dimensions do not match the kernel");
    Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(ns, ns);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a)
            if (policy(s, a) != 0.0) p_pi.row(s) += policy(s, a) * kernel.row(static_cast<Eigen::Index>(s) * na + a);
    return p_pi;
}

ValueReport evaluate_policy(const Kernel& kernel, double gamma, const Table& objective, const TabularPolicy& policy,
                            const Eigen::VectorXd& rho) {
    const int ns = policy.num_states();
    const int na = policy.num_actions();
    if (objective.rows() != ns || objective.cols() != na) throw Error("policy dimensions do not match the objective");
    if (rho.size() != ns) throw Error("rho dimension does not match the policy");

    const Eigen::MatrixXd p_pi = policy_kernel(kernel, policy);
    const Eigen::VectorXd l_pi = objective.cwiseProduct(policy.probs()).rowwise().sum();
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(ns, ns) - gamma * p_pi;

    ValueReport report;
    report.v = system.partialPivLu().solve(l_pi);
    const Eigen::VectorXd next = kernel * report.v;
    report.q = objective + gamma * as_table(next, ns, na);
    report.scalar_v = rho.dot(report.v);
    return report;
}

ValueReport policy_evaluation(const CmdpSpec& spec, Objective objective, const TabularPolicy& policy) {
    if (policy.num_states() != spec.num_states || policy.num_actions() != spec.num_actions)
        throw Error("policy is " + std::to_string(policy.num_states()) + "x" + std::to_string(policy.num_actions()) +
                    " but the instance is " + std::to_string(spec.num_states) + "x" + std::to_string(spec.num_actions));
    auto report = evaluate_policy(spec.kernel, spec.gamma, objective_table(spec, objective), policy, spec.rho);
    report.objective = objective;
    return report;
}

double evaluate_mixture(const CmdpSpec& spec, Objective objective, const MixturePolicy& mix) {
    if (mix.empty()) throw Error("mixture policy has no components");
    double total = 0.0;
    const auto& parts = mix.distinct_components();
    for (std::size_t i = 0; i < parts.size(); ++i)
        total += static_cast<double>(mix.multiplicities()[i]) * policy_evaluation(spec, objective, parts[i]).scalar_v;
    return total / static_cast<double>(mix.size());
}

Table combined_objective(const CmdpSpec& spec, const std::vector<double>& lambda, const Table& perturbed_reward) {
    if (static_cast<int>(lambda.size()) != spec.num_constraints())
        throw Error("lambda has length " + std::to_string(lambda.size()) + ", expected d = " +
                    std::to_string(spec.num_constraints()));
    Table f = perturbed_reward;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < 0.0) throw Error("lambda must be entrywise non-negative");
        if (lambda[i] != 0.0) f += lambda[i] * spec.costs[i];
    }
    return f;
}

Eigen::VectorXd state_occupancy(const CmdpSpec& spec, const TabularPolicy& policy) {
    const Eigen::MatrixXd p_pi = policy_kernel(spec.kernel, policy);
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(spec.num_states, spec.num_states) - spec.gamma * p_pi.transpose();
    return system.partialPivLu().solve(spec.rho);
}

Eigen::MatrixXd occupancy_measure(const CmdpSpec& spec, const TabularPolicy& policy) {
    const Eigen::VectorXd d = state_occupancy(spec, policy);
    return d.asDiagonal() * policy.probs();
}

double bellman_residual(const Kernel& kernel, double gamma, const Table& objective, const TabularPolicy& policy,
                        const Eigen::VectorXd& v) {
    const Eigen::MatrixXd p_pi = policy_kernel(kernel, policy);
    const Eigen::VectorXd l_pi = objective.cwiseProduct(policy.probs()).rowwise().sum();
    return (v - (l_pi + gamma * p_pi * v)).cwiseAbs().maxCoeff();
}

}  // namespace cmdp
