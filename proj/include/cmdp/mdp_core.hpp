#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmdp {

/// Raised on malformed inputs: dimension mismatches, out-of-domain
/// parameters, corrupted tables. Infeasibility is never reported this way.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense transition kernel: row `s * num_actions + a` holds P(. | s, a).
using Kernel = Eigen::MatrixXd;
/// Per state-action table (reward, cost, combined objective), shape |S| x |A|.
using Table = Eigen::MatrixXd;

/// Reshapes a vector indexed by `s * num_actions + a` into an |S| x |A| table.
inline Table as_table(const Eigen::VectorXd& pairs, int num_states, int num_actions) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajor>(pairs.data(), num_states, num_actions);
}

/// A tabular constrained MDP <S, A, P, r, {c_i}, {b_i}, rho, gamma>.
///
/// Constraints are of the "utility" form V_{c_i}(rho) >= b_i.
struct CmdpSpec {
    int num_states = 0;
    int num_actions = 0;
    double gamma = 0.0;
    Kernel kernel;
    Table reward;
    std::vector<Table> costs;
    std::vector<double> thresholds;
    Eigen::VectorXd rho;
    std::string name;

    int num_constraints() const { return static_cast<int>(costs.size()); }
    Eigen::Index row(int s, int a) const { return static_cast<Eigen::Index>(s) * num_actions + a; }
};

struct Violation {
    std::string field;
    std::string index;
    double observed = 0.0;
    std::string message;
};

struct ValidationResult {
    std::vector<Violation> violations;
    /// Threshold-range findings; they do not make the instance invalid.
    std::vector<Violation> warnings;

    bool ok() const { return violations.empty(); }
};

inline constexpr double kProbabilityTolerance = 1e-9;

ValidationResult validate_spec(const CmdpSpec& spec);

/// Throws Error listing every violation when the instance is invalid.
void require_valid(const CmdpSpec& spec);

/// Which table of a CMDP a value function refers to.
struct Objective {
    enum class Kind { Reward, Cost };
    Kind kind = Kind::Reward;
    int index = 0;

    static Objective reward() { return {Kind::Reward, 0}; }
    static Objective cost(int i) { return {Kind::Cost, i}; }

    std::string label() const;
    bool operator==(const Objective&) const = default;
};

const Table& objective_table(const CmdpSpec& spec, Objective objective);

/// Stationary stochastic policy pi(a | s), one row per state.
class TabularPolicy {
public:
    TabularPolicy() = default;
    explicit TabularPolicy(Eigen::MatrixXd probs);

    static TabularPolicy uniform(int num_states, int num_actions);
    static TabularPolicy deterministic(const std::vector<int>& actions, int num_actions);

    const Eigen::MatrixXd& probs() const { return probs_; }
    int num_states() const { return static_cast<int>(probs_.rows()); }
    int num_actions() const { return static_cast<int>(probs_.cols()); }
    double operator()(int s, int a) const { return probs_(s, a); }

    bool is_deterministic() const;
    /// Action with the largest probability in each state (lowest index on ties).
    std::vector<int> greedy_actions() const;

private:
    Eigen::MatrixXd probs_;
};

/// Uniform mixture over T component policies.
///
/// Components are stored once with a multiplicity, so a mixture over a long
/// run of mostly repeated deterministic iterates stays small. Each of the T
/// members still carries weight 1/T.
class MixturePolicy {
public:
    void add(const TabularPolicy& policy, std::size_t multiplicity = 1);

    /// T, the number of mixture members counted with multiplicity.
    std::size_t size() const { return total_; }
    bool empty() const { return total_ == 0; }
    const std::vector<TabularPolicy>& distinct_components() const { return components_; }
    const std::vector<std::size_t>& multiplicities() const { return counts_; }
    double weight(std::size_t distinct_index) const;

private:
    std::vector<TabularPolicy> components_;
    std::vector<std::size_t> counts_;
    std::size_t total_ = 0;
};

struct ValueReport {
    Eigen::VectorXd v;
    Eigen::MatrixXd q;
    double scalar_v = 0.0;
    Objective objective;
};

/// Exact evaluation of `policy` on an arbitrary kernel / objective table by a
/// dense LU solve of (I - gamma P_pi) V = l_pi.
ValueReport evaluate_policy(const Kernel& kernel, double gamma, const Table& objective,
                            const TabularPolicy& policy, const Eigen::VectorXd& rho);

ValueReport policy_evaluation(const CmdpSpec& spec, Objective objective, const TabularPolicy& policy);

/// Mean of the component values V(rho), weighted by multiplicity.
double evaluate_mixture(const CmdpSpec& spec, Objective objective, const MixturePolicy& mix);

/// f = r_p + sum_i lambda_i c_i.
Table combined_objective(const CmdpSpec& spec, const std::vector<double>& lambda, const Table& perturbed_reward);

/// Discounted state visitation d(s) = sum_t gamma^t Pr(s_t = s); sums to 1/(1-gamma).
Eigen::VectorXd state_occupancy(const CmdpSpec& spec, const TabularPolicy& policy);

/// mu(s, a) = d(s) pi(a | s).
Eigen::MatrixXd occupancy_measure(const CmdpSpec& spec, const TabularPolicy& policy);

/// max_s |V(s) - (l_pi(s) + gamma (P_pi V)(s))|.
double bellman_residual(const Kernel& kernel, double gamma, const Table& objective,
                        const TabularPolicy& policy, const Eigen::VectorXd& v);

/// P_pi as an |S| x |S| matrix.
Eigen::MatrixXd policy_kernel(const Kernel& kernel, const TabularPolicy& policy);

}  // namespace cmdp
