#pragma once

#include "cmdp/lp_oracle.hpp"
#include "cmdp/mdp_core.hpp"
#include "cmdp/primal_dual.hpp"
#include "cmdp/sampling.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cmdp {

/// Instance file could not be turned into a valid spec (CLI exit code 1).
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::vector<Violation> violations = {})
        : Error(what), violations_(std::move(violations)) {}
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// The oracle proved the instance infeasible (CLI exit code 2).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

CmdpSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const CmdpSpec& spec);
CmdpSpec parse_instance(const std::string& text);
CmdpSpec load_instance(const std::string& path);
void save_instance(const CmdpSpec& spec, const std::string& path);

struct PipelineOptions {
    Setting mode = Setting::Relaxed;
    double epsilon = 0.1;
    double delta = 0.1;
    std::int64_t n_per_pair = 1000;
    std::uint64_t seed = 0;
    std::uint64_t t_cap = 0;  // 0: run the prescribed T
    double vi_tol = 1e-9;

    // raw mode
    std::optional<double> upper;             // default ||lambda_hat*|| + 1
    std::optional<double> eps_opt;           // required
    std::optional<double> lambda_star_norm;  // default: LP on the empirical CMDP
    double omega = 0.0;

    // strict mode: lower bound on zeta*; default is the LP-exact value on the true model
    std::optional<double> zeta;
};

struct RunReport {
    std::string instance_name;
    PipelineOptions options;
    PdConfig config;
    std::uint64_t t_theoretical = 0;

    OracleResult oracle;
    std::optional<OracleResult> empirical_oracle;  // raw mode only
    std::optional<ConcentrationBound> bounds;

    double v_true_reward = 0.0;            // V_r^{pi_bar}(rho) on the true model
    std::vector<double> v_true_costs;      // V_{c_i}^{pi_bar}(rho) on the true model
    double v_hat_rp = 0.0;                 // V_hat_{r_p}^{pi_bar}(rho)
    std::vector<double> v_hat_costs;       // V_hat_{c_i}^{pi_bar}(rho)
    std::vector<double> violations;        // max(0, b_i - V_{c_i})
    double max_violation = 0.0;
    double subopt = 0.0;                   // V* - V_r^{pi_bar}
    bool empirical_check_passed = false;   // V_hat_c >= b' - eps_opt for every i
    double best_lagrangian = 0.0;
    std::vector<double> final_lambda;
    std::size_t distinct_policies = 0;
    MixturePolicy mixture;
    double runtime_ms = 0.0;
};

/// Sample, build the empirical CMDP, instantiate parameters for the mode, run
/// primal-dual and evaluate the mixture on both models. `true_oracle` may be
/// supplied to skip re-solving the true-model LP.
RunReport run_pipeline(const CmdpSpec& spec, const PipelineOptions& options, const OracleResult* true_oracle = nullptr);

nlohmann::json report_to_json(const RunReport& report, bool include_runtime = true);
nlohmann::json oracle_to_json(const OracleResult& oracle);
nlohmann::json bounds_to_json(const ConcentrationBound& bounds);

struct SweepRow {
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    double v_true_mixture = 0.0;
    double v_star = 0.0;
    double subopt = 0.0;
    double max_violation = 0.0;
    std::vector<double> violations;
    double runtime_ms = 0.0;
};

struct SweepAggregate {
    std::int64_t n = 0;
    double median_v_true_mixture = 0.0;
    double median_subopt = 0.0;
    double median_max_violation = 0.0;
    std::vector<double> median_violations;
    double median_runtime_ms = 0.0;
    double p90_subopt = 0.0;
    double p90_max_violation = 0.0;
};

struct SweepResult {
    int d = 0;
    std::vector<SweepRow> rows;             // sorted by (N, seed)
    std::vector<SweepAggregate> aggregates;  // one per N
};

SweepResult sweep(const CmdpSpec& spec, const PipelineOptions& base, const std::vector<std::int64_t>& n_grid,
                  const std::vector<std::uint64_t>& seeds);

/// CSV with a header row; data rows then one aggregate row per N.
std::string sweep_to_csv(const SweepResult& result, bool include_runtime = true);

/// Linear-interpolation quantile (q in [0, 1]) of a non-empty sample.
double quantile(std::vector<double> values, double q);

/// Worker count from CMDP_LAB_THREADS, or hardware concurrency when unset.
unsigned worker_count();

/// Runs fn(0..count-1) across worker_count() threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace cmdp
