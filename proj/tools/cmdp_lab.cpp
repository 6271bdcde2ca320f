// Command-line front end: validate, oracle, solve, sweep, bounds.

#include "cmdp/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace cmdp;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kInfeasible = 2 };

struct Output {
    std::string path;
    std::string format = "json";

    void write(const std::string& text) const {
        if (path.empty() || path == "-") {
            std::cout << text;
            return;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write '" + path + "'");
        out << text;
    }
};

void flatten(const json& value, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& rows) {
    if (value.is_object()) {
        for (auto it = value.begin(); it != value.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), rows);
    } else if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) flatten(value[i], prefix + "[" + std::to_string(i) + "]", rows);
    } else if (value.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", value.get<double>());
        rows.emplace_back(prefix, buf);
    } else if (value.is_string()) {
        rows.emplace_back(prefix, value.get<std::string>());
    } else {
        rows.emplace_back(prefix, value.dump());
    }
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string render(const json& doc, const std::string& format) {
    if (format == "json") return doc.dump(2) + "\n";
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(doc, "", rows);
    std::string out = "key,value\r\n";
    for (const auto& [k, v] : rows) out += quote(k) + "," + quote(v) + "\r\n";
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sample-based constrained MDP solver"};
    app.require_subcommand(1);

    std::string instance;
    Output output;
    PipelineOptions pipeline;
    std::string mode = "relaxed";
    std::optional<double> upper, eps_opt, lambda_norm, zeta;
    bool no_runtime = false;

    auto add_format = [&](CLI::App* cmd) {
        cmd->add_option("--out", output.path, "Output file (stdout when omitted)");
        cmd->add_option("--format", output.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    };
    auto add_pipeline = [&](CLI::App* cmd) {
        cmd->add_option("--mode", mode, "raw, relaxed or strict")->check(CLI::IsMember({"raw", "relaxed", "strict"}));
        cmd->add_option("--epsilon", pipeline.epsilon, "Target accuracy");
        cmd->add_option("--delta", pipeline.delta, "Failure probability");
        cmd->add_option("--t-cap", pipeline.t_cap, "Maximum primal-dual iterations (0: no cap)");
        cmd->add_option("--vi-tol", pipeline.vi_tol, "Value-iteration tolerance");
        cmd->add_option("--upper", upper, "Raw mode: dual bound U");
        cmd->add_option("--eps-opt", eps_opt, "Raw mode: optimization accuracy");
        cmd->add_option("--lambda-star-norm", lambda_norm, "Raw mode: ||lambda*|| used in the step-size formulas");
        cmd->add_option("--omega", pipeline.omega, "Raw mode: reward perturbation magnitude");
        cmd->add_option("--zeta-lower-bound", zeta, "Strict mode: lower bound on the Slater constant");
        cmd->add_flag("--no-runtime", no_runtime, "Omit wall-clock fields from the output");
    };

    auto* validate = app.add_subcommand("validate", "Check an instance file");
    validate->add_option("instance", instance, "Instance JSON")->required();

    auto* oracle = app.add_subcommand("oracle", "Solve the true CMDP with the occupancy-measure LP");
    oracle->add_option("instance", instance, "Instance JSON")->required();
    add_format(oracle);

    auto* solve = app.add_subcommand("solve", "Run the sample-based primal-dual pipeline once");
    solve->add_option("instance", instance, "Instance JSON")->required();
    solve->add_option("--samples", pipeline.n_per_pair, "Samples per state-action pair");
    solve->add_option("--seed", pipeline.seed, "Master seed");
    add_pipeline(solve);
    add_format(solve);

    std::vector<std::int64_t> grid{1000};
    std::vector<std::uint64_t> seeds{0};
    auto* sweep_cmd = app.add_subcommand("sweep", "Run the pipeline over a grid of sample sizes and seeds");
    sweep_cmd->add_option("instance", instance, "Instance JSON")->required();
    sweep_cmd->add_option("--samples", grid, "Ascending sample sizes")->expected(1, -1);
    sweep_cmd->add_option("--seed", seeds, "Seeds")->expected(1, -1);
    add_pipeline(sweep_cmd);
    add_format(sweep_cmd);

    BoundInputs bound_in;
    bound_in.delta = 0.1;
    bound_in.n_per_pair = 1000;
    std::string bounds_instance;
    std::optional<double> b_upper, b_eps1, b_omega, b_gamma;
    std::optional<int> b_states, b_actions, b_d;
    auto* bounds = app.add_subcommand("bounds", "Evaluate the concentration constants");
    bounds->add_option("instance", bounds_instance, "Instance JSON supplying |S|, |A|, d and gamma");
    bounds->add_option("--mode", mode, "relaxed or strict: derive U, eps1 and omega")
        ->check(CLI::IsMember({"raw", "relaxed", "strict"}));
    bounds->add_option("--epsilon", pipeline.epsilon, "Target accuracy");
    bounds->add_option("--delta", bound_in.delta, "Failure probability");
    bounds->add_option("--samples", bound_in.n_per_pair, "Samples per pair");
    bounds->add_option("--zeta-lower-bound", zeta, "Strict mode: Slater constant (default: LP value)");
    bounds->add_option("--states", b_states, "|S|");
    bounds->add_option("--actions", b_actions, "|A|");
    bounds->add_option("--d", b_d, "Number of constraints");
    bounds->add_option("--gamma", b_gamma, "Discount factor");
    bounds->add_option("--upper", b_upper, "Dual bound U");
    bounds->add_option("--eps1", b_eps1, "Dual net resolution");
    bounds->add_option("--omega", b_omega, "Perturbation magnitude");
    add_format(bounds);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        pipeline.mode = setting_from_string(mode);
        pipeline.upper = upper;
        pipeline.eps_opt = eps_opt;
        pipeline.lambda_star_norm = lambda_norm;
        pipeline.zeta = zeta;

        if (*validate) {
            const CmdpSpec spec = load_instance(instance);
            for (const auto& w : validate_spec(spec).warnings) std::cerr << "warning: " << w.message << "\n";
            std::cout << "ok: " << (spec.name.empty() ? instance : spec.name) << " (|S|=" << spec.num_states
                      << ", |A|=" << spec.num_actions << ", d=" << spec.num_constraints() << ", gamma=" << spec.gamma
                      << ")\n";
            return kOk;
        }
        if (*oracle) {
            const CmdpSpec spec = load_instance(instance);
            const OracleResult result = solve_cmdp_lp(spec);
            output.write(render(oracle_to_json(result), output.format));
            if (!result.feasible) {
                std::cerr << "infeasible: no policy meets every threshold\n";
                return kInfeasible;
            }
            return kOk;
        }
        if (*solve) {
            const CmdpSpec spec = load_instance(instance);
            const RunReport report = run_pipeline(spec, pipeline);
            output.write(render(report_to_json(report, !no_runtime), output.format));
            return kOk;
        }
        if (*sweep_cmd) {
            const CmdpSpec spec = load_instance(instance);
            const SweepResult result = sweep(spec, pipeline, grid, seeds);
            if (output.format == "csv") {
                output.write(sweep_to_csv(result, !no_runtime));
            } else {
                json doc;
                doc["instance"] = spec.name;
                doc["mode"] = to_string(pipeline.mode);
                json rows = json::array();
                for (const auto& r : result.rows) {
                    json row = {{"N", r.n},           {"seed", r.seed},       {"v_true_mixture", r.v_true_mixture},
                                {"v_star", r.v_star}, {"subopt", r.subopt}, {"max_violation", r.max_violation},
                                {"violations", r.violations}};
                    if (!no_runtime) row["runtime_ms"] = r.runtime_ms;
                    rows.push_back(std::move(row));
                }
                json aggs = json::array();
                for (const auto& a : result.aggregates) {
                    json agg = {{"N", a.n},
                                {"median_v_true_mixture", a.median_v_true_mixture},
                                {"median_subopt", a.median_subopt},
                                {"median_max_violation", a.median_max_violation},
                                {"median_violations", a.median_violations},
                                {"p90_subopt", a.p90_subopt},
                                {"p90_max_violation", a.p90_max_violation}};
                    if (!no_runtime) agg["median_runtime_ms"] = a.median_runtime_ms;
                    aggs.push_back(std::move(agg));
                }
                doc["rows"] = std::move(rows);
                doc["aggregates"] = std::move(aggs);
                output.write(doc.dump(2) + "\n");
            }
            return kOk;
        }
        if (*bounds) {
            std::optional<CmdpSpec> spec;
            if (!bounds_instance.empty()) spec = load_instance(bounds_instance);
            if (spec) {
                bound_in.num_states = spec->num_states;
                bound_in.num_actions = spec->num_actions;
                bound_in.d = spec->num_constraints();
                bound_in.gamma = spec->gamma;
                if (pipeline.mode != Setting::Raw) {
                    PdConfig config;
                    if (pipeline.mode == Setting::Relaxed) {
                        config = instantiate_relaxed(pipeline.epsilon, bound_in.delta, spec->gamma, spec->thresholds);
                    } else {
                        const double z = zeta.value_or(solve_cmdp_lp(*spec).zeta_star);
                        if (!(z > 0.0)) throw InfeasibleError("strict mode needs a positive Slater constant");
                        config = instantiate_strict(pipeline.epsilon, bound_in.delta, spec->gamma, spec->thresholds, z);
                    }
                    bound_in.upper = config.upper;
                    bound_in.eps1 = config.eps1;
                    bound_in.omega = config.omega;
                }
            }
            if (b_states) bound_in.num_states = *b_states;
            if (b_actions) bound_in.num_actions = *b_actions;
            if (b_d) bound_in.d = *b_d;
            if (b_gamma) bound_in.gamma = *b_gamma;
            if (b_upper) bound_in.upper = *b_upper;
            if (b_eps1) bound_in.eps1 = *b_eps1;
            if (b_omega) bound_in.omega = *b_omega;
            output.write(render(bounds_to_json(compute_bounds(bound_in)), output.format));
            return kOk;
        }
    } catch (const ValidationError& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return kInvalid;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    }
    return kOk;
}
