#include "cmdp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace cmdp {

using nlohmann::json;

namespace {

std::string line_context(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    const std::size_t begin = text.rfind('\n', byte > 0 ? byte - 1 : 0);
    const std::size_t start = begin == std::string::npos ? 0 : begin + 1;
    const std::size_t end = text.find('\n', start);
    return "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
           text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

struct Problems {
    std::vector<Violation> list;
    void add(const std::string& field, const std::string& message) { list.push_back({field, "", 0.0, message}); }
};

[[noreturn]] void throw_malformed(const Problems& problems) {
    std::string msg = "instance is malformed:";
    for (const auto& p : problems.list) msg += "\n  " + p.message;
    throw ValidationError(msg, problems.list);
}

const json* member(const json& doc, const char* key, Problems& problems, bool required = true) {
    const auto it = doc.find(key);
    if (it == doc.end()) {
        if (required) problems.add(key, std::string("missing key '") + key + "'");
        return nullptr;
    }
    return &*it;
}

double number(const json& value, const std::string& field, Problems& problems) {
    if (!value.is_number()) {
        problems.add(field, field + " is not a number");
        return 0.0;
    }
    return value.get<double>();
}

Eigen::VectorXd read_vector(const json& value, Eigen::Index n, const std::string& field, Problems& problems) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (!value.is_array() || static_cast<Eigen::Index>(value.size()) != n) {
        problems.add(field, field + " must be an array of length " + std::to_string(n));
        return out;
    }
    for (Eigen::Index i = 0; i < n; ++i) out(i) = number(value[static_cast<std::size_t>(i)], field + "[" + std::to_string(i) + "]", problems);
    return out;
}

Table read_table(const json& value, int ns, int na, const std::string& field, Problems& problems) {
    Table out = Table::Zero(ns, na);
    if (!value.is_array() || static_cast<int>(value.size()) != ns) {
        problems.add(field, field + " must have " + std::to_string(ns) + " rows");
        return out;
    }
    for (int s = 0; s < ns; ++s)
        out.row(s) = read_vector(value[static_cast<std::size_t>(s)], na, field + "[" + std::to_string(s) + "]", problems).transpose();
    return out;
}

json vec_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json table_json(const Eigen::MatrixXd& t) {
    json rows = json::array();
    for (Eigen::Index s = 0; s < t.rows(); ++s) {
        json row = json::array();
        for (Eigen::Index a = 0; a < t.cols(); ++a) row.push_back(t(s, a));
        rows.push_back(std::move(row));
    }
    return rows;
}

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string csv_number(double x) {
    if (std::isnan(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

double vector_max(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
}

}  // namespace

CmdpSpec spec_from_json(const json& doc) {
    if (!doc.is_object()) throw ValidationError("instance document must be a JSON object");
    Problems problems;
    CmdpSpec spec;

    const json* ns = member(doc, "num_states", problems);
    const json* na = member(doc, "num_actions", problems);
    const json* gamma = member(doc, "gamma", problems);
    if (ns && (!ns->is_number_integer() || ns->get<long long>() <= 0)) problems.add("num_states", "num_states must be a positive integer");
    if (na && (!na->is_number_integer() || na->get<long long>() <= 0)) problems.add("num_actions", "num_actions must be a positive integer");
    if (gamma) spec.gamma = number(*gamma, "gamma", problems);
    if (!problems.list.empty()) throw_malformed(problems);
    spec.num_states = ns->get<int>();
    spec.num_actions = na->get<int>();
    const int S = spec.num_states;
    const int A = spec.num_actions;

    if (const json* name = member(doc, "name", problems, false); name && name->is_string()) spec.name = name->get<std::string>();

    spec.kernel = Kernel::Zero(static_cast<Eigen::Index>(S) * A, S);
    if (const json* kernel = member(doc, "kernel", problems)) {
        if (!kernel->is_array() || static_cast<int>(kernel->size()) != S) {
            problems.add("kernel", "kernel must have " + std::to_string(S) + " entries (one per state)");
        } else {
            for (int s = 0; s < S; ++s) {
                const json& per_state = (*kernel)[static_cast<std::size_t>(s)];
                if (!per_state.is_array() || static_cast<int>(per_state.size()) != A) {
                    problems.add("kernel", "kernel[" + std::to_string(s) + "] must have " + std::to_string(A) + " rows");
                    continue;
                }
                for (int a = 0; a < A; ++a)
                    spec.kernel.row(spec.row(s, a)) =
                        read_vector(per_state[static_cast<std::size_t>(a)], S,
                                    "kernel[" + std::to_string(s) + "][" + std::to_string(a) + "]", problems)
                            .transpose();
            }
        }
    }

    if (const json* reward = member(doc, "reward", problems)) spec.reward = read_table(*reward, S, A, "reward", problems);
    if (const json* costs = member(doc, "costs", problems)) {
        if (!costs->is_array()) {
            problems.add("costs", "costs must be a list of |S| x |A| tables");
        } else {
            for (std::size_t i = 0; i < costs->size(); ++i)
                spec.costs.push_back(read_table((*costs)[i], S, A, "costs[" + std::to_string(i) + "]", problems));
        }
    }
    if (const json* thresholds = member(doc, "thresholds", problems)) {
        if (!thresholds->is_array()) {
            problems.add("thresholds", "thresholds must be a list of reals");
        } else {
            for (std::size_t i = 0; i < thresholds->size(); ++i)
                spec.thresholds.push_back(number((*thresholds)[i], "thresholds[" + std::to_string(i) + "]", problems));
        }
    }
    if (const json* rho = member(doc, "rho", problems)) spec.rho = read_vector(*rho, S, "rho", problems);

    if (!problems.list.empty()) throw_malformed(problems);

    const auto validation = validate_spec(spec);
    if (!validation.ok()) {
        std::string msg = "instance failed validation:";
        for (const auto& v : validation.violations) msg += "\n  " + v.message;
        throw ValidationError(msg, validation.violations);
    }
    return spec;
}

json spec_to_json(const CmdpSpec& spec) {
    json doc;
    if (!spec.name.empty()) doc["name"] = spec.name;
    doc["num_states"] = spec.num_states;
    doc["num_actions"] = spec.num_actions;
    doc["gamma"] = spec.gamma;
    doc["rho"] = vec_json(spec.rho);
    json kernel = json::array();
    for (int s = 0; s < spec.num_states; ++s) {
        json per_state = json::array();
        for (int a = 0; a < spec.num_actions; ++a) per_state.push_back(vec_json(Eigen::VectorXd(spec.kernel.row(spec.row(s, a)).transpose())));
        kernel.push_back(std::move(per_state));
    }
    doc["kernel"] = std::move(kernel);
    doc["reward"] = table_json(spec.reward);
    json costs = json::array();
    for (const auto& c : spec.costs) costs.push_back(table_json(c));
    doc["costs"] = std::move(costs);
    doc["thresholds"] = spec.thresholds;
    return doc;
}

CmdpSpec parse_instance(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("instance is not valid JSON at " + line_context(text, e.byte > 0 ? e.byte - 1 : 0) + " (" +
                              e.what() + ")");
    }
    return spec_from_json(doc);
}

CmdpSpec load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open instance file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_instance(buffer.str());
}

void save_instance(const CmdpSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << spec_to_json(spec).dump(2) << "\n";
}

RunReport run_pipeline(const CmdpSpec& spec, const PipelineOptions& options, const OracleResult* true_oracle) {
    const auto started = std::chrono::steady_clock::now();
    if (const auto validation = validate_spec(spec); !validation.ok()) {
        std::string msg = "instance failed validation:";
        for (const auto& v : validation.violations) msg += "\n  " + v.message;
        throw ValidationError(msg, validation.violations);
    }
    if (options.n_per_pair < 1) throw Error("--samples must be at least 1");

    RunReport report;
    report.instance_name = spec.name;
    report.options = options;
    report.oracle = true_oracle ? *true_oracle : solve_cmdp_lp(spec);
    if (!report.oracle.feasible) throw InfeasibleError("the instance is infeasible: no policy meets every threshold");

    const int d = spec.num_constraints();
    PdConfig config;
    double omega = 0.0;
    switch (options.mode) {
        case Setting::Relaxed:
            config = instantiate_relaxed(options.epsilon, options.delta, spec.gamma, spec.thresholds);
            omega = config.omega;
            break;
        case Setting::Strict: {
            const double zeta = options.zeta.value_or(report.oracle.zeta_star);
            if (!(zeta > 0.0))
                throw InfeasibleError("strict mode needs a positive Slater constant; got zeta = " + std::to_string(zeta));
            config = instantiate_strict(options.epsilon, options.delta, spec.gamma, spec.thresholds, zeta);
            omega = config.omega;
            break;
        }
        case Setting::Raw:
            if (!options.eps_opt) throw Error("raw mode needs --eps-opt");
            if (!(options.omega >= 0.0 && options.omega <= 1.0)) throw Error("--omega must lie in [0, 1]");
            omega = options.omega;
            break;
    }

    const GenerativeModel model(spec, options.seed);
    const EmpiricalModel empirical = estimate_kernel(model, options.n_per_pair);
    const PerturbedReward perturbed = perturb_rewards(spec.reward, omega, options.seed);

    if (options.mode == Setting::Raw) {
        double norm = 0.0;
        if (options.lambda_star_norm) {
            norm = *options.lambda_star_norm;
        } else {
            auto emp_oracle = solve_cmdp_lp(make_empirical_cmdp(spec, empirical, perturbed, spec.thresholds));
            if (!emp_oracle.feasible) throw InfeasibleError("the empirical CMDP is infeasible");
            norm = emp_oracle.lambda_star.size() ? emp_oracle.lambda_star.lpNorm<Eigen::Infinity>() : 0.0;
            report.empirical_oracle = std::move(emp_oracle);
        }
        config = instantiate_raw(options.upper.value_or(norm + 1.0), norm, *options.eps_opt, spec.gamma, spec.thresholds, omega);
        config.epsilon = options.epsilon;
        config.delta = options.delta;
    }

    const CmdpSpec empirical_cmdp = make_empirical_cmdp(spec, empirical, perturbed, config.b_prime);
    report.t_theoretical = config.t;
    apply_iteration_cap(config, options.t_cap);
    report.config = config;

    PdOptions pd_options;
    pd_options.vi_tol = options.vi_tol;
    pd_options.record_trace = false;
    const PdTrace trace = run_primal_dual(empirical_cmdp, config, pd_options);

    report.mixture = trace.mixture;
    report.v_true_reward = evaluate_mixture(spec, Objective::reward(), trace.mixture);
    report.v_hat_rp = trace.v_bar_rp;
    report.v_hat_costs = trace.v_bar_c;
    report.empirical_check_passed = true;
    for (int i = 0; i < d; ++i) {
        const double v = evaluate_mixture(spec, Objective::cost(i), trace.mixture);
        report.v_true_costs.push_back(v);
        report.violations.push_back(std::max(0.0, spec.thresholds[static_cast<std::size_t>(i)] - v));
        if (trace.v_bar_c[static_cast<std::size_t>(i)] < config.b_prime[static_cast<std::size_t>(i)] - config.eps_opt)
            report.empirical_check_passed = false;
    }
    report.max_violation = vector_max(report.violations);
    report.subopt = report.oracle.v_star - report.v_true_reward;
    report.best_lagrangian = trace.best_lagrangian;
    report.final_lambda = trace.final_lambda;
    report.distinct_policies = trace.distinct_policies;

    if (omega > 0.0 && options.delta > 0.0 && options.delta < 1.0) {
        BoundInputs in;
        in.delta = options.delta;
        in.omega = omega;
        in.d = d;
        in.upper = config.upper;
        in.eps1 = config.eps1;
        in.num_states = spec.num_states;
        in.num_actions = spec.num_actions;
        in.gamma = spec.gamma;
        in.n_per_pair = static_cast<double>(options.n_per_pair);
        report.bounds = compute_bounds(in);
    }

    report.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return report;
}

json oracle_to_json(const OracleResult& oracle) {
    json out;
    out["feasible"] = oracle.feasible;
    out["v_star"] = nullable(oracle.v_star);
    out["lambda_star"] = oracle.feasible ? vec_json(oracle.lambda_star) : json(nullptr);
    out["zeta_star"] = nullable(oracle.zeta_star);
    if (oracle.feasible) {
        out["lp_primal"] = oracle.primal_objective;
        out["lp_dual"] = oracle.dual_objective;
        out["policy"] = table_json(oracle.policy.probs());
        out["occupancy"] = table_json(oracle.occupancy.mu);
    }
    return out;
}

json bounds_to_json(const ConcentrationBound& b) {
    json out;
    out["C_delta"] = b.c_delta;
    out["iota"] = b.iota;
    out["log_iota"] = b.log_iota;
    out["C_prime_delta"] = b.c_prime_delta;
    out["B_delta_N"] = b.b_delta_n;
    out["N_threshold"] = b.n_threshold;
    out["inputs"] = {{"delta", b.inputs.delta},       {"omega", b.inputs.omega},
                     {"d", b.inputs.d},               {"U", b.inputs.upper},
                     {"eps1", b.inputs.eps1},         {"num_states", b.inputs.num_states},
                     {"num_actions", b.inputs.num_actions}, {"gamma", b.inputs.gamma},
                     {"N", b.inputs.n_per_pair}};
    return out;
}

json report_to_json(const RunReport& r, bool include_runtime) {
    const PdConfig& c = r.config;
    json config;
    config["mode"] = to_string(c.setting);
    config["N"] = r.options.n_per_pair;
    config["seed"] = r.options.seed;
    config["T"] = r.t_theoretical;
    config["T_run"] = c.t_run;
    config["T_truncated"] = c.truncated;
    config["eta"] = c.eta;
    config["eta_run"] = c.eta_run;
    config["eps1"] = c.eps1;
    config["U"] = c.upper;
    config["lambda_star_norm_used"] = c.lambda_star_norm;
    config["omega"] = c.omega;
    config["b_prime"] = c.b_prime;
    config["eps_opt"] = c.eps_opt;
    config["epsilon"] = c.epsilon;
    config["delta"] = c.delta;
    config["gamma"] = c.gamma;
    config["d"] = c.d;
    if (c.setting == Setting::Strict) {
        config["Delta"] = c.delta_shift;
        config["zeta"] = c.zeta;
    }

    json result;
    result["v_true_reward"] = r.v_true_reward;
    result["v_true_costs"] = r.v_true_costs;
    result["v_hat_rp"] = r.v_hat_rp;
    result["v_hat_costs"] = r.v_hat_costs;
    result["violations"] = r.violations;
    result["max_violation"] = r.max_violation;
    result["subopt"] = r.subopt;
    result["empirical_check_passed"] = r.empirical_check_passed;
    result["best_lagrangian"] = r.best_lagrangian;
    result["final_lambda"] = r.final_lambda;
    result["distinct_policies"] = r.distinct_policies;

    json out;
    out["instance"] = r.instance_name;
    out["config"] = std::move(config);
    out["oracle"] = oracle_to_json(r.oracle);
    if (r.empirical_oracle) out["empirical_oracle"] = oracle_to_json(*r.empirical_oracle);
    out["result"] = std::move(result);
    out["bounds"] = r.bounds ? bounds_to_json(*r.bounds) : json(nullptr);
    if (include_runtime) out["runtime_ms"] = r.runtime_ms;
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

unsigned worker_count() {
    if (const char* env = std::getenv("CMDP_LAB_THREADS"); env && *env) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

SweepResult sweep(const CmdpSpec& spec, const PipelineOptions& base, const std::vector<std::int64_t>& n_grid,
                  const std::vector<std::uint64_t>& seeds) {
    if (n_grid.empty()) throw Error("sample grid is empty");
    if (seeds.empty()) throw Error("at least one seed is required");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1]) throw Error("sample grid must be strictly ascending");

    std::vector<std::uint64_t> sorted_seeds = seeds;
    std::sort(sorted_seeds.begin(), sorted_seeds.end());

    require_valid(spec);
    const OracleResult oracle = solve_cmdp_lp(spec);
    if (!oracle.feasible) throw InfeasibleError("the instance is infeasible: no policy meets every threshold");

    SweepResult result;
    result.d = spec.num_constraints();
    result.rows.resize(n_grid.size() * sorted_seeds.size());
    parallel_for(result.rows.size(), [&](std::size_t cell) {
        PipelineOptions opts = base;
        opts.n_per_pair = n_grid[cell / sorted_seeds.size()];
        opts.seed = sorted_seeds[cell % sorted_seeds.size()];
        const RunReport report = run_pipeline(spec, opts, &oracle);
        SweepRow& row = result.rows[cell];
        row.n = opts.n_per_pair;
        row.seed = opts.seed;
        row.v_true_mixture = report.v_true_reward;
        row.v_star = report.oracle.v_star;
        row.subopt = report.subopt;
        row.max_violation = report.max_violation;
        row.violations = report.violations;
        row.runtime_ms = report.runtime_ms;
    });

    for (std::size_t k = 0; k < n_grid.size(); ++k) {
        const auto first = result.rows.begin() + static_cast<std::ptrdiff_t>(k * sorted_seeds.size());
        const auto last = first + static_cast<std::ptrdiff_t>(sorted_seeds.size());
        auto column = [&](auto get) {
            std::vector<double> v;
            for (auto it = first; it != last; ++it) v.push_back(get(*it));
            return v;
        };
        SweepAggregate agg;
        agg.n = n_grid[k];
        agg.median_v_true_mixture = quantile(column([](const SweepRow& r) { return r.v_true_mixture; }), 0.5);
        agg.median_subopt = quantile(column([](const SweepRow& r) { return r.subopt; }), 0.5);
        agg.median_max_violation = quantile(column([](const SweepRow& r) { return r.max_violation; }), 0.5);
        agg.median_runtime_ms = quantile(column([](const SweepRow& r) { return r.runtime_ms; }), 0.5);
        for (int i = 0; i < result.d; ++i)
            agg.median_violations.push_back(
                quantile(column([i](const SweepRow& r) { return r.violations[static_cast<std::size_t>(i)]; }), 0.5));
        agg.p90_subopt = quantile(column([](const SweepRow& r) { return r.subopt; }), 0.9);
        agg.p90_max_violation = quantile(column([](const SweepRow& r) { return r.max_violation; }), 0.9);
        result.aggregates.push_back(std::move(agg));
    }
    return result;
}

std::string sweep_to_csv(const SweepResult& result, bool include_runtime) {
    std::ostringstream out;
    out << "kind,N,seed,v_true_mixture,v_star,subopt,max_violation";
    for (int i = 1; i <= result.d; ++i) out << ",violation_" << i;
    out << ",runtime_ms,subopt_p90,max_violation_p90\r\n";

    const std::string runtime_blank;
    for (const auto& row : result.rows) {
        out << csv_field("data") << ',' << row.n << ',' << row.seed << ',' << csv_number(row.v_true_mixture) << ','
            << csv_number(row.v_star) << ',' << csv_number(row.subopt) << ',' << csv_number(row.max_violation);
        for (double v : row.violations) out << ',' << csv_number(v);
        out << ',' << (include_runtime ? csv_number(row.runtime_ms) : runtime_blank) << ",,\r\n";
    }
    for (const auto& agg : result.aggregates) {
        const double v_star = result.rows.empty() ? std::nan("") : result.rows.front().v_star;
        out << csv_field("aggregate") << ',' << agg.n << ",," << csv_number(agg.median_v_true_mixture) << ','
            << csv_number(v_star) << ',' << csv_number(agg.median_subopt) << ',' << csv_number(agg.median_max_violation);
        for (double v : agg.median_violations) out << ',' << csv_number(v);
        out << ',' << (include_runtime ? csv_number(agg.median_runtime_ms) : runtime_blank) << ','
            << csv_number(agg.p90_subopt) << ',' << csv_number(agg.p90_max_violation) << "\r\n";
    }
    return out.str();
}

}  // namespace cmdp
