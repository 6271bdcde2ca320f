#include "cmdp/harness.hpp"
#include "cmdp/instances.hpp"
#include "cmdp/lp_oracle.hpp"
#include "cmdp/primal_dual.hpp"
#include "cmdp/sampling.hpp"
#include "cmdp/unconstrained_solver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace cmdp;

namespace {

Objective objective_from(const py::object& which) {
    if (py::isinstance<py::str>(which)) {
        if (which.cast<std::string>() == "reward") return Objective::reward();
        throw Error("objective must be 'reward' or a cost index");
    }
    return Objective::cost(which.cast<int>());
}

py::dict oracle_dict(const OracleResult& r) {
    py::dict out;
    out["feasible"] = r.feasible;
    out["v_star"] = r.v_star;
    out["zeta_star"] = r.zeta_star;
    if (r.feasible) {
        out["lambda_star"] = r.lambda_star;
        out["policy"] = r.policy.probs();
        out["occupancy"] = r.occupancy.mu;
        out["lp_primal"] = r.primal_objective;
        out["lp_dual"] = r.dual_objective;
    }
    return out;
}

py::dict config_dict(const PdConfig& c) {
    py::dict out;
    out["mode"] = to_string(c.setting);
    out["T"] = c.t;
    out["T_run"] = c.t_run;
    out["eta"] = c.eta;
    out["eps1"] = c.eps1;
    out["U"] = c.upper;
    out["eps_opt"] = c.eps_opt;
    out["omega"] = c.omega;
    out["b_prime"] = c.b_prime;
    out["lambda_star_norm"] = c.lambda_star_norm;
    out["Delta"] = c.delta_shift;
    return out;
}

PipelineOptions pipeline_options(const std::string& mode, double epsilon, double delta, std::int64_t samples,
                                 std::uint64_t seed, std::uint64_t t_cap, std::optional<double> upper,
                                 std::optional<double> eps_opt, std::optional<double> lambda_star_norm, double omega,
                                 std::optional<double> zeta) {
    PipelineOptions o;
    o.mode = setting_from_string(mode);
    o.epsilon = epsilon;
    o.delta = delta;
    o.n_per_pair = samples;
    o.seed = seed;
    o.t_cap = t_cap;
    o.upper = upper;
    o.eps_opt = eps_opt;
    o.lambda_star_norm = lambda_star_norm;
    o.omega = omega;
    o.zeta = zeta;
    return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sample-based constrained MDP solver";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });
    // Registered after the generic translator so they are tried first.
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);

    py::class_<CmdpSpec>(m, "Spec")
        .def_readonly("num_states", &CmdpSpec::num_states)
        .def_readonly("num_actions", &CmdpSpec::num_actions)
        .def_readonly("gamma", &CmdpSpec::gamma)
        .def_readonly("kernel", &CmdpSpec::kernel)
        .def_readonly("reward", &CmdpSpec::reward)
        .def_readonly("costs", &CmdpSpec::costs)
        .def_readonly("thresholds", &CmdpSpec::thresholds)
        .def_readonly("rho", &CmdpSpec::rho)
        .def_readonly("name", &CmdpSpec::name)
        .def_property_readonly("d", &CmdpSpec::num_constraints)
        .def("to_json", [](const CmdpSpec& s) { return spec_to_json(s).dump(); })
        .def("__repr__", [](const CmdpSpec& s) {
            return "<Spec '" + s.name + "' |S|=" + std::to_string(s.num_states) + " |A|=" + std::to_string(s.num_actions) +
                   " d=" + std::to_string(s.num_constraints()) + ">";
        });

    m.def("parse_instance", &parse_instance, py::arg("text"));
    m.def("load_instance", &load_instance, py::arg("path"));
    m.def("save_instance", &save_instance, py::arg("spec"), py::arg("path"));
    m.def("reference_instance", &reference_instance);
    m.def("random_instance", [](std::uint64_t seed, int num_states, int num_actions, int d, double gamma) {
        RandomCmdpOptions o;
        o.num_states = num_states;
        o.num_actions = num_actions;
        o.d = d;
        o.gamma = gamma;
        return random_cmdp(seed, o);
    }, py::arg("seed"), py::arg("num_states") = 4, py::arg("num_actions") = 3, py::arg("d") = 2, py::arg("gamma") = 0.8);

    m.def("validate", [](const CmdpSpec& spec) {
        const auto r = validate_spec(spec);
        py::dict out;
        std::vector<std::string> errors, warnings;
        for (const auto& v : r.violations) errors.push_back(v.message);
        for (const auto& v : r.warnings) warnings.push_back(v.message);
        out["ok"] = r.ok();
        out["violations"] = errors;
        out["warnings"] = warnings;
        return out;
    }, py::arg("spec"));

    m.def("policy_evaluation", [](const CmdpSpec& spec, const py::object& objective, const Eigen::MatrixXd& policy) {
        const auto rep = policy_evaluation(spec, objective_from(objective), TabularPolicy(policy));
        py::dict out;
        out["v"] = rep.v;
        out["q"] = rep.q;
        out["scalar_v"] = rep.scalar_v;
        return out;
    }, py::arg("spec"), py::arg("objective"), py::arg("policy"));

    m.def("evaluate_mixture", [](const CmdpSpec& spec, const py::object& objective, const std::vector<Eigen::MatrixXd>& components) {
        MixturePolicy mix;
        for (const auto& c : components) mix.add(TabularPolicy(c));
        return evaluate_mixture(spec, objective_from(objective), mix);
    }, py::arg("spec"), py::arg("objective"), py::arg("components"));

    m.def("value_iteration", [](const Eigen::MatrixXd& kernel, const Eigen::MatrixXd& f, double gamma, double tol) {
        ViOptions o;
        o.tol = tol;
        const SolveResult r = value_iteration(kernel, f, gamma, o);
        py::dict out;
        out["v_star"] = r.v_star;
        out["q_star"] = r.q_star;
        out["actions"] = r.actions;
        out["iterations"] = r.iterations;
        out["residual"] = r.residual;
        out["iota_gap"] = iota_gap(r).iota_hat;
        return out;
    }, py::arg("kernel"), py::arg("objective"), py::arg("gamma"), py::arg("tol") = 1e-9);

    m.def("solve_lp", [](const CmdpSpec& spec) { return oracle_dict(solve_cmdp_lp(spec)); }, py::arg("spec"));
    m.def("brute_force_small", [](const CmdpSpec& spec) { return oracle_dict(brute_force_small(spec)); }, py::arg("spec"));
    m.def("slater_constant", [](const CmdpSpec& spec) { return slater_constant(spec).zeta_star; }, py::arg("spec"));

    m.def("estimate_kernel", [](const CmdpSpec& spec, std::uint64_t seed, std::int64_t samples) {
        return estimate_kernel(GenerativeModel(spec, seed), samples).kernel_hat;
    }, py::arg("spec"), py::arg("seed"), py::arg("samples"));
    m.def("perturb_rewards", [](const Eigen::MatrixXd& reward, double omega, std::uint64_t seed) {
        return perturb_rewards(reward, omega, seed).r_p;
    }, py::arg("reward"), py::arg("omega"), py::arg("seed"));

    m.def("compute_bounds", [](double delta, double omega, int d, double upper, double eps1, int num_states,
                               int num_actions, double gamma, double samples) {
        const auto b = compute_bounds({delta, omega, d, upper, eps1, num_states, num_actions, gamma, samples});
        py::dict out;
        out["C_delta"] = b.c_delta;
        out["iota"] = b.iota;
        out["log_iota"] = b.log_iota;
        out["C_prime_delta"] = b.c_prime_delta;
        out["B_delta_N"] = b.b_delta_n;
        out["N_threshold"] = b.n_threshold;
        return out;
    }, py::arg("delta"), py::arg("omega"), py::arg("d"), py::arg("upper"), py::arg("eps1"), py::arg("num_states"),
          py::arg("num_actions"), py::arg("gamma"), py::arg("samples"));

    m.def("instantiate_schedule", [](double upper, double lambda_star_norm, double eps_opt, double gamma, int d) {
        const auto p = instantiate_schedule(upper, lambda_star_norm, eps_opt, gamma, d);
        py::dict out;
        out["T_exact"] = p.t_exact;
        out["T"] = p.t;
        out["eta"] = p.eta;
        out["eps1"] = p.eps1;
        return out;
    }, py::arg("upper"), py::arg("lambda_star_norm"), py::arg("eps_opt"), py::arg("gamma"), py::arg("d"));
    m.def("instantiate_relaxed", [](double epsilon, double delta, double gamma, const std::vector<double>& b) {
        return config_dict(instantiate_relaxed(epsilon, delta, gamma, b));
    }, py::arg("epsilon"), py::arg("delta"), py::arg("gamma"), py::arg("thresholds"));
    m.def("instantiate_strict", [](double epsilon, double delta, double gamma, const std::vector<double>& b, double zeta) {
        return config_dict(instantiate_strict(epsilon, delta, gamma, b, zeta));
    }, py::arg("epsilon"), py::arg("delta"), py::arg("gamma"), py::arg("thresholds"), py::arg("zeta"));
    m.def("round_to_net", &round_to_net, py::arg("x"), py::arg("eps1"), py::arg("upper"));

    m.def("run_primal_dual", [](const CmdpSpec& empirical, double upper, double lambda_star_norm, double eps_opt,
                                std::uint64_t t_cap) {
        PdConfig c = instantiate_raw(upper, lambda_star_norm, eps_opt, empirical.gamma, empirical.thresholds);
        apply_iteration_cap(c, t_cap);
        const PdTrace t = run_primal_dual(empirical, c, {1e-9, false});
        py::dict out;
        out["config"] = config_dict(c);
        out["v_bar_r"] = t.v_bar_rp;
        out["v_bar_c"] = t.v_bar_c;
        out["final_lambda"] = t.final_lambda;
        out["best_lagrangian"] = t.best_lagrangian;
        out["distinct_policies"] = t.distinct_policies;
        return out;
    }, py::arg("spec"), py::arg("upper"), py::arg("lambda_star_norm"), py::arg("eps_opt"), py::arg("t_cap") = 0);

    m.def("_run_pipeline_json", [](const CmdpSpec& spec, const std::string& mode, double epsilon, double delta,
                                   std::int64_t samples, std::uint64_t seed, std::uint64_t t_cap,
                                   std::optional<double> upper, std::optional<double> eps_opt,
                                   std::optional<double> lambda_star_norm, double omega, std::optional<double> zeta,
                                   bool include_runtime) {
        const auto opts = pipeline_options(mode, epsilon, delta, samples, seed, t_cap, upper, eps_opt, lambda_star_norm, omega, zeta);
        py::gil_scoped_release release;
        return report_to_json(run_pipeline(spec, opts), include_runtime).dump();
    });

    m.def("_sweep_csv", [](const CmdpSpec& spec, const std::string& mode, double epsilon, double delta,
                           const std::vector<std::int64_t>& n_grid, const std::vector<std::uint64_t>& seeds,
                           std::uint64_t t_cap, bool include_runtime) {
        const auto opts = pipeline_options(mode, epsilon, delta, 1, 0, t_cap, std::nullopt, std::nullopt, std::nullopt, 0.0, std::nullopt);
        py::gil_scoped_release release;
        return sweep_to_csv(sweep(spec, opts, n_grid, seeds), include_runtime);
    });
}
