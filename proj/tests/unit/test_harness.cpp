#include "cmdp/harness.hpp"
#include "cmdp/instances.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cmdp;

namespace {

std::string two_state_text() {
    return R"({
  "name": "tiny",
  "num_states": 2,
  "num_actions": 2,
  "gamma": 0.9,
  "rho": [0.5, 0.5],
  "kernel": [[[0.9, 0.1], [0.2, 0.8]], [[1.0, 0.0], [0.5, 0.5]]],
  "reward": [[1.0, 0.0], [0.3, 0.6]],
  "costs": [[[0.0, 1.0], [0.5, 0.2]]],
  "thresholds": [2.0]
})";
}

std::string expect_validation_error(const std::string& text) {
    try {
        parse_instance(text);
    } catch (const ValidationError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ValidationError";
    return {};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST(Instance, ParsesWellFormedFile) {
    const CmdpSpec spec = parse_instance(two_state_text());
    EXPECT_EQ(spec.num_states, 2);
    EXPECT_EQ(spec.num_actions, 2);
    EXPECT_EQ(spec.name, "tiny");
    EXPECT_DOUBLE_EQ(spec.kernel(spec.row(0, 1), 1), 0.8);
    EXPECT_DOUBLE_EQ(spec.costs[0](1, 0), 0.5);
}

TEST(Instance, RoundTripThroughFile) {
    const CmdpSpec spec = reference_instance();
    const auto path = std::filesystem::temp_directory_path() / "cmdp_lab_roundtrip.json";
    save_instance(spec, path.string());
    const CmdpSpec back = load_instance(path.string());
    std::filesystem::remove(path);
    EXPECT_EQ(back.kernel, spec.kernel);
    EXPECT_EQ(back.reward, spec.reward);
    EXPECT_EQ(back.costs[1], spec.costs[1]);
    EXPECT_EQ(back.thresholds, spec.thresholds);
    EXPECT_EQ(back.rho, spec.rho);
    EXPECT_EQ(back.name, spec.name);
}

TEST(Instance, KernelRowNamedInRejection) {
    std::string text = two_state_text();
    text.replace(text.find("[0.2, 0.8]"), 10, "[0.2, 0.7]");
    const std::string msg = expect_validation_error(text);
    EXPECT_NE(msg.find("kernel row (s=0,a=1) sums to 0.9"), std::string::npos) << msg;
}

TEST(Instance, DMismatchRejected) {
    std::string text = two_state_text();
    text.replace(text.find("[2.0]"), 5, "[2.0, 1.0]");
    EXPECT_NE(expect_validation_error(text).find("d mismatch"), std::string::npos);
}

TEST(Instance, AllViolationsListed) {
    std::string text = two_state_text();
    text.replace(text.find("[0.2, 0.8]"), 10, "[0.2, 0.7]");
    text.replace(text.find("[0.3, 0.6]"), 10, "[0.3, 1.6]");
    try {
        parse_instance(text);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.violations().size(), 2u);
    }
}

TEST(Instance, ShapeErrors) {
    std::string text = two_state_text();
    text.replace(text.find("[0.3, 0.6]"), 10, "[0.3]");
    EXPECT_NE(expect_validation_error(text).find("reward[1]"), std::string::npos);
    EXPECT_NE(expect_validation_error("{\"num_states\": 2}").find("missing key"), std::string::npos);
    EXPECT_NE(expect_validation_error("[1, 2]").find("object"), std::string::npos);
}

TEST(Instance, ParseErrorCarriesLineContext) {
    const std::string msg = expect_validation_error("{\n  \"num_states\": 2,\n  \"gamma\": 0.9,,\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("\"gamma\": 0.9,,"), std::string::npos) << msg;
}

TEST(Instance, MissingFile) {
    EXPECT_THROW(load_instance("/nonexistent/cmdp.json"), ValidationError);
}

TEST(Pipeline, RelaxedEchoesInstantiation) {
    PipelineOptions opt;
    opt.mode = Setting::Relaxed;
    opt.epsilon = 0.4;
    opt.n_per_pair = 50;
    opt.t_cap = 200;
    const RunReport r = run_pipeline(fixtures::single_state(), opt);
    EXPECT_NEAR(r.config.b_prime[0], 0.65, 1e-12);
    EXPECT_NEAR(r.config.omega, 0.025, 1e-12);
    EXPECT_NEAR(r.config.upper, 80.0, 1e-12);
    EXPECT_TRUE(r.config.truncated);
    const auto doc = report_to_json(r);
    EXPECT_NEAR(doc["config"]["U"].get<double>(), 80.0, 1e-12);
    EXPECT_TRUE(doc["bounds"].is_object());
}

TEST(Pipeline, StrictEchoesInstantiation) {
    PipelineOptions opt;
    opt.mode = Setting::Strict;
    opt.epsilon = 0.4;
    opt.n_per_pair = 50;
    opt.t_cap = 200;
    const RunReport r = run_pipeline(fixtures::single_state(), opt);
    EXPECT_NEAR(r.oracle.zeta_star, 1.2, 1e-9);
    EXPECT_NEAR(r.config.b_prime[0], 0.812, 1e-9);
    EXPECT_NEAR(r.config.omega, 0.02, 1e-12);
    EXPECT_NEAR(r.config.upper, 6.8, 1e-9);
}

TEST(Pipeline, StrictRejectsNonPositiveZeta) {
    PipelineOptions opt;
    opt.mode = Setting::Strict;
    opt.zeta = 0.0;
    EXPECT_THROW(run_pipeline(fixtures::single_state(), opt), InfeasibleError);
    // b = 2 is exactly attainable, so the LP-exact Slater constant is 0.
    PipelineOptions exact;
    exact.mode = Setting::Strict;
    EXPECT_THROW(run_pipeline(fixtures::single_state(0.5, 2.0), exact), InfeasibleError);
}

TEST(Pipeline, RawModeWithExactKernelAndDual) {
    PipelineOptions opt;
    opt.mode = Setting::Raw;
    opt.eps_opt = 0.1;
    opt.upper = 2.0;
    opt.lambda_star_norm = 1.0;
    opt.n_per_pair = 10;
    const RunReport r = run_pipeline(fixtures::single_state(), opt);
    EXPECT_GE(r.v_true_reward, r.oracle.v_star - 0.1);
    EXPECT_FALSE(r.bounds.has_value());
}

TEST(Pipeline, RawModeDefaultsFromEmpiricalLp) {
    PipelineOptions opt;
    opt.mode = Setting::Raw;
    opt.eps_opt = 0.2;
    opt.n_per_pair = 10;
    const RunReport r = run_pipeline(fixtures::single_state(), opt);
    ASSERT_TRUE(r.empirical_oracle.has_value());
    EXPECT_NEAR(r.config.lambda_star_norm, 1.0, 1e-9);
    EXPECT_NEAR(r.config.upper, 2.0, 1e-9);
    PipelineOptions missing;
    missing.mode = Setting::Raw;
    EXPECT_THROW(run_pipeline(fixtures::single_state(), missing), Error);
}

TEST(Pipeline, InfeasibleInstance) {
    EXPECT_THROW(run_pipeline(fixtures::single_state(0.5, 3.0), PipelineOptions{}), InfeasibleError);
}

TEST(Pipeline, ReportIsSelfConsistent) {
    const CmdpSpec spec = reference_instance();
    PipelineOptions opt;
    opt.epsilon = 0.3;
    opt.n_per_pair = 300;
    opt.t_cap = 2000;
    opt.seed = 9;
    const RunReport r = run_pipeline(spec, opt);
    EXPECT_NEAR(r.subopt, r.oracle.v_star - evaluate_mixture(spec, Objective::reward(), r.mixture), 1e-9);
    for (int i = 0; i < 2; ++i) {
        const double v = evaluate_mixture(spec, Objective::cost(i), r.mixture);
        EXPECT_NEAR(r.violations[static_cast<std::size_t>(i)], std::max(0.0, spec.thresholds[static_cast<std::size_t>(i)] - v), 1e-9);
        EXPECT_GE(r.violations[static_cast<std::size_t>(i)], 0.0);
    }
    if (r.empirical_check_passed) EXPECT_LE(r.max_violation, opt.epsilon + 1e-9);
}

TEST(Pipeline, JsonIsDeterministic) {
    PipelineOptions opt;
    opt.n_per_pair = 200;
    opt.t_cap = 500;
    opt.seed = 4;
    const CmdpSpec spec = reference_instance();
    EXPECT_EQ(report_to_json(run_pipeline(spec, opt), false).dump(), report_to_json(run_pipeline(spec, opt), false).dump());
}

TEST(Sweep, Cardinality) {
    PipelineOptions base;
    base.t_cap = 100;
    const SweepResult res = sweep(reference_instance(), base, {100}, {1});
    EXPECT_EQ(res.rows.size(), 1u);
    EXPECT_EQ(res.aggregates.size(), 1u);
    const auto csv = lines(sweep_to_csv(res));
    ASSERT_EQ(csv.size(), 3u);
    EXPECT_EQ(csv[0].rfind("kind,N,seed,v_true_mixture,v_star,subopt,max_violation,violation_1,violation_2,runtime_ms", 0), 0u);
    EXPECT_EQ(csv[1].rfind("data,100,1,", 0), 0u);
    EXPECT_EQ(csv[2].rfind("aggregate,100,,", 0), 0u);
}

TEST(Sweep, IdenticalSeedsGiveIdenticalRows) {
    PipelineOptions base;
    base.t_cap = 200;
    const SweepResult res = sweep(reference_instance(), base, {150}, {3, 3});
    const auto csv = lines(sweep_to_csv(res, false));
    EXPECT_EQ(csv[1], csv[2]);
}

TEST(Sweep, OrderIndependentOfThreadCount) {
    PipelineOptions base;
    base.t_cap = 150;
    ::setenv("CMDP_LAB_THREADS", "1", 1);
    const std::string serial = sweep_to_csv(sweep(reference_instance(), base, {50, 200}, {5, 2, 9}), false);
    ::setenv("CMDP_LAB_THREADS", "4", 1);
    const std::string parallel = sweep_to_csv(sweep(reference_instance(), base, {50, 200}, {9, 5, 2}), false);
    ::unsetenv("CMDP_LAB_THREADS");
    EXPECT_EQ(serial, parallel);
    EXPECT_EQ(lines(serial)[1].rfind("data,50,2,", 0), 0u);
}

TEST(Sweep, InputErrors) {
    EXPECT_THROW(sweep(reference_instance(), {}, {}, {1}), Error);
    EXPECT_THROW(sweep(reference_instance(), {}, {100}, {}), Error);
    EXPECT_THROW(sweep(reference_instance(), {}, {200, 100}, {1}), Error);
}

TEST(Quantile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0}, 0.5), 2.0);
    EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0}, 0.5), 2.5);
    EXPECT_NEAR(quantile({0.0, 10.0}, 0.9), 9.0, 1e-12);
    EXPECT_THROW(quantile({}, 0.5), Error);
}

TEST(Workers, EnvironmentCap) {
    ::setenv("CMDP_LAB_THREADS", "3", 1);
    EXPECT_EQ(worker_count(), 3u);
    ::setenv("CMDP_LAB_THREADS", "junk", 1);
    EXPECT_GE(worker_count(), 1u);
    ::unsetenv("CMDP_LAB_THREADS");
    EXPECT_GE(worker_count(), 1u);
}

TEST(Workers, ParallelForPropagatesExceptions) {
    ::setenv("CMDP_LAB_THREADS", "3", 1);
    EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw Error("boom"); }), Error);
    std::vector<int> hit(20, 0);
    parallel_for(hit.size(), [&](std::size_t i) { hit[i] = 1; });
    ::unsetenv("CMDP_LAB_THREADS");
    for (int h : hit) EXPECT_EQ(h, 1);
}
