#include "cmdp/unconstrained_solver.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace cmdp;

TEST(ValueIteration, MyopicCase) {
    fixtures::Gen gen(1);
    const CmdpSpec spec = gen.spec(4, 3, 1, 0.0);
    const SolveResult res = value_iteration(spec.kernel, spec.reward, 0.0);
    for (int s = 0; s < 4; ++s) {
        Eigen::Index best = 0;
        EXPECT_DOUBLE_EQ(res.v_star(s), spec.reward.row(s).maxCoeff(&best));
        EXPECT_EQ(res.actions[static_cast<std::size_t>(s)], static_cast<int>(best));
    }
    EXPECT_TRUE(res.policy.is_deterministic());
}

TEST(ValueIteration, GeometricSeries) {
    const SolveResult res = value_iteration(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1), 0.9);
    EXPECT_NEAR(res.v_star(0), 10.0, 1e-9 * 0.9 / 0.1 + 1e-12);
}

TEST(ValueIteration, TwoStateChain) {
    const CmdpSpec spec = fixtures::two_state_chain();
    const SolveResult res = value_iteration(spec.kernel, spec.reward, 0.5);
    EXPECT_NEAR(res.v_star(0), 1.0, 1e-9);
    EXPECT_NEAR(res.v_star(1), 2.0, 1e-9);
}

TEST(ValueIteration, VStarIsMaxQ) {
    fixtures::Gen gen(31);
    const CmdpSpec spec = gen.spec(6, 4, 1, 0.95);
    const SolveResult res = value_iteration(spec.kernel, spec.reward, spec.gamma);
    for (int s = 0; s < 6; ++s) EXPECT_NEAR(res.v_star(s), res.q_star.row(s).maxCoeff(), 1e-8);
    EXPECT_LE(res.residual, 1e-9 * (1 - spec.gamma) / (2 * spec.gamma));
}

TEST(ValueIteration, LowestIndexTieBreak) {
    const Eigen::MatrixXd kernel = Eigen::MatrixXd::Ones(3, 1);
    const Eigen::MatrixXd f = (Eigen::MatrixXd(1, 3) << 0.4, 0.7, 0.7).finished();
    const SolveResult res = value_iteration(kernel, f, 0.5);
    EXPECT_EQ(res.actions[0], 1);
}

TEST(ValueIteration, WarmStartGivesSameAnswer) {
    fixtures::Gen gen(12);
    const CmdpSpec spec = gen.spec(5, 3, 1, 0.9);
    const SolveResult cold = value_iteration(spec.kernel, spec.reward, spec.gamma);
    const Eigen::VectorXd warm_v = cold.v_star * 0.9;
    ViOptions opt;
    opt.warm_start = &warm_v;
    const SolveResult warm = value_iteration(spec.kernel, spec.reward, spec.gamma, opt);
    EXPECT_LE((warm.v_star - cold.v_star).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_EQ(warm.actions, cold.actions);
}

TEST(ValueIteration, InputErrors) {
    const Eigen::MatrixXd kernel = Eigen::MatrixXd::Ones(2, 1);
    Eigen::MatrixXd f = Eigen::MatrixXd::Ones(1, 2);
    ViOptions bad_tol;
    bad_tol.tol = 0.0;
    EXPECT_THROW(value_iteration(kernel, f, 0.5, bad_tol), Error);
    f(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(value_iteration(kernel, f, 0.5), Error);
    EXPECT_THROW(value_iteration(kernel, Eigen::MatrixXd::Ones(2, 2), 0.5), Error);
}

TEST(IotaGap, MyopicTwoActions) {
    const SolveResult res =
        value_iteration(Eigen::MatrixXd::Ones(2, 1), (Eigen::MatrixXd(1, 2) << 1.0, 0.2).finished(), 0.0);
    const GapReport gap = iota_gap(res);
    EXPECT_NEAR(gap.iota_hat, 0.8, 1e-12);
    EXPECT_EQ(gap.argmin_state, 0);
}

TEST(IotaGap, ExactTieIsZero) {
    fixtures::Gen gen(6);
    CmdpSpec spec = gen.spec(3, 2, 1, 0.8);
    for (int s = 0; s < 3; ++s) {
        spec.reward(s, 1) = spec.reward(s, 0);
        spec.kernel.row(spec.row(s, 1)) = spec.kernel.row(spec.row(s, 0));
    }
    EXPECT_EQ(iota_gap(value_iteration(spec.kernel, spec.reward, spec.gamma)).iota_hat, 0.0);
}

TEST(IotaGap, SingleActionIsInfinite) {
    const CmdpSpec spec = fixtures::two_state_chain();
    EXPECT_TRUE(std::isinf(iota_gap(value_iteration(spec.kernel, spec.reward, 0.5)).iota_hat));
}

TEST(IotaGap, NonNegativeOnRandomInstances) {
    fixtures::Gen gen(60);
    for (int k = 0; k < 20; ++k) {
        const CmdpSpec spec = gen.spec(4, 3, 1, 0.7);
        const SolveResult res = value_iteration(spec.kernel, spec.reward, spec.gamma);
        EXPECT_GE(iota_gap(res).iota_hat, 0.0);
    }
}
