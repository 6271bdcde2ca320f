#include "cmdp/sampling.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace cmdp;

namespace {

CmdpSpec with_row(const std::vector<double>& row) {
    const int n = static_cast<int>(row.size());
    CmdpSpec spec;
    spec.num_states = n;
    spec.num_actions = 1;
    spec.gamma = 0.5;
    spec.kernel.resize(n, n);
    for (int s = 0; s < n; ++s)
        for (int j = 0; j < n; ++j) spec.kernel(s, j) = row[static_cast<std::size_t>(j)];
    spec.reward = Eigen::MatrixXd::Zero(n, 1);
    spec.costs = {Eigen::MatrixXd::Zero(n, 1)};
    spec.thresholds = {0.0};
    spec.rho = Eigen::VectorXd::Constant(n, 1.0 / n);
    return spec;
}

// Direct (non-log-space) evaluation used as an independent reference.
double iota_direct(double delta, double omega, int d, double u, double eps1, int ns, int na, double gamma) {
    return omega * delta * (1.0 - gamma) * std::pow(eps1, d) / (30.0 * std::pow(u, d) * ns * na * na);
}

double c_direct(double delta, double omega, int d, double u, double eps1, int ns, int na, double gamma) {
    const double iota = iota_direct(delta, omega, d, u, eps1, ns, na, gamma);
    return 72.0 * std::log(16.0 * (1.0 + omega + d * u) * ns * na * std::log(std::exp(1.0) / (1.0 - gamma)) /
                           ((1.0 - gamma) * (1.0 - gamma) * iota * delta));
}

double c_prime_direct(double delta, int ns, double gamma) {
    return 72.0 * std::log(4.0 * ns * std::log(std::exp(1.0) / (1.0 - gamma)) / delta);
}

}  // namespace

TEST(Rng, ToUnitRange) {
    EXPECT_EQ(rng::to_unit(0), 0.0);
    EXPECT_LT(rng::to_unit(~0ULL), 1.0);
}

TEST(Rng, HashSeparatesKeys) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 4; ++s)
        for (std::uint64_t a = 0; a < 4; ++a)
            for (std::uint64_t c = 0; c < 16; ++c) seen.insert(rng::hash(1, rng::kTransitionDomain, s, a, c));
    EXPECT_EQ(seen.size(), 4u * 4u * 16u);
    EXPECT_NE(rng::hash(1, rng::kTransitionDomain, 0, 0, 0), rng::hash(1, rng::kPerturbationDomain, 0, 0, 0));
}

TEST(SampleNextState, PointMassRow) {
    const GenerativeModel model(with_row({0.0, 1.0, 0.0}), 42);
    for (std::uint64_t k = 0; k < 1000; ++k) EXPECT_EQ(model.sample_next_state(0, 0, k), 1);
}

TEST(SampleNextState, ReplayIsIdentical) {
    const CmdpSpec spec = with_row({0.2, 0.3, 0.5});
    const GenerativeModel a(spec, 7);
    const GenerativeModel b(spec, 7);
    for (std::uint64_t k = 0; k < 500; ++k) EXPECT_EQ(a.sample_next_state(1, 0, k), b.sample_next_state(1, 0, k));
}

TEST(SampleNextState, FairCoinFrequency) {
    const GenerativeModel model(with_row({0.5, 0.5}), 2024);
    int zeros = 0;
    for (std::uint64_t k = 0; k < 10000; ++k) zeros += model.sample_next_state(0, 0, k) == 0;
    EXPECT_GE(zeros, 4700);
    EXPECT_LE(zeros, 5300);
}

TEST(SampleNextState, ChiSquareGoodnessOfFit) {
    const std::vector<double> p{0.1, 0.2, 0.3, 0.15, 0.25};
    const GenerativeModel model(with_row(p), 99);
    std::vector<double> counts(p.size(), 0.0);
    const int n = 100000;
    for (int k = 0; k < n; ++k) counts[static_cast<std::size_t>(model.sample_next_state(2, 0, static_cast<std::uint64_t>(k)))] += 1.0;
    double chi2 = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) chi2 += std::pow(counts[j] - n * p[j], 2) / (n * p[j]);
    // chi-square critical value, 4 degrees of freedom, significance 0.01
    EXPECT_LT(chi2, 13.2767);
}

TEST(SampleNextState, IndexOutOfRange) {
    const GenerativeModel model(with_row({0.5, 0.5}), 1);
    EXPECT_THROW(model.sample_next_state(2, 0, 0), Error);
    EXPECT_THROW(model.sample_next_state(0, 1, 0), Error);
    EXPECT_THROW(model.sample_next_state(-1, 0, 0), Error);
}

TEST(EstimateKernel, CountsNormalize) {
    const EmpiricalModel m = empirical_from_counts(2, 1, 4, {3, 1, 0, 4});
    EXPECT_DOUBLE_EQ(m.kernel_hat(0, 0), 0.75);
    EXPECT_DOUBLE_EQ(m.kernel_hat(0, 1), 0.25);
    EXPECT_DOUBLE_EQ(m.kernel_hat(1, 1), 1.0);
    EXPECT_THROW(empirical_from_counts(2, 1, 4, {3, 2, 0, 4}), Error);
}

TEST(EstimateKernel, DeterministicKernelIsRecoveredExactly) {
    const CmdpSpec spec = fixtures::two_state_chain();
    for (std::int64_t n : {1, 7, 100}) {
        const EmpiricalModel m = estimate_kernel(GenerativeModel(spec, 3), n);
        EXPECT_EQ(m.kernel_hat, spec.kernel);
    }
}

TEST(EstimateKernel, LargeSampleAccuracy) {
    const CmdpSpec spec = with_row({0.3, 0.7});
    const EmpiricalModel m = estimate_kernel(GenerativeModel(spec, 5), 100000);
    EXPECT_LE((m.kernel_hat - spec.kernel).cwiseAbs().maxCoeff(), 0.01);
}

TEST(EstimateKernel, CountsSumToN) {
    fixtures::Gen gen(8);
    const CmdpSpec spec = gen.spec(4, 3, 1, 0.9);
    const EmpiricalModel m = estimate_kernel(GenerativeModel(spec, 17), 250);
    for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 3; ++a) {
            std::int64_t total = 0;
            for (int j = 0; j < 4; ++j) {
                total += m.count(s, a, j);
                EXPECT_DOUBLE_EQ(m.kernel_hat(spec.row(s, a), j), static_cast<double>(m.count(s, a, j)) / 250.0);
                if (spec.kernel(spec.row(s, a), j) == 0.0) EXPECT_EQ(m.count(s, a, j), 0);
            }
            EXPECT_EQ(total, 250);
        }
}

TEST(EstimateKernel, RejectsZeroSamples) {
    EXPECT_THROW(estimate_kernel(GenerativeModel(fixtures::single_state(), 1), 0), Error);
}

TEST(PerturbRewards, ZeroOmegaIsIdentity) {
    fixtures::Gen gen(4);
    const Table r = gen.table(3, 3);
    EXPECT_EQ(perturb_rewards(r, 0.0, 12).r_p, r);
}

TEST(PerturbRewards, SameSeedSameOutput) {
    fixtures::Gen gen(4);
    const Table r = gen.table(3, 3);
    EXPECT_EQ(perturb_rewards(r, 0.3, 12).r_p, perturb_rewards(r, 0.3, 12).r_p);
    EXPECT_NE(perturb_rewards(r, 0.3, 12).r_p, perturb_rewards(r, 0.3, 13).r_p);
}

TEST(PerturbRewards, MeanOfXi) {
    const Table r = Eigen::MatrixXd::Zero(40, 25);
    const PerturbedReward p = perturb_rewards(r, 0.5, 77);
    const double mean = p.xi.mean();
    EXPECT_GE(mean, 0.22);
    EXPECT_LE(mean, 0.28);
    EXPECT_GE(p.xi.minCoeff(), 0.0);
    EXPECT_LT(p.xi.maxCoeff(), 0.5);
    EXPECT_EQ(p.r_p, r + p.xi);
}

TEST(PerturbRewards, OmegaDomain) {
    const Table r = Eigen::MatrixXd::Zero(2, 2);
    EXPECT_THROW(perturb_rewards(r, -0.1, 1), Error);
    EXPECT_THROW(perturb_rewards(r, 1.1, 1), Error);
    EXPECT_NO_THROW(perturb_rewards(r, 1.0, 1));
}

TEST(Bounds, IotaHandExample) {
    const double expected = 0.5 * 0.1 * 0.5 * 0.5 / (30.0 * 2.0 * 2.0 * 4.0);
    EXPECT_NEAR(std::exp(log_iota(0.1, 0.5, 1, 2.0, 0.5, 2, 2, 0.5)), expected, 1e-9 * expected);
    EXPECT_NEAR(expected, 2.604e-5, 1e-8);
}

TEST(Bounds, CPrimeHandExample) {
    const double expected = 72.0 * std::log(4.0 * 2.0 * std::log(2.0 * std::exp(1.0)) / 0.1);
    EXPECT_NEAR(c_prime_of_delta(0.1, 2, 0.5), expected, 1e-9 * expected);
    EXPECT_NEAR(expected, 353.4, 0.1);
}

TEST(Bounds, BHandExample) {
    const double cp = c_prime_direct(0.1, 2, 0.5);
    const double expected = std::sqrt(cp / (0.125 * 1e6));
    EXPECT_NEAR(b_of_delta_n(0.1, 2, 0.5, 1e6), expected, 1e-9 * expected);
    EXPECT_NEAR(expected, 0.0532, 5e-4);
}

TEST(Bounds, CMatchesDirectFormula) {
    const double expected = c_direct(0.1, 0.5, 1, 2.0, 0.5, 2, 2, 0.5);
    EXPECT_NEAR(c_of_delta(0.1, 0.5, 1, 2.0, 0.5, 2, 2, 0.5), expected, 1e-9 * expected);
}

TEST(Bounds, ComputeBoundsIsConsistent) {
    BoundInputs in{0.1, 0.5, 2, 3.0, 0.25, 4, 3, 0.8, 5000.0};
    const ConcentrationBound b = compute_bounds(in);
    EXPECT_NEAR(b.iota, iota_direct(0.1, 0.5, 2, 3.0, 0.25, 4, 3, 0.8), 1e-9 * b.iota);
    EXPECT_NEAR(b.c_delta, c_direct(0.1, 0.5, 2, 3.0, 0.25, 4, 3, 0.8), 1e-9 * b.c_delta);
    EXPECT_NEAR(b.c_prime_delta, c_prime_direct(0.1, 4, 0.8), 1e-9 * b.c_prime_delta);
    EXPECT_NEAR(b.b_delta_n, std::sqrt(c_prime_direct(0.1, 4, 0.8) / (std::pow(0.2, 3) * 5000.0)), 1e-9 * b.b_delta_n);
    const double threshold = 4.0 * c_direct(0.05, 0.5, 2, 3.0, 0.25, 4, 3, 0.8) / 0.2;
    EXPECT_NEAR(b.n_threshold, threshold, 1e-9 * threshold);
}

TEST(Bounds, LargeDStaysFinite) {
    BoundInputs in{0.1, 0.5, 400, 1000.0, 1e-6, 10, 5, 0.99, 1e6};
    const ConcentrationBound b = compute_bounds(in);
    EXPECT_TRUE(std::isfinite(b.c_delta));
    EXPECT_TRUE(std::isfinite(b.log_iota));
    EXPECT_GT(b.c_delta, 0.0);
}

TEST(Bounds, DomainErrors) {
    EXPECT_THROW(compute_bounds({0.0, 0.5, 1, 2.0, 0.5, 2, 2, 0.5, 10.0}), Error);
    EXPECT_THROW(compute_bounds({1.0, 0.5, 1, 2.0, 0.5, 2, 2, 0.5, 10.0}), Error);
    EXPECT_THROW(compute_bounds({0.1, 0.0, 1, 2.0, 0.5, 2, 2, 0.5, 10.0}), Error);
    EXPECT_THROW(compute_bounds({0.1, 1.5, 1, 2.0, 0.5, 2, 2, 0.5, 10.0}), Error);
    EXPECT_THROW(compute_bounds({0.1, 0.5, 1, 2.0, 3.0, 2, 2, 0.5, 10.0}), Error);
    EXPECT_THROW(compute_bounds({0.1, 0.5, 1, 2.0, 0.5, 2, 2, 1.0, 10.0}), Error);
    EXPECT_THROW(compute_bounds({0.1, 0.5, 0, 2.0, 0.5, 2, 2, 0.5, 10.0}), Error);
}
