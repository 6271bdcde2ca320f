#include "cmdp/sampling.hpp"

#include <cmath>
#include <numbers>

namespace cmdp {

namespace rng {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash(std::uint64_t seed, std::uint64_t domain, std::uint64_t i, std::uint64_t j, std::uint64_t counter) {
    std::uint64_t h = mix(seed ^ mix(domain));
    h = mix(h ^ i);
    h = mix(h ^ (j + 0x632be59bd9b4e019ULL));
    return mix(h ^ (counter * 0xd6e8feb86659fd93ULL));
}

double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace rng

GenerativeModel::GenerativeModel(const CmdpSpec& spec, std::uint64_t master_seed)
    : num_states_(spec.num_states), num_actions_(spec.num_actions), seed_(master_seed) {
    require_valid(spec);
    cdf_.resize(spec.kernel.rows(), spec.kernel.cols());
    last_support_.resize(static_cast<std::size_t>(spec.kernel.rows()));
    for (Eigen::Index r = 0; r < spec.kernel.rows(); ++r) {
        double acc = 0.0;
        int last = 0;
        for (Eigen::Index j = 0; j < spec.kernel.cols(); ++j) {
            acc += spec.kernel(r, j);
            cdf_(r, j) = acc;
            if (spec.kernel(r, j) > 0.0) last = static_cast<int>(j);
        }
        last_support_[static_cast<std::size_t>(r)] = last;
    }
}

int GenerativeModel::sample_next_state(int s, int a, std::uint64_t draw_index) const {
    if (s < 0 || s >= num_states_ || a < 0 || a >= num_actions_)
        throw Error("state-action (" + std::to_string(s) + "," + std::to_string(a) + ") out of range");
    const double u = rng::to_unit(rng::hash(seed_, rng::kTransitionDomain, static_cast<std::uint64_t>(s),
                                            static_cast<std::uint64_t>(a), draw_index));
    const Eigen::Index r = static_cast<Eigen::Index>(s) * num_actions_ + a;
    for (Eigen::Index j = 0; j < cdf_.cols(); ++j)
        if (u < cdf_(r, j)) return static_cast<int>(j);
    // Row sums a hair below 1 leave a sliver of [0, 1) uncovered.
    return last_support_[static_cast<std::size_t>(r)];
}

EmpiricalModel estimate_kernel(const GenerativeModel& model, std::int64_t n_per_pair) {
    if (n_per_pair <= 0) throw Error("samples per state-action pair must be positive");
    const int ns = model.num_states();
    const int na = model.num_actions();
    std::vector<std::int64_t> counts(static_cast<std::size_t>(ns) * na * ns, 0);
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            auto* row = counts.data() + (static_cast<std::size_t>(s) * na + a) * ns;
            for (std::int64_t k = 0; k < n_per_pair; ++k) ++row[model.sample_next_state(s, a, static_cast<std::uint64_t>(k))];
        }
    }
    return empirical_from_counts(ns, na, n_per_pair, std::move(counts));
}

EmpiricalModel empirical_from_counts(int num_states, int num_actions, std::int64_t n_per_pair,
                                     std::vector<std::int64_t> counts) {
    if (n_per_pair <= 0) throw Error("samples per state-action pair must be positive");
    const std::size_t expected = static_cast<std::size_t>(num_states) * num_actions * num_states;
    if (counts.size() != expected) throw Error("count table has the wrong size");

    EmpiricalModel m;
    m.num_states = num_states;
    m.num_actions = num_actions;
    m.n_per_pair = n_per_pair;
    m.counts = std::move(counts);
    m.kernel_hat.resize(static_cast<Eigen::Index>(num_states) * num_actions, num_states);
    const double n = static_cast<double>(n_per_pair);
    for (Eigen::Index r = 0; r < m.kernel_hat.rows(); ++r) {
        std::int64_t total = 0;
        for (int j = 0; j < num_states; ++j) {
            const auto c = m.counts[static_cast<std::size_t>(r) * num_states + j];
            if (c < 0) throw Error("negative transition count");
            total += c;
            m.kernel_hat(r, j) = static_cast<double>(c) / n;
        }
        if (total != n_per_pair) throw Error("counts of pair " + std::to_string(r) + " do not sum to N");
    }
    return m;
}

PerturbedReward perturb_rewards(const Table& reward, double omega, std::uint64_t seed) {
    if (!(omega >= 0.0 && omega <= 1.0)) throw Error("perturbation magnitude omega must lie in [0, 1]");
    PerturbedReward out;
    out.omega = omega;
    out.seed = seed;
    out.xi.resize(reward.rows(), reward.cols());
    for (Eigen::Index s = 0; s < reward.rows(); ++s)
        for (Eigen::Index a = 0; a < reward.cols(); ++a)
            out.xi(s, a) = omega * rng::to_unit(rng::hash(seed, rng::kPerturbationDomain, static_cast<std::uint64_t>(s),
                                                          static_cast<std::uint64_t>(a), 0));
    out.r_p = reward + out.xi;
    return out;
}

namespace {

double log_effective_horizon(double gamma) { return std::log(std::numbers::e / (1.0 - gamma)); }

void check_common(double delta, double gamma, int num_states) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error("delta must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("gamma must lie in [0, 1)");
    if (num_states < 1) throw Error("|S| must be positive");
}

}  // namespace

double log_iota(double delta, double omega, int d, double upper, double eps1, int num_states, int num_actions,
                double gamma) {
    check_common(delta, gamma, num_states);
    if (!(omega > 0.0 && omega <= 1.0)) throw Error("omega must lie in (0, 1]");
    if (d < 1) throw Error("d must be positive");
    if (!(eps1 > 0.0 && eps1 <= upper)) throw Error("need 0 < eps1 <= U");
    if (num_actions < 1) throw Error("|A| must be positive");
    return std::log(omega) + std::log(delta) + std::log1p(-gamma) + d * std::log(eps1) - std::log(30.0) -
           d * std::log(upper) - std::log(static_cast<double>(num_states)) -
           2.0 * std::log(static_cast<double>(num_actions));
}

double c_of_delta(double delta, double omega, int d, double upper, double eps1, int num_states, int num_actions,
                  double gamma) {
    const double li = log_iota(delta, omega, d, upper, eps1, num_states, num_actions, gamma);
    const double log_numerator = std::log(16.0 * (1.0 + omega + d * upper)) +
                                 std::log(static_cast<double>(num_states)) +
                                 std::log(static_cast<double>(num_actions)) + std::log(log_effective_horizon(gamma));
    return 72.0 * (log_numerator - 2.0 * std::log1p(-gamma) - li - std::log(delta));
}

double c_prime_of_delta(double delta, int num_states, double gamma) {
    check_common(delta, gamma, num_states);
    return 72.0 * std::log(4.0 * num_states * log_effective_horizon(gamma) / delta);
}

double b_of_delta_n(double delta, int num_states, double gamma, double n_per_pair) {
    if (!(n_per_pair > 0.0)) throw Error("N must be positive");
    const double one_minus = 1.0 - gamma;
    return std::sqrt(c_prime_of_delta(delta, num_states, gamma) / (one_minus * one_minus * one_minus * n_per_pair));
}

ConcentrationBound compute_bounds(const BoundInputs& in) {
    ConcentrationBound out;
    out.inputs = in;
    out.log_iota = log_iota(in.delta, in.omega, in.d, in.upper, in.eps1, in.num_states, in.num_actions, in.gamma);
    out.iota = std::exp(out.log_iota);
    out.c_delta = c_of_delta(in.delta, in.omega, in.d, in.upper, in.eps1, in.num_states, in.num_actions, in.gamma);
    out.c_prime_delta = c_prime_of_delta(in.delta, in.num_states, in.gamma);
    out.b_delta_n = b_of_delta_n(in.delta, in.num_states, in.gamma, in.n_per_pair);
    const double c_split =
        c_of_delta(in.delta / in.d, in.omega, in.d, in.upper, in.eps1, in.num_states, in.num_actions, in.gamma);
    out.n_threshold = 4.0 * c_split / (1.0 - in.gamma);
    return out;
}

}  // namespace cmdp
