#pragma once

#include "cmdp/mdp_core.hpp"

#include <cstdint>
#include <vector>

namespace cmdp {

/// Counter-based randomness: every draw is a pure function of its key, so the
/// order in which (s, a) pairs are processed cannot change any output.
namespace rng {

std::uint64_t mix(std::uint64_t x);
std::uint64_t hash(std::uint64_t seed, std::uint64_t domain, std::uint64_t i, std::uint64_t j, std::uint64_t counter);
/// Uniform on [0, 1) with 53 random bits.
double to_unit(std::uint64_t bits);

inline constexpr std::uint64_t kTransitionDomain = 0x7472616e73ULL;
inline constexpr std::uint64_t kPerturbationDomain = 0x7065727462ULL;

}  // namespace rng

/// Generative model over the true kernel of a spec. Immutable; safe to share.
class GenerativeModel {
public:
    GenerativeModel(const CmdpSpec& spec, std::uint64_t master_seed);

    /// Draw number `draw_index` of the stream keyed by (master_seed, s, a).
    int sample_next_state(int s, int a, std::uint64_t draw_index) const;

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    std::uint64_t master_seed() const { return seed_; }

private:
    int num_states_;
    int num_actions_;
    std::uint64_t seed_;
    Eigen::MatrixXd cdf_;
    std::vector<int> last_support_;
};

/// N(s' | s, a) counts and the estimated kernel P_hat = N(s' | s, a) / N.
struct EmpiricalModel {
    int num_states = 0;
    int num_actions = 0;
    std::int64_t n_per_pair = 0;
    std::vector<std::int64_t> counts;  // index (s * |A| + a) * |S| + s'
    Kernel kernel_hat;

    std::int64_t count(int s, int a, int next) const {
        return counts[(static_cast<std::size_t>(s) * num_actions + a) * num_states + next];
    }
};

EmpiricalModel estimate_kernel(const GenerativeModel& model, std::int64_t n_per_pair);

/// Builds the empirical model from explicit counts (each pair must total N).
EmpiricalModel empirical_from_counts(int num_states, int num_actions, std::int64_t n_per_pair,
                                     std::vector<std::int64_t> counts);

struct PerturbedReward {
    Table r_p;
    Table xi;
    double omega = 0.0;
    std::uint64_t seed = 0;
};

/// r_p = r + xi with xi(s, a) i.i.d. uniform on [0, omega).
PerturbedReward perturb_rewards(const Table& reward, double omega, std::uint64_t seed);

struct BoundInputs {
    double delta = 0.0;
    double omega = 0.0;
    int d = 0;
    double upper = 0.0;
    double eps1 = 0.0;
    int num_states = 0;
    int num_actions = 0;
    double gamma = 0.0;
    double n_per_pair = 0.0;
};

struct ConcentrationBound {
    double c_delta = 0.0;        // C(delta)
    double iota = 0.0;           // may underflow to 0 for large d; see log_iota
    double log_iota = 0.0;
    double c_prime_delta = 0.0;  // C'(delta)
    double b_delta_n = 0.0;      // B(delta, N)
    /// 4 C(delta / d) / (1 - gamma): per-pair budget required by the data-dependent concentration bound.
    double n_threshold = 0.0;
    BoundInputs inputs;
};

double log_iota(double delta, double omega, int d, double upper, double eps1, int num_states, int num_actions,
                double gamma);
double c_of_delta(double delta, double omega, int d, double upper, double eps1, int num_states, int num_actions,
                  double gamma);
double c_prime_of_delta(double delta, int num_states, double gamma);
double b_of_delta_n(double delta, int num_states, double gamma, double n_per_pair);

ConcentrationBound compute_bounds(const BoundInputs& in);

}  // namespace cmdp
