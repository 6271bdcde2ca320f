#pragma once

#include "cmdp/mdp_core.hpp"
#include "cmdp/sampling.hpp"
#include "cmdp/unconstrained_solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cmdp {

/// The grid {0, eps1, 2 eps1, ..., U}. U joins the grid as its top element
/// when it is not itself a multiple of eps1.
class DualNet {
public:
    DualNet() = default;
    DualNet(double eps1, double upper);

    double eps1() const { return eps1_; }
    double upper() const { return upper_; }
    std::int64_t top_index() const { return top_; }
    double value(std::int64_t index) const;
    /// Index of the element nearest to x (x assumed in [0, U]); ties go to the smaller element.
    std::int64_t nearest(double x) const;

private:
    double eps1_ = 1.0;
    double upper_ = 1.0;
    std::int64_t multiples_ = 1;  // largest k with k * eps1 <= U
    std::int64_t top_ = 1;
};

double round_to_net(double x, double eps1, double upper);

/// Lagrange multipliers held as net indices; reals are derived on demand.
struct DualState {
    DualNet net;
    double eta = 0.0;
    std::vector<std::int64_t> index;

    static DualState zero(int d, double eta, double eps1, double upper);
    std::vector<double> lambda() const;
    double upper() const { return net.upper(); }
    double eps1() const { return net.eps1(); }
};

/// lambda <- R_net[ clamp_[0,U]( lambda - eta (v_hat_c - b_prime) ) ], per component.
DualState dual_update(const DualState& state, const std::vector<double>& v_hat_c, const std::vector<double>& b_prime);

enum class Setting { Raw, Relaxed, Strict };
std::string to_string(Setting setting);
Setting setting_from_string(const std::string& name);

struct ScheduleParams {
    double t_exact = 0.0;        // formula value before rounding
    std::uint64_t t = 0;         // ceil(t_exact), saturated
    double eta = 0.0;
    double eps1 = 0.0;
};

/// T = 4 U^2 d^2 / (eps_opt^2 (1-gamma)^2) [1 + 1/(U - ||lambda*||)^2],
/// eta = U (1-gamma) / sqrt(T), eps1 = eps_opt^2 (1-gamma)^2 (U - ||lambda*||) / (6 d U).
ScheduleParams instantiate_schedule(double upper, double lambda_star_norm, double eps_opt, double gamma, int d);

struct PdConfig {
    Setting setting = Setting::Raw;
    std::uint64_t t = 1;            // iteration count prescribed by the formulas
    std::uint64_t t_run = 1;        // iterations actually executed (after any cap)
    bool truncated = false;
    double eps_opt = 0.0;
    double eta = 0.0;               // step size for t
    double eta_run = 0.0;           // step size for t_run
    double eps1 = 0.0;
    double upper = 0.0;
    double lambda_star_norm = 0.0;  // value used in the formulas
    std::vector<double> b_prime;
    double omega = 0.0;
    double delta_shift = 0.0;       // strict only
    double epsilon = 0.0;
    double delta = 0.0;
    double zeta = 0.0;              // strict only
    double gamma = 0.0;
    int d = 0;
};

PdConfig instantiate_raw(double upper, double lambda_star_norm, double eps_opt, double gamma,
                         const std::vector<double>& b, double omega = 0.0);
/// b' = b - 3 eps / 8, omega = eps (1-gamma) / 8, eps_opt = eps / 4, U = 16 / (eps (1-gamma)).
PdConfig instantiate_relaxed(double epsilon, double delta, double gamma, const std::vector<double>& b);
/// b' = b + eps (1-gamma) zeta / 20, omega = eps (1-gamma) / 10, U = 4 (1 + omega) / (zeta (1-gamma)),
/// Delta = eps (1-gamma) zeta / (40 d), eps_opt = Delta / 5.
PdConfig instantiate_strict(double epsilon, double delta, double gamma, const std::vector<double>& b, double zeta);

/// Limits the run to t_cap iterations (0 = no cap). A truncated run uses the
/// step size U (1-gamma) / sqrt(t_run) matching the iterations it executes.
void apply_iteration_cap(PdConfig& config, std::uint64_t t_cap);

/// Primal step: greedy policy for f = r_p + lambda^T c on the empirical CMDP.
SolveResult primal_update(const CmdpSpec& empirical, const std::vector<double>& lambda, double vi_tol = 1e-9,
                          const Eigen::VectorXd* warm_start = nullptr);

/// Empirical CMDP <S, A, P_hat, r_p, {c_i}, {b'_i}, rho, gamma>.
CmdpSpec make_empirical_cmdp(const CmdpSpec& spec, const EmpiricalModel& model, const PerturbedReward& reward,
                             const std::vector<double>& b_prime);

struct PdTrace {
    int d = 0;
    std::uint64_t length = 0;
    std::vector<double> lambdas;   // length x d, lambda_t used by iterate t
    std::vector<double> v_rp;      // V_hat_{r_p}^{pi_t}(rho)
    std::vector<double> v_c;       // length x d
    std::vector<double> iota;      // iota gap of each primal solve
    MixturePolicy mixture;
    double v_bar_rp = 0.0;
    std::vector<double> v_bar_c;
    /// min_t [V_hat_rp(pi_t) + lambda_t^T (V_hat_c(pi_t) - b')]; each term is the dual function at lambda_t.
    double best_lagrangian = 0.0;
    std::vector<double> final_lambda;
    std::size_t distinct_policies = 0;
};

struct PdOptions {
    double vi_tol = 1e-9;
    bool record_trace = true;
};

PdTrace run_primal_dual(const CmdpSpec& empirical, const PdConfig& config, const PdOptions& options = {});

}  // namespace cmdp
