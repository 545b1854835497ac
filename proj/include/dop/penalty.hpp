#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dop/vi_solver.hpp"

namespace dop {

/// Smooth penalty family beta_eps(s) = -C * exp(-s / eps), clamped to
/// [-N_max, N_max]. Satisfies, pre-clamp: beta(0) = -C, beta' > 0,
/// -C <= beta(s) <= C for s > 0, beta -> 0 (s > 0) and -> -inf (s < 0) as
/// eps -> 0. The clamp mirrors the truncation device used to keep the
/// penalized right-hand side bounded.
class PenaltyFamily {
public:
    PenaltyFamily(double C, double epsilon, double clamp = 1e12);

    double C() const { return C_; }
    double epsilon() const { return epsilon_; }
    double clamp() const { return clamp_; }

    double beta(double s) const;

    /// Derivative (C/eps) * exp(-s/eps); zero where the clamp is active.
    double beta_prime(double s) const;

private:
    double C_;
    double epsilon_;
    double clamp_;
    double cap_exponent_; // log(clamp / C)
};

/// Penalty constant dominating the operator on both obstacles:
/// max over stencil-complete interior nodes of |F_h(phi1)| + |F_h(phi2)|, + 1.
double default_C(const DoubleObstacleProblem& P);

struct PenalizedReport {
    int newton_iterations = 0;
    double final_residual = 0.0;
    bool converged = false;
    double sup_penalty_term = 0.0;   // sup |beta(u-phi1) - beta(phi2-u)|
    double max_violation_lower = 0.0; // max(phi1 - u, 0)
    double max_violation_upper = 0.0; // max(u - phi2, 0)
};

/// Solves F_h(D^2 u) = beta(u - phi1) - beta(phi2 - u) with u = g on the
/// boundary by damped semismooth Newton. The box constraints are NOT
/// enforced; penalization is soft. Throws SolveError on Newton divergence.
std::pair<GridFunction, PenalizedReport> solve_penalized(const DoubleObstacleProblem& P,
                                                         const PenaltyFamily& family,
                                                         const GridFunction& u0,
                                                         const SolverParams& params);

struct SweepRow {
    double epsilon = 0.0;
    double dist_to_vi = 0.0;
    double sup_penalty_term = 0.0;
    int newton_iters = 0;
    bool converged = false;
    double max_violation_lower = 0.0; // max(phi1 - u_eps, 0) over the grid
    double max_violation_upper = 0.0; // max(u_eps - phi2, 0)
};

struct SweepResult {
    std::vector<SweepRow> rows; // sorted by decreasing epsilon
    double penalty_C = 0.0;     // C used in the family
    double bound_C = 0.0;       // reported constant: 2*C + sup(|F_h phi1| + |F_h phi2|)
    double max_sup_penalty = 0.0;
    bool bound_held = false;
    bool all_converged = false;
    GridFunction u_vi;          // reference complementarity solution
};

/// Warm-started continuation over a strictly decreasing epsilon list: the
/// reference VI solution seeds the first leg and each leg seeds the next.
/// bound_held records the uniform penalty bound: the sweep maximum of
/// sup|G| stays below bound_C and the smallest-epsilon value saturates
/// (<= 1.1x the previous leg + 1e-6). A diverging leg marks the sweep failed
/// from that epsilon on; earlier rows are retained.
SweepResult penalty_sweep(const DoubleObstacleProblem& P, const std::vector<double>& eps_list,
                          const SolverParams& params, double C_override = 0.0);

/// CSV with header epsilon,dist_to_vi,sup_penalty_term,newton_iters,converged.
void write_sweep_csv(const SweepResult& sweep, const std::string& path);

} // namespace dop
