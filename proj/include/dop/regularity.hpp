#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dop/parabolic.hpp"
#include "dop/vi_solver.hpp"

namespace dop {

/// Classified interior nodes of a solved problem: lower/upper contact sets,
/// the non-contact set, and the free-boundary indicator rings.
struct ContactSets {
    std::vector<int> E1;
    std::vector<int> E2;
    std::vector<int> A;
    std::vector<int> Gamma1; // nodes of A with an axis neighbour in E1
    std::vector<int> Gamma2;
    double tau = 0.0;
};

/// Classification tolerance tied to solver accuracy and scheme order.
double default_contact_tau(const Grid& g, const SolverParams& params);

/// E1 = {u - phi1 <= tau}, E2 = {phi2 - u <= tau}, A the rest of the
/// interior. Requires tau < eps0/2 so the sets cannot overlap by
/// construction.
ContactSets contact_sets(const GridFunction& u, const DoubleObstacleProblem& P, double tau);

/// Min pairwise node distance between E1 and E2; +infinity when either set
/// is empty.
double separation_distance(const ContactSets& cs, const Grid& g);

/// Axis-connected components of a node set, each sorted ascending;
/// deterministic order.
std::vector<std::vector<int>> grid_components(const std::vector<int>& nodes, const Grid& g);

/// Per component, the node maximizing distance to the component's boundary
/// ring (the adjacent outside nodes) - the deepest interior contact points.
std::vector<int> deepest_probes(const std::vector<int>& contact_set, const Grid& g);

/// Per component, the contact nodes adjacent to the free boundary - the
/// detachment points where growth away from the obstacle is measurable.
std::vector<int> edge_probes(const std::vector<int>& contact_set, const Grid& g);

/// Dyadic radii {4h, 8h, 16h, ...} capped at r_max.
std::vector<double> dyadic_radii(double h, double r_max);

struct GrowthRow {
    double r = 0.0;
    double sup = 0.0;
};

/// Growth table sup_{B_r(x0)} (u - phi) with a log-log power fit
/// sup ~ C * r^beta over the rows above the noise floor. Profiles with fewer
/// than 4 usable rows report fit_defined = false (zero growth inside a
/// contact component is a valid outcome, not a fit failure).
struct GrowthProfile {
    int anchor_node = -1;
    double anchor_t = 0.0;
    std::vector<GrowthRow> rows;
    bool fit_defined = false;
    double C = 0.0;
    double beta = 0.0;
    double r2 = 0.0;
};

/// Elliptic growth profile at a contact node x0 (mirror the arguments,
/// growth_profile(phi2, u, ...), for upper-contact probes). Radii must be
/// >= 4h and stay inside the domain.
GrowthProfile growth_profile(const GridFunction& u, const GridFunction& phi, int x0,
                             const std::vector<double>& radii, double tau);

/// Space-time growth |u - u(X0)| over parabolic cylinders
/// Q_r(X0) = B_r(x0) x [t0 - r^2, t0 + r^2] (times snapped to slices).
/// Requires max(radii)^2 of margin to both trajectory ends and r^2 >= 2 dt.
GrowthProfile parabolic_growth_profile(const Trajectory& traj, int x0, double t0,
                                       const std::vector<double>& radii, double tau);

/// max |f(x)-f(y)| / |x-y|^alpha over node pairs inside the delta-interior
/// with |x-y| >= 2h. Full enumeration in 1D, deterministic seeded
/// subsampling in 2D beyond pair_budget.
double holder_seminorm(const GridFunction& f, double alpha, double delta,
                       std::size_t pair_budget, std::uint64_t seed = 2024);

/// Centered difference quotients per axis direction, then holder_seminorm of
/// each; returns the max over directions.
double gradient_holder_seminorm(const GridFunction& u, double alpha, double delta,
                                std::size_t pair_budget, std::uint64_t seed = 2024);

struct WeakLepsRow {
    double N = 0.0;
    double measured = 0.0; // |{w > N} /\ B_{r/2}| as node count * h^d
    double bound = 0.0;    // C * w(x0) * r^d / N^eps
    bool pass = false;
};

/// Superlevel-set measure check for nonnegative discrete supersolutions of F
/// on B_r(x0). Throws when w is negative or violates the supersolution
/// inequality (beyond super_tol) inside the probe region.
std::vector<WeakLepsRow> weak_Leps_check(const GridFunction& w, const EllipticOperator& F,
                                         int x0, double r, const std::vector<double>& N_list,
                                         double eps, double C, double super_tol = 1e-8);

/// Parabolic variant over K = B_R(x0) x (t_lo, t0) with anchor value taken at
/// (x0, t_anchor); measured volume vs (C w(X0)/N)^eps. Heuristic: region
/// parameters are caller configuration, not pinned by theory.
std::vector<WeakLepsRow> weak_Leps_check_parabolic(const Trajectory& traj, int x0,
                                                   double t_anchor, double R, double t_lo,
                                                   double t0, const std::vector<double>& N_list,
                                                   double eps, double C);

} // namespace dop
