#pragma once

#include <functional>
#include <utility>

#include "dop/grid.hpp"
#include "dop/numerics.hpp"
#include "dop/operators.hpp"

namespace dop {

/// Analytic description of a double obstacle problem; lets fixtures and
/// probes instantiate the same problem on grids of different resolution.
struct ProblemData {
    EllipticOperator F = EllipticOperator::laplace();
    std::function<double(double, double)> phi1;
    std::function<double(double, double)> phi2;
    std::function<double(double, double)> g;
};

/// Discrete elliptic double obstacle problem: grid, operator, obstacles and
/// boundary data. Construction enforces uniform separation phi1 < phi2 and
/// boundary compatibility phi1 <= g <= phi2.
class DoubleObstacleProblem {
public:
    DoubleObstacleProblem(GridPtr grid, EllipticOperator F, GridFunction phi1, GridFunction phi2,
                          GridFunction g);

    /// Samples the analytic data on a grid. Disc boundaries evaluate g at the
    /// radial projection of the node onto |x| = 1.
    static DoubleObstacleProblem from_data(GridPtr grid, const ProblemData& data);

    const GridPtr& grid() const { return grid_; }
    const EllipticOperator& op() const { return F_; }
    const GridFunction& phi1() const { return phi1_; }
    const GridFunction& phi2() const { return phi2_; }
    const GridFunction& boundary() const { return g_; }

    /// min over non-exterior nodes of (phi2 - phi1); positive by construction.
    double eps0() const { return eps0_; }

private:
    GridPtr grid_;
    EllipticOperator F_;
    GridFunction phi1_;
    GridFunction phi2_;
    GridFunction g_;
    double eps0_;
};

struct SolveReport {
    int iterations = 0;
    double final_residual = 0.0;
    double contact_fraction_lower = 0.0;
    double contact_fraction_upper = 0.0;
    double wall_time_s = 0.0;
};

/// Pointwise max(min(F_h(D^2 u), phi2-u), phi1-u) at stencil-complete
/// interior nodes (absent elsewhere); a zero field characterises a discrete
/// solution. Throws when u deviates from the boundary data by more than 1e-12.
GridFunction complementarity_residual(const GridFunction& u, const DoubleObstacleProblem& P);

/// Solves the discrete complementarity system. Laplace uses projected SOR,
/// Bellman members Howard policy iteration, Pucci members semismooth Newton
/// on the clipped system seeded by a scaled-Laplacian relaxation solve.
/// The returned field satisfies the box constraints exactly.
std::pair<GridFunction, SolveReport> solve_elliptic(const DoubleObstacleProblem& P,
                                                    const SolverParams& params);

struct MonotonicityReport {
    double max_violation = 0.0;
};

/// Comparison-principle probe: solves P and P' (with ordered data) and
/// reports the largest violation of u' >= u.
MonotonicityReport monotonicity_probe(const DoubleObstacleProblem& P,
                                      const DoubleObstacleProblem& P_above,
                                      const SolverParams& params);

struct CovarianceReport {
    double max_diff = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Solution-level rescaling covariance: solves the problem on a fine grid,
/// builds the rescaled problem u_hat(x) = u(lambda x)/A on the probe grid
/// (obstacles composed and divided accordingly, boundary data read off the
/// fine solution) and compares the probe solve against the rescaled fine
/// solution. lambda_scale must map probe nodes onto fine nodes.
CovarianceReport rescaling_covariance_probe(const ProblemData& data, GridPtr probe_grid,
                                            double lambda_scale, double A_scale,
                                            const SolverParams& params, double tolerance);

namespace detail {

/// Interior-unknown bookkeeping shared by the elliptic, parabolic and
/// penalized solvers.
struct UnknownMap {
    std::vector<int> nodes;        // unknown -> node id
    std::vector<int> slot;         // node id -> unknown index or -1
    explicit UnknownMap(const Grid& g);
    int count() const { return static_cast<int>(nodes.size()); }
};

/// F-orientation stencil of tr(A D^2 .) at a node: calls visit(node, coeff)
/// for every touched grid node.
void linear_stencil(const Grid& g, const SymMatrix& A, int node,
                    const std::function<void(int, double)>& visit);

/// Assembled M-matrix family (-F plus optional time term) with the boundary
/// and u_prev contributions folded into b.
PolicyFamily assemble_family(const DoubleObstacleProblem& P, const SymMatrix& A,
                             const UnknownMap& map, double time_coeff,
                             const GridFunction* u_prev);

std::vector<double> restrict_interior(const GridFunction& f, const UnknownMap& map);
GridFunction embed_solution(const DoubleObstacleProblem& P, const UnknownMap& map,
                            std::span<const double> x);

/// Shared solve path with optional backward-Euler time term
/// (residual F_h(u) - time_coeff*(u - u_prev)).
std::pair<GridFunction, SolveReport> solve_obstacle_system(const DoubleObstacleProblem& P,
                                                           const SolverParams& params,
                                                           double time_coeff,
                                                           const GridFunction* u_prev,
                                                           const GridFunction* warm_start);

} // namespace detail

} // namespace dop
