#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dop/vi_solver.hpp"

namespace dop {

/// Parabolic double obstacle problem on grid x [t_start, t_end] with
/// time-independent obstacles. Boundary data lives on the parabolic boundary:
/// lateral values per time plus the initial slice, which is projected onto
/// [phi1, phi2] so every stored slice satisfies the box constraints exactly.
class ParabolicProblem {
public:
    ParabolicProblem(GridPtr grid, double t_start, double t_end, double dt, EllipticOperator F,
                     GridFunction phi1, GridFunction phi2,
                     std::function<double(double, double, double)> lateral_g,
                     GridFunction initial);

    const GridPtr& grid() const { return grid_; }
    double t_start() const { return t_start_; }
    double t_end() const { return t_end_; }
    double dt() const { return dt_; }
    const EllipticOperator& op() const { return F_; }
    const GridFunction& phi1() const { return phi1_; }
    const GridFunction& phi2() const { return phi2_; }
    const GridFunction& initial() const { return initial_; }

    /// Boundary field at time t (disc boundaries evaluate at the radial
    /// projection); throws if incompatible with the obstacles.
    GridFunction boundary_at(double t) const;

private:
    GridPtr grid_;
    double t_start_;
    double t_end_;
    double dt_;
    EllipticOperator F_;
    GridFunction phi1_;
    GridFunction phi2_;
    std::function<double(double, double, double)> lateral_g_;
    GridFunction initial_;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<GridFunction> slices;
    std::vector<SolveReport> step_reports;
    bool completed = true;
};

/// One backward-Euler step: solves the elliptic double obstacle system with
/// residual F_h(D^2 u) - (u - u_prev)/dt and lateral data g(., t_next).
GridFunction step_implicit(const GridFunction& u_prev, double t_next, const ParabolicProblem& P,
                           const SolverParams& params);

/// Marches from t_start to t_end with uniform dt (last step shortened to land
/// on t_end); trajectory slice count is ceil((t_end-t_start)/dt) + 1. A step
/// failure aborts and returns the partial trajectory flagged incomplete.
Trajectory solve_parabolic(const ParabolicProblem& P, const SolverParams& params);

/// sup |final slice - u_ell|.
double steady_state_gap(const Trajectory& traj, const GridFunction& u_ell);

/// Writes per-slice CSVs plus an index JSON [{t, file}, ...] into dir;
/// returns the written file names (relative to dir).
std::vector<std::string> write_trajectory(const Trajectory& traj, const std::string& dir);

/// Reads a trajectory back from a slices directory written by
/// write_trajectory. Step reports are not persisted and come back empty.
Trajectory read_trajectory(GridPtr grid, const std::string& dir);

} // namespace dop
