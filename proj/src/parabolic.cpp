#include "dop/parabolic.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "dop/errors.hpp"
#include "json.hpp"

namespace dop {

ParabolicProblem::ParabolicProblem(GridPtr grid, double t_start, double t_end, double dt,
                                   EllipticOperator F, GridFunction phi1, GridFunction phi2,
                                   std::function<double(double, double, double)> lateral_g,
                                   GridFunction initial)
    : grid_(std::move(grid))
    , t_start_(t_start)
    , t_end_(t_end)
    , dt_(dt)
    , F_(std::move(F))
    , phi1_(std::move(phi1))
    , phi2_(std::move(phi2))
    , lateral_g_(std::move(lateral_g))
    , initial_(std::move(initial)) {
    if (!(t_end_ > t_start_))
        throw std::invalid_argument("parabolic problem: t_end must exceed t_start");
    if (!(dt_ > 0.0)) throw std::invalid_argument("parabolic problem: dt must be positive");
    if (dt_ > t_end_ - t_start_ + 1e-12)
        throw std::invalid_argument("parabolic problem: dt exceeds the time horizon");
    double eps0 = kInfiniteBound;
    for (int idx : grid_->non_exterior_nodes())
        eps0 = std::min(eps0, phi2_.value(idx) - phi1_.value(idx));
    if (!(eps0 > 0.0))
        throw std::invalid_argument("parabolic problem: separation invariant violated");

    // initial slice: lateral data wins on the boundary ring, then project
    // onto the obstacle box so stored slices satisfy the constraints exactly
    const GridFunction g0 = boundary_at(t_start_);
    for (int idx : grid_->boundary_nodes()) initial_.set(idx, g0.value(idx));
    for (int idx : grid_->non_exterior_nodes()) {
        const double v =
            std::min(std::max(initial_.value(idx), phi1_.value(idx)), phi2_.value(idx));
        initial_.set(idx, v);
    }
}

GridFunction ParabolicProblem::boundary_at(double t) const {
    GridFunction g(grid_);
    for (int idx : grid_->non_exterior_nodes()) g.set_undefined(idx);
    for (int idx : grid_->boundary_nodes()) {
        Grid::Point p = grid_->coord(idx);
        if (grid_->kind() == DomainKind::disc) {
            const double rho = std::sqrt(p[0] * p[0] + p[1] * p[1]);
            if (rho > 0.0) {
                p[0] /= rho;
                p[1] /= rho;
            }
        }
        const double gv = lateral_g_(p[0], p[1], t);
        if (gv < phi1_.value(idx) - 1e-12 || gv > phi2_.value(idx) + 1e-12)
            throw std::invalid_argument(
                "parabolic problem: lateral data incompatible with obstacles at t = " +
                std::to_string(t));
        g.set(idx, gv);
    }
    return g;
}

namespace {

GridFunction step_with_dt(const GridFunction& u_prev, double t_next, double dt,
                          const ParabolicProblem& P, const SolverParams& params,
                          SolveReport* report_out) {
    const DoubleObstacleProblem step_problem(P.grid(), P.op(), P.phi1(), P.phi2(),
                                             P.boundary_at(t_next));
    auto [u, rep] =
        detail::solve_obstacle_system(step_problem, params, 1.0 / dt, &u_prev, &u_prev);
    if (report_out) *report_out = rep;
    return std::move(u);
}

} // namespace

GridFunction step_implicit(const GridFunction& u_prev, double t_next, const ParabolicProblem& P,
                           const SolverParams& params) {
    return step_with_dt(u_prev, t_next, P.dt(), P, params, nullptr);
}

Trajectory solve_parabolic(const ParabolicProblem& P, const SolverParams& params) {
    Trajectory traj;
    traj.times.push_back(P.t_start());
    traj.slices.push_back(P.initial());

    double t = P.t_start();
    while (t < P.t_end() - 1e-12) {
        double dt = P.dt();
        if (t + dt > P.t_end() - 1e-12) dt = P.t_end() - t; // shortened last step
        const double t_next = t + dt;
        SolveReport rep;
        try {
            GridFunction u = step_with_dt(traj.slices.back(), t_next, dt, P, params, &rep);
            traj.times.push_back(t_next);
            traj.slices.push_back(std::move(u));
            traj.step_reports.push_back(rep);
        } catch (const SolveError&) {
            traj.completed = false;
            return traj;
        }
        t = t_next;
    }
    return traj;
}

double steady_state_gap(const Trajectory& traj, const GridFunction& u_ell) {
    if (traj.slices.empty()) throw std::invalid_argument("steady_state_gap: empty trajectory");
    const GridFunction& last = traj.slices.back();
    const Grid& g = *last.grid();
    if (u_ell.grid()->n() != g.n() || u_ell.grid()->dim() != g.dim())
        throw std::invalid_argument("steady_state_gap: grid mismatch");
    double m = 0.0;
    for (int idx : g.non_exterior_nodes())
        m = std::max(m, std::abs(last.value(idx) - u_ell.value(idx)));
    return m;
}

std::vector<std::string> write_trajectory(const Trajectory& traj, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    nlohmann::json index = nlohmann::json::array();
    for (std::size_t k = 0; k < traj.slices.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "slice_%04zu.csv", k);
        write_csv(traj.slices[k], dir + "/" + name);
        index.push_back({{"t", traj.times[k]}, {"file", name}});
        files.emplace_back(name);
    }
    std::ofstream f(dir + "/index.json");
    f << index.dump(2) << '\n';
    files.emplace_back("index.json");
    return files;
}

Trajectory read_trajectory(GridPtr grid, const std::string& dir) {
    std::ifstream f(dir + "/index.json");
    if (!f) throw std::runtime_error("read_trajectory: cannot open " + dir + "/index.json");
    nlohmann::json index;
    f >> index;
    Trajectory traj;
    for (const auto& entry : index) {
        traj.times.push_back(entry.at("t").get<double>());
        traj.slices.push_back(read_csv(grid, dir + "/" + entry.at("file").get<std::string>()));
    }
    if (traj.slices.empty()) throw std::runtime_error("read_trajectory: empty index");
    return traj;
}

} // namespace dop
