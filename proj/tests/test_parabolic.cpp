#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "dop/errors.hpp"
#include "dop/parabolic.hpp"
#include "fixtures.hpp"

using namespace dop;

namespace {

ParabolicProblem make_parabolic(const ProblemData& data, GridPtr g, double t0, double t1,
                                double dt, double u0_level = 0.0) {
    return ParabolicProblem(
        g, t0, t1, dt, data.F, GridFunction::sample(g, data.phi1),
        GridFunction::sample(g, data.phi2),
        [data](double x, double y, double) { return data.g(x, y); },
        GridFunction::constant(g, u0_level));
}

} // namespace

TEST_CASE("construction validates the invariants and projects the initial slice") {
    GridPtr g = Grid::make(1, 101, DomainKind::box);

    CHECK_THROWS_AS(make_parabolic(fixtures::pa_data(), g, 0.0, 1.0, 2.0),
                    std::invalid_argument); // dt exceeds horizon
    CHECK_THROWS_AS(make_parabolic(fixtures::pa_data(), g, 1.0, 0.0, 0.1),
                    std::invalid_argument); // reversed interval

    ProblemData crossing = fixtures::pa_data();
    crossing.phi2 = [](double, double) { return 0.4; }; // crosses phi1 = 0.5 - x^2
    CHECK_THROWS_AS(make_parabolic(crossing, g, 0.0, 1.0, 0.1), std::invalid_argument);

    ProblemData bad_lateral = fixtures::pa_data();
    bad_lateral.g = [](double, double) { return -20.0; }; // below phi1 on the boundary
    CHECK_THROWS_AS(make_parabolic(bad_lateral, g, 0.0, 1.0, 0.1), std::invalid_argument);

    // u0 = 0 violates the lower obstacle near the origin; construction
    // projects the slice onto [phi1, phi2]
    const ParabolicProblem P = make_parabolic(fixtures::pa_data(), g, -1.0, 1.0, 0.01);
    for (int idx : g->non_exterior_nodes()) {
        CHECK(P.initial().value(idx) >= P.phi1().value(idx));
        CHECK(P.initial().value(idx) <= P.phi2().value(idx));
        const double expect = std::max(fixtures::pa_phi1(g->coord(idx)[0]), 0.0);
        if (g->is_interior(idx))
            CHECK(P.initial().value(idx) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("step_implicit: stationary trivial solution stays put") {
    GridPtr g = Grid::make(1, 101, DomainKind::box);
    const ParabolicProblem P = make_parabolic(fixtures::pb_data(), g, 0.0, 1.0, 0.01);
    const GridFunction next =
        step_implicit(GridFunction::constant(g, 0.0), 0.01, P, fixtures::fast_params_1d(101));
    CHECK(sup_norm(next) <= 1e-9);
}

TEST_CASE("step_implicit: the elliptic solution is a fixed point") {
    const int n = 201;
    GridPtr g = Grid::make(1, n, DomainKind::box);
    const SolverParams params = fixtures::fast_params_1d(n);
    const DoubleObstacleProblem PE = DoubleObstacleProblem::from_data(g, fixtures::pa_data());
    const GridFunction u_ell = solve_elliptic(PE, params).first;

    const ParabolicProblem P = make_parabolic(fixtures::pa_data(), g, 0.0, 1.0, 0.01);
    const GridFunction next = step_implicit(u_ell, 0.01, P, params);
    double diff = 0.0;
    for (int idx : g->non_exterior_nodes())
        diff = std::max(diff, std::abs(next.value(idx) - u_ell.value(idx)));
    CHECK(diff <= 1e-6);
}

TEST_CASE("step_implicit: single step from the projected zero start") {
    const int n = 201;
    GridPtr g = Grid::make(1, n, DomainKind::box);
    const ParabolicProblem P = make_parabolic(fixtures::pa_data(), g, 0.0, 1.0, 0.01);
    const GridFunction next =
        step_implicit(P.initial(), 0.01, P, fixtures::fast_params_1d(n));
    for (int idx : g->non_exterior_nodes())
        CHECK(next.value(idx) >= P.phi1().value(idx)); // exactly, by projection
    CHECK(sup_norm(next) <= 0.5 + 1e-9); // bounded by the obstacle height
}

TEST_CASE("solve_parabolic: trivial data gives identically zero slices") {
    GridPtr g = Grid::make(1, 101, DomainKind::box);
    const ParabolicProblem P = make_parabolic(fixtures::pb_data(), g, -1.0, 0.0, 0.05);
    const Trajectory traj = solve_parabolic(P, fixtures::fast_params_1d(101));
    CHECK(traj.completed);
    for (const GridFunction& slice : traj.slices) CHECK(sup_norm(slice) <= 1e-9);
}

TEST_CASE("slice count follows ceil(horizon/dt) + 1 with a shortened last step") {
    GridPtr g = Grid::make(1, 41, DomainKind::box);
    const ParabolicProblem P = make_parabolic(fixtures::pb_data(), g, 0.0, 0.25, 0.1);
    const Trajectory traj = solve_parabolic(P, fixtures::fast_params_1d(41));
    CHECK(traj.slices.size() == 4); // ceil(0.25/0.1) + 1
    CHECK(traj.times.back() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(traj.times[1] == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("march to steady state on the tangency fixture") {
    const int n = 201;
    GridPtr g = Grid::make(1, n, DomainKind::box);
    const SolverParams params = fixtures::fast_params_1d(n);
    const ParabolicProblem P = make_parabolic(fixtures::pa_data(), g, -1.0, 1.0, 0.005);
    const Trajectory traj = solve_parabolic(P, params);
    REQUIRE(traj.completed);
    CHECK(traj.slices.size() == 401);

    // box constraints hold on every slice
    for (const GridFunction& slice : traj.slices) {
        for (int idx : g->interior_nodes()) {
            CHECK(slice.value(idx) >= P.phi1().value(idx));
            CHECK(slice.value(idx) <= P.phi2().value(idx));
        }
    }

    // monotone relaxation upward from a subsolution start
    for (std::size_t k = 1; k < traj.slices.size(); ++k) {
        double drop = 0.0;
        for (int idx : g->interior_nodes())
            drop = std::min(drop, traj.slices[k].value(idx) - traj.slices[k - 1].value(idx));
        CHECK(drop >= -1e-8);
    }

    const DoubleObstacleProblem PE = DoubleObstacleProblem::from_data(g, fixtures::pa_data());
    const GridFunction u_ell = solve_elliptic(PE, params).first;
    CHECK(steady_state_gap(traj, u_ell) <= 1e-3);

    // a single-step truncation is still far from the steady state
    Trajectory one_step;
    one_step.times = {traj.times[0], traj.times[1]};
    one_step.slices = {traj.slices[0], traj.slices[1]};
    CHECK(steady_state_gap(one_step, u_ell) >= 0.1);

    // three-case system with the backward-Euler operator on a late slice
    const std::size_t k = traj.slices.size() - 1;
    const GridFunction field = apply_operator_field(P.op(), traj.slices[k]);
    const double dt = traj.times[k] - traj.times[k - 1];
    const double tol = 10.0 * params.tol_nonlinear;
    for (int idx : g->interior_nodes()) {
        const double f =
            field.value(idx) -
            (traj.slices[k].value(idx) - traj.slices[k - 1].value(idx)) / dt;
        if (traj.slices[k].value(idx) <= P.phi1().value(idx)) CHECK(f <= tol);
        else if (traj.slices[k].value(idx) >= P.phi2().value(idx)) CHECK(f >= -tol);
        else CHECK(std::abs(f) <= tol);
    }
}

TEST_CASE("discrete comparison principle in time") {
    const int n = 101;
    GridPtr g = Grid::make(1, n, DomainKind::box);
    const SolverParams params = fixtures::fast_params_1d(n);
    const ParabolicProblem Pa = make_parabolic(fixtures::pa_data(), g, 0.0, 0.2, 0.01, 0.0);
    const ParabolicProblem Pb = make_parabolic(fixtures::pa_data(), g, 0.0, 0.2, 0.01, 0.3);
    const Trajectory ta = solve_parabolic(Pa, params);
    const Trajectory tb = solve_parabolic(Pb, params);
    REQUIRE(ta.slices.size() == tb.slices.size());
    for (std::size_t k = 0; k < ta.slices.size(); ++k) {
        double violation = 0.0;
        for (int idx : g->non_exterior_nodes())
            violation =
                std::max(violation, ta.slices[k].value(idx) - tb.slices[k].value(idx));
        CHECK(violation <= 1e-8);
    }
}

TEST_CASE("halving dt moves the early-time solution by O(dt)") {
    const int n = 101;
    GridPtr g = Grid::make(1, n, DomainKind::box);
    const SolverParams params = fixtures::fast_params_1d(n);
    const ParabolicProblem P1 = make_parabolic(fixtures::pa_data(), g, 0.0, 0.1, 0.01);
    const ParabolicProblem P2 = make_parabolic(fixtures::pa_data(), g, 0.0, 0.1, 0.005);
    const Trajectory t1 = solve_parabolic(P1, params);
    const Trajectory t2 = solve_parabolic(P2, params);
    double diff = 0.0;
    for (int idx : g->non_exterior_nodes())
        diff = std::max(diff,
                        std::abs(t1.slices.back().value(idx) - t2.slices.back().value(idx)));
    // first order in time: the measured gap sits well inside C*dt with C = 1
    CHECK(diff <= 1.0 * 0.01);
}

TEST_CASE("steady_state_gap guards and trivial case") {
    GridPtr g = Grid::make(1, 41, DomainKind::box);
    const ParabolicProblem P = make_parabolic(fixtures::pb_data(), g, 0.0, 0.2, 0.05);
    const Trajectory traj = solve_parabolic(P, fixtures::fast_params_1d(41));
    CHECK(steady_state_gap(traj, GridFunction::constant(g, 0.0)) <= 1e-9);

    GridPtr other = Grid::make(1, 21, DomainKind::box);
    CHECK_THROWS_AS(steady_state_gap(traj, GridFunction::constant(other, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("trajectory serialization round trip") {
    namespace fs = std::filesystem;
    GridPtr g = Grid::make(1, 41, DomainKind::box);
    const ParabolicProblem P = make_parabolic(fixtures::pa_data(), g, 0.0, 0.1, 0.05);
    const Trajectory traj = solve_parabolic(P, fixtures::fast_params_1d(41));
    const std::string dir = "traj_tmp";
    const auto files = write_trajectory(traj, dir);
    CHECK(files.size() == traj.slices.size() + 1); // slices + index.json
    for (const std::string& f : files) CHECK(fs::exists(dir + "/" + f));
    const GridFunction back = read_csv(g, dir + "/slice_0000.csv");
    for (int idx : g->non_exterior_nodes())
        CHECK(back.value(idx) == traj.slices[0].value(idx)); // bit exact
    fs::remove_all(dir);
}
