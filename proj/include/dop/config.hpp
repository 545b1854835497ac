#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dop/expr.hpp"
#include "dop/numerics.hpp"
#include "dop/parabolic.hpp"
#include "dop/penalty.hpp"
#include "dop/vi_solver.hpp"

namespace dop {

struct ParabolicSpec {
    double t_start = -1.0;
    double t_end = 1.0;
    double dt = 0.01;
};

struct ProblemSpec {
    int dim = 1;
    int n = 101;
    DomainKind domain_kind = DomainKind::box;
    EllipticOperator op = EllipticOperator::laplace();
    ExprPtr phi1;
    ExprPtr phi2;
    ExprPtr g;
    ExprPtr u0; // initial data; required in parabolic mode
    std::optional<ParabolicSpec> parabolic;
};

struct PenaltySpec {
    double C = 0.0; // 0 selects default_C(P)
    std::vector<double> eps_list;
};

struct WeakLepsSpec {
    ExprPtr w;
    double x0[2] = {0.0, 0.0};
    double r = 1.0;
    double eps = 1.0;
    double C = 0.0; // 0 selects the discrete mean-value normalization |B_{r/2}|/r^d
    std::vector<double> N_list;
};

struct VerifySpec {
    std::string probe_points = "auto";
    std::vector<std::array<double, 2>> explicit_probes;
    double radii_max = 0.2;
    std::vector<double> alpha_list = {0.99};
    double delta = 0.1;
    std::size_t pair_budget = 200000;
    double beta_min = 1.8;
    double r2_min = 0.99;
    double refine_factor_max = 1.25;
    bool refinement_check = false;
    ExprPtr field; // direct-ingest mode (negative controls)
    std::optional<WeakLepsSpec> weak_leps;
    std::optional<double> parabolic_t0;
    double parabolic_beta_min = 0.9;
};

/// One self-describing JSON document per run. Expression-valued fields use
/// the expr grammar; validation rejects variables inconsistent with the
/// dimension and mode (t only in parabolic lateral data).
struct RunConfig {
    ProblemSpec problem;
    SolverParams solver;
    std::optional<PenaltySpec> penalty;
    VerifySpec verify;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    std::string config_hash; // FNV-1a of the file bytes

    static RunConfig load(const std::string& path);
    static RunConfig from_text(const std::string& text);
};

/// Instantiates the elliptic problem of a config on a grid of resolution n
/// (defaults to the configured n).
DoubleObstacleProblem build_elliptic_problem(const RunConfig& cfg, int n_override = 0);

/// Instantiates the parabolic problem (requires the parabolic block).
ParabolicProblem build_parabolic_problem(const RunConfig& cfg);

} // namespace dop
