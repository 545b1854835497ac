#include "dop/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dop/config.hpp"
#include "dop/errors.hpp"
#include "dop/regularity.hpp"
#include "json.hpp"

namespace dop {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

std::string iso_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

struct CheckRow {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Tracks emitted files and check outcomes; the manifest is written last and
/// lists every file in the run directory including itself.
class RunRecorder {
public:
    RunRecorder(std::string dir, std::string config_hash)
        : dir_(std::move(dir)), config_hash_(std::move(config_hash)), started_(iso_now()) {
        fs::create_directories(dir_);
    }

    const std::string& dir() const { return dir_; }

    std::string path(const std::string& rel) {
        files_.push_back(rel);
        return dir_ + "/" + rel;
    }

    void note_file(const std::string& rel) { files_.push_back(rel); }

    void check(const std::string& name, bool pass, const std::string& detail) {
        checks_.push_back({name, pass, detail});
    }

    bool all_checks_pass() const {
        for (const CheckRow& c : checks_)
            if (!c.pass) return false;
        return true;
    }

    int finish(int exit_code) {
        json m;
        m["config_hash"] = config_hash_;
        m["tool_version"] = kToolVersion;
        m["started_at"] = started_;
        m["finished_at"] = iso_now();
        m["exit_code"] = exit_code;
        json checks = json::array();
        for (const CheckRow& c : checks_)
            checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        m["checks"] = checks;
        files_.push_back("manifest.json");
        m["files"] = files_;
        std::ofstream f(dir_ + "/manifest.json");
        f << m.dump(2) << '\n';
        return exit_code;
    }

private:
    std::string dir_;
    std::string config_hash_;
    std::string started_;
    std::vector<std::string> files_;
    std::vector<CheckRow> checks_;
};

RunConfig load_config(const CliInvocation& inv) {
    if (inv.config_path.empty()) throw ConfigError("config error: --config PATH is required");
    RunConfig cfg = RunConfig::load(inv.config_path);
    if (!inv.out_dir.empty()) cfg.output_dir = inv.out_dir;
    if (inv.seed) cfg.seed = *inv.seed;
    return cfg;
}

json report_json(const SolveReport& rep) {
    return {{"iterations", rep.iterations},
            {"final_residual", rep.final_residual},
            {"contact_fraction_lower", rep.contact_fraction_lower},
            {"contact_fraction_upper", rep.contact_fraction_upper},
            {"wall_time_s", rep.wall_time_s}};
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream f(path);
    f << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int cmd_solve_impl(const RunConfig& cfg) {
    RunRecorder rec(cfg.output_dir, cfg.config_hash);
    if (cfg.problem.parabolic) {
        ParabolicProblem P = build_parabolic_problem(cfg);
        Trajectory traj = solve_parabolic(P, cfg.solver);
        for (const std::string& f : write_trajectory(traj, rec.dir() + "/slices"))
            rec.note_file("slices/" + f);
        write_csv(traj.slices.back(), rec.path("solution.csv"));
        json rep;
        rep["mode"] = "parabolic";
        rep["steps"] = traj.step_reports.size();
        rep["completed"] = traj.completed;
        if (!traj.step_reports.empty()) rep["final_step"] = report_json(traj.step_reports.back());
        write_json_file(rep, rec.path("report.json"));
        rec.check("parabolic_march_completed", traj.completed,
                  "slices=" + std::to_string(traj.slices.size()));
        return rec.finish(traj.completed ? kExitOk : kExitSolverFailure);
    }

    DoubleObstacleProblem P = build_elliptic_problem(cfg);
    try {
        auto [u, rep] = solve_elliptic(P, cfg.solver);
        write_csv(u, rec.path("solution.csv"));
        write_json_file(report_json(rep), rec.path("report.json"));
        char detail[64];
        std::snprintf(detail, sizeof(detail), "residual=%.3e", rep.final_residual);
        rec.check("elliptic_converged", true, detail);
        return rec.finish(kExitOk);
    } catch (const SolveError& e) {
        rec.check("elliptic_converged", false, e.what());
        std::cerr << "solver failure: " << e.what() << '\n';
        return rec.finish(kExitSolverFailure);
    }
}

// ---------------------------------------------------------------------------
// penalty sweep
// ---------------------------------------------------------------------------

int cmd_penalty_sweep_impl(const RunConfig& cfg) {
    if (!cfg.penalty) throw ConfigError("config error at /penalty: block required");
    RunRecorder rec(cfg.output_dir, cfg.config_hash);
    DoubleObstacleProblem P = build_elliptic_problem(cfg);
    SweepResult sweep;
    try {
        sweep = penalty_sweep(P, cfg.penalty->eps_list, cfg.solver, cfg.penalty->C);
    } catch (const SolveError& e) {
        rec.check("sweep_reference_solve", false, e.what());
        std::cerr << "solver failure: " << e.what() << '\n';
        return rec.finish(kExitSolverFailure);
    }
    write_csv(sweep.u_vi, rec.path("vi_solution.csv"));
    write_sweep_csv(sweep, rec.path("sweep.csv"));

    char detail[160];
    std::snprintf(detail, sizeof(detail), "max sup|G|=%.6g bound_C=%.6g", sweep.max_sup_penalty,
                  sweep.bound_C);
    rec.check("all_legs_converged", sweep.all_converged,
              std::to_string(sweep.rows.size()) + " legs");
    rec.check("uniform_penalty_bound", sweep.bound_held, detail);
    if (!sweep.all_converged) return rec.finish(kExitSolverFailure);
    return rec.finish(sweep.bound_held ? kExitOk : kExitVerifyFailure);
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct ProbeOutcome {
    int node;
    std::string set_name;
    std::string kind;
    GrowthProfile profile;
    bool pass;
};

json profile_json(const GrowthProfile& p) {
    json rows = json::array();
    for (const GrowthRow& r : p.rows) rows.push_back({{"r", r.r}, {"sup", r.sup}});
    json j;
    j["anchor_node"] = p.anchor_node;
    j["rows"] = rows;
    j["fit_defined"] = p.fit_defined;
    if (p.fit_defined) {
        j["C"] = p.C;
        j["beta"] = p.beta;
        j["r2"] = p.r2;
    }
    return j;
}

void write_profile_csv(const GrowthProfile& p, const std::string& path) {
    std::ofstream f(path);
    f << "r,sup,bound\n";
    char buf[128];
    for (const GrowthRow& r : p.rows) {
        const double bound = p.fit_defined ? p.C * std::pow(r.r, p.beta) : 0.0;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", r.r, r.sup, bound);
        f << buf;
    }
}

/// Growth probes pass when they fit with beta >= beta_min and R^2 >= r2_min,
/// or when the profile is degenerate (all rows at the noise floor - zero
/// growth trivially satisfies the growth bound).
bool probe_passes(const GrowthProfile& p, const VerifySpec& vs) {
    if (!p.fit_defined) return true;
    return p.beta >= vs.beta_min && p.r2 >= vs.r2_min;
}

int cmd_verify_impl(const RunConfig& cfg, bool inline_solve) {
    RunRecorder rec(cfg.output_dir, cfg.config_hash);
    const VerifySpec& vs = cfg.verify;
    json report;
    report["tool_version"] = kToolVersion;

    // --- direct-ingest mode: synthesize the field and run stability checks
    if (vs.field) {
        auto sample_field = [&](int n) {
            GridPtr grid = Grid::make(cfg.problem.dim, n, cfg.problem.domain_kind);
            const ExprPtr e = vs.field;
            return GridFunction::sample(grid, [e](double x, double y) {
                EvalEnv env;
                env.x = x;
                env.y = y;
                return eval(*e, env);
            });
        };
        const int n_fine = cfg.problem.n;
        const int n_coarse = (n_fine - 1) / 2 + 1;
        const GridFunction f_fine = sample_field(n_fine);
        const GridFunction f_coarse = sample_field(n_coarse);
        json semis = json::array();
        bool all_pass = true;
        for (double alpha : vs.alpha_list) {
            const double v_f =
                gradient_holder_seminorm(f_fine, alpha, vs.delta, vs.pair_budget, cfg.seed);
            const double v_c =
                gradient_holder_seminorm(f_coarse, alpha, vs.delta, vs.pair_budget, cfg.seed);
            const double factor = std::max(v_f, v_c) / std::max(std::min(v_f, v_c), 1e-300);
            const bool pass = factor <= vs.refine_factor_max;
            all_pass = all_pass && pass;
            semis.push_back({{"alpha", alpha},
                             {"fine", v_f},
                             {"coarse", v_c},
                             {"factor", factor},
                             {"pass", pass}});
            char detail[128];
            std::snprintf(detail, sizeof(detail), "alpha=%g factor=%.4g limit=%.4g", alpha,
                          factor, vs.refine_factor_max);
            rec.check("gradient_seminorm_refinement", pass, detail);
        }
        report["mode"] = "field_ingest";
        report["gradient_refinement"] = semis;
        write_json_file(report, rec.path("regularity.json"));
        return rec.finish(all_pass ? kExitOk : kExitVerifyFailure);
    }

    // --- solution-based mode
    DoubleObstacleProblem P = build_elliptic_problem(cfg);
    GridFunction u;
    std::optional<Trajectory> traj;
    if (cfg.problem.parabolic) {
        const std::string slices_dir = cfg.output_dir + "/slices";
        if (!inline_solve && fs::exists(slices_dir + "/index.json")) {
            traj = read_trajectory(P.grid(), slices_dir);
        } else if (inline_solve) {
            ParabolicProblem PP = build_parabolic_problem(cfg);
            traj = solve_parabolic(PP, cfg.solver);
            if (!traj->completed) {
                rec.check("parabolic_march_completed", false, "step failure");
                return rec.finish(kExitSolverFailure);
            }
        } else {
            std::cerr << "verify: missing trajectory artifacts in " << slices_dir
                      << " (run solve first or pass --inline-solve)\n";
            return kExitInputError;
        }
        u = traj->slices.back();
    } else if (inline_solve) {
        u = solve_elliptic(P, cfg.solver).first;
    } else {
        const std::string sol = cfg.output_dir + "/solution.csv";
        if (!fs::exists(sol)) {
            std::cerr << "verify: missing solution artifact " << sol
                      << " (run solve first or pass --inline-solve)\n";
            return kExitInputError;
        }
        u = read_csv(P.grid(), sol);
        if (!u.is_complete()) {
            std::cerr << "verify: solution file incomplete\n";
            return kExitInputError;
        }
    }

    const Grid& g = *P.grid();
    const double tau = default_contact_tau(g, cfg.solver);
    const ContactSets cs = contact_sets(u, P, tau);
    report["tau"] = tau;
    report["E1_count"] = cs.E1.size();
    report["E2_count"] = cs.E2.size();
    report["A_count"] = cs.A.size();
    const double sep = separation_distance(cs, g);
    report["separation_distance"] = std::isfinite(sep) ? json(sep) : json("inf");
    if (!cs.E1.empty() && !cs.E2.empty())
        rec.check("contact_sets_separated", sep > 0.0, "d(E1,E2)=" + std::to_string(sep));

    // growth probes
    std::vector<ProbeOutcome> outcomes;
    auto run_probe = [&](int node, const std::string& set_name, const std::string& kind) {
        const double bdist = g.distance_to_domain_boundary(node);
        const std::vector<double> radii = dyadic_radii(g.h(), std::min(vs.radii_max, bdist));
        if (radii.empty()) return;
        GrowthProfile p = set_name == "E1" ? growth_profile(u, P.phi1(), node, radii, tau)
                                           : growth_profile(P.phi2(), u, node, radii, tau);
        outcomes.push_back({node, set_name, kind, std::move(p), false});
        outcomes.back().pass = probe_passes(outcomes.back().profile, vs);
    };
    if (vs.probe_points == "auto") {
        for (int node : deepest_probes(cs.E1, g)) run_probe(node, "E1", "auto");
        for (int node : deepest_probes(cs.E2, g)) run_probe(node, "E2", "auto");
        for (int node : edge_probes(cs.E1, g)) run_probe(node, "E1", "edge");
        for (int node : edge_probes(cs.E2, g)) run_probe(node, "E2", "edge");
    } else {
        for (const auto& pt : vs.explicit_probes) {
            const int node = g.node_near(pt[0], pt[1]);
            const bool lower = u.value(node) - P.phi1().value(node) <= tau;
            const bool upper = P.phi2().value(node) - u.value(node) <= tau;
            if (!lower && !upper)
                throw ConfigError("config error at /verify/probe_points: node is not a contact point");
            run_probe(node, lower ? "E1" : "E2", "explicit");
        }
    }
    if (!outcomes.empty()) fs::create_directories(rec.dir() + "/profiles");
    json probes = json::array();
    bool growth_all = true;
    for (const ProbeOutcome& o : outcomes) {
        json pj = profile_json(o.profile);
        pj["set"] = o.set_name;
        pj["kind"] = o.kind;
        pj["pass"] = o.pass;
        probes.push_back(pj);
        char name[64];
        std::snprintf(name, sizeof(name), "profiles/probe_%s_%d.csv", o.set_name.c_str(), o.node);
        write_profile_csv(o.profile, rec.path(name));
        growth_all = growth_all && o.pass;
    }
    report["growth_probes"] = probes;
    if (!outcomes.empty())
        rec.check("growth_at_contact", growth_all,
                  std::to_string(outcomes.size()) + " probes, beta_min=" +
                      std::to_string(vs.beta_min));

    // Holder seminorms of u (informational) and the C^{1,alpha} refinement check
    json semis = json::array();
    for (double alpha : vs.alpha_list) {
        const double v = holder_seminorm(u, alpha, vs.delta, vs.pair_budget, cfg.seed);
        semis.push_back({{"alpha", alpha}, {"value", v}});
    }
    report["holder_seminorms_u"] = semis;

    if (vs.refinement_check && !cfg.problem.parabolic) {
        const int n_coarse = (g.n() - 1) / 2 + 1;
        DoubleObstacleProblem Pc = build_elliptic_problem(cfg, n_coarse);
        const GridFunction uc = solve_elliptic(Pc, cfg.solver).first;
        json rows = json::array();
        bool pass_all = true;
        for (double alpha : vs.alpha_list) {
            const double v_f = gradient_holder_seminorm(u, alpha, vs.delta, vs.pair_budget, cfg.seed);
            const double v_c =
                gradient_holder_seminorm(uc, alpha, vs.delta, vs.pair_budget, cfg.seed);
            const double factor = std::max(v_f, v_c) / std::max(std::min(v_f, v_c), 1e-300);
            const bool pass = factor <= vs.refine_factor_max;
            pass_all = pass_all && pass;
            rows.push_back({{"alpha", alpha},
                            {"fine", v_f},
                            {"coarse", v_c},
                            {"factor", factor},
                            {"pass", pass}});
            char detail[128];
            std::snprintf(detail, sizeof(detail), "alpha=%g factor=%.4g limit=%.4g", alpha,
                          factor, vs.refine_factor_max);
            rec.check("gradient_seminorm_refinement", pass, detail);
        }
        report["gradient_refinement"] = rows;
    }

    // weak L^eps superlevel check
    if (vs.weak_leps) {
        const WeakLepsSpec& ws = *vs.weak_leps;
        const ExprPtr we = ws.w;
        const GridFunction w = GridFunction::sample(P.grid(), [we](double x, double y) {
            EvalEnv env;
            env.x = x;
            env.y = y;
            return eval(*we, env);
        });
        const int x0 = g.node_near(ws.x0[0], ws.x0[1]);
        double C = ws.C;
        if (C <= 0.0) {
            // mean-value normalization: |B_{r/2}| (discrete) / r^d
            const double hd = g.dim() == 1 ? g.h() : g.h() * g.h();
            const double rd = g.dim() == 1 ? ws.r : ws.r * ws.r;
            C = ball_nodes(g, g.coord(x0), ws.r / 2.0).size() * hd / rd;
        }
        const auto rows = weak_Leps_check(w, P.op(), x0, ws.r, ws.N_list, ws.eps, C);
        json jrows = json::array();
        bool pass_all = true;
        for (const WeakLepsRow& r : rows) {
            jrows.push_back(
                {{"N", r.N}, {"measured", r.measured}, {"bound", r.bound}, {"pass", r.pass}});
            pass_all = pass_all && r.pass;
        }
        report["weak_Leps"] = jrows;
        rec.check("weak_Leps_rows", pass_all, std::to_string(rows.size()) + " rows");
    }

    // parabolic cylinder growth at a contact probe of the final slice
    if (traj) {
        const double r_cap = std::sqrt((traj->times.back() - traj->times.front()) / 2.0);
        double dt_min = kInfiniteBound;
        for (std::size_t k = 1; k < traj->times.size(); ++k)
            dt_min = std::min(dt_min, traj->times[k] - traj->times[k - 1]);
        std::vector<double> radii;
        for (double r : dyadic_radii(g.h(), std::min(vs.radii_max, 0.9 * r_cap)))
            if (r * r >= 2.0 * dt_min) radii.push_back(r); // cylinder time-resolution floor
        std::vector<int> anchors = deepest_probes(cs.E1, g);
        if (anchors.empty()) anchors = deepest_probes(cs.E2, g);
        if (!anchors.empty() && !radii.empty()) {
            const double r_max = radii.back();
            double t0 = vs.parabolic_t0 ? *vs.parabolic_t0 : traj->times.back() - 0.5;
            t0 = std::max(t0, traj->times.front() + r_max * r_max);
            t0 = std::min(t0, traj->times.back() - r_max * r_max);
            GrowthProfile p = parabolic_growth_profile(*traj, anchors.front(), t0, radii, tau);
            json pj = profile_json(p);
            pj["anchor_t"] = p.anchor_t;
            report["parabolic_growth"] = pj;
            const bool pass = !p.fit_defined || p.beta >= vs.parabolic_beta_min;
            char detail[96];
            if (p.fit_defined)
                std::snprintf(detail, sizeof(detail), "beta=%.3f min=%.3f", p.beta,
                              vs.parabolic_beta_min);
            else
                std::snprintf(detail, sizeof(detail), "degenerate profile (bounded growth)");
            rec.check("parabolic_cylinder_growth", pass, detail);
        }
    }

    write_json_file(report, rec.path("regularity.json"));
    return rec.finish(rec.all_checks_pass() ? kExitOk : kExitVerifyFailure);
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report_impl(const std::string& run_dir) {
    const std::string path = run_dir + "/manifest.json";
    std::ifstream f(path);
    if (!f) {
        std::cerr << "report: cannot open " << path << '\n';
        return kExitInputError;
    }
    json m;
    try {
        f >> m;
    } catch (const json::exception& e) {
        std::cerr << "report: corrupt manifest: " << e.what() << '\n';
        return kExitInputError;
    }
    if (!m.contains("files") || !m.contains("exit_code") || !m.contains("checks")) {
        std::cerr << "report: corrupt manifest: missing fields\n";
        return kExitInputError;
    }
    for (const auto& file : m.at("files")) {
        const std::string rel = file.get<std::string>();
        if (!fs::exists(run_dir + "/" + rel)) {
            std::cerr << "report: listed file missing: " << rel << '\n';
            return kExitInputError;
        }
    }
    std::printf("run %s (tool %s)\n", m.value("config_hash", "?").c_str(),
                m.value("tool_version", "?").c_str());
    std::printf("started  %s\nfinished %s\n", m.value("started_at", "?").c_str(),
                m.value("finished_at", "?").c_str());
    std::printf("%-40s %-6s %s\n", "check", "status", "detail");
    for (const auto& c : m.at("checks")) {
        std::printf("%-40s %-6s %s\n", c.value("name", "?").c_str(),
                    c.value("pass", false) ? "PASS" : "FAIL", c.value("detail", "").c_str());
    }
    const int code = m.at("exit_code").get<int>();
    std::printf("stored exit code: %d\n", code);
    return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitInputError;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const EvalError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const SolveError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolverFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}

} // namespace

int thread_cap() {
    const char* env = std::getenv("TOOL_THREADS");
    if (!env) return 1;
    const int v = std::atoi(env);
    return v >= 1 ? v : 1;
}

int cmd_solve(const CliInvocation& inv) {
    return guarded([&] { return cmd_solve_impl(load_config(inv)); });
}

int cmd_penalty_sweep(const CliInvocation& inv) {
    return guarded([&] { return cmd_penalty_sweep_impl(load_config(inv)); });
}

int cmd_verify(const CliInvocation& inv) {
    return guarded([&] { return cmd_verify_impl(load_config(inv), inv.inline_solve); });
}

int cmd_report(const std::string& run_dir) {
    return guarded([&] { return cmd_report_impl(run_dir); });
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"double obstacle problem solver and verification harness"};
    app.require_subcommand(1);

    CliInvocation inv;
    auto add_common = [&](CLI::App* sub, bool with_inline) {
        sub->add_option("--config", inv.config_path, "run configuration JSON");
        sub->add_option("--out", inv.out_dir, "output directory (overrides config)");
        sub->add_option("--seed", [&inv](const std::vector<std::string>& vals) {
            try {
                inv.seed = std::stoull(vals.front());
            } catch (const std::exception&) {
                return false;
            }
            return true;
        }, "seed override");
        if (with_inline)
            sub->add_flag("--inline-solve", inv.inline_solve, "solve before verifying");
    };
    CLI::App* solve = app.add_subcommand("solve", "solve the configured problem");
    add_common(solve, false);
    CLI::App* sweep = app.add_subcommand("penalty-sweep", "run the epsilon continuation");
    add_common(sweep, false);
    CLI::App* verify = app.add_subcommand("verify", "run the regularity harness");
    add_common(verify, true);
    CLI::App* report = app.add_subcommand("report", "summarize a finished run");
    report->add_option("--out", inv.out_dir, "run directory");

    std::vector<std::string> argv_r(args.rbegin(), args.rend());
    try {
        app.parse(argv_r);
    } catch (const CLI::ParseError& e) {
        std::stringstream out;
        const int code = app.exit(e, out, out);
        std::cerr << out.str();
        return code == 0 ? kExitOk : kExitInputError;
    }

    if (solve->parsed()) return cmd_solve(inv);
    if (sweep->parsed()) return cmd_penalty_sweep(inv);
    if (verify->parsed()) return cmd_verify(inv);
    if (report->parsed()) {
        if (inv.out_dir.empty()) {
            std::cerr << "report: --out DIR is required\n";
            return kExitInputError;
        }
        return cmd_report(inv.out_dir);
    }
    return kExitInputError;
}

} // namespace dop
