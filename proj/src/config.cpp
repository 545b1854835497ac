#include "dop/config.hpp"

#include <fstream>
#include <sstream>

#include "dop/errors.hpp"
#include "json.hpp"

namespace dop {

namespace {

using nlohmann::json;

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

[[noreturn]] void fail(const std::string& pointer, const std::string& msg) {
    throw ConfigError("config error at " + pointer + ": " + msg);
}

ExprPtr parse_field(const json& j, const std::string& pointer) {
    if (!j.is_string()) fail(pointer, "expected an expression string");
    try {
        return parse(j.get<std::string>());
    } catch (const ParseError& e) {
        fail(pointer, e.what());
    }
}

/// t is only meaningful in parabolic lateral data; y only in 2D.
void check_vars(const ExprPtr& e, const std::string& pointer, int dim, bool allow_t) {
    const VarsUsed v = variables_used(*e);
    if (v.y && dim == 1) fail(pointer, "variable y used in a 1D problem");
    if (v.t && !allow_t) fail(pointer, "variable t not allowed in this field");
}

EllipticOperator parse_operator(const json& j, int dim, const std::string& pointer) {
    if (!j.is_object()) fail(pointer, "expected an operator object");
    const std::string kind = j.value("kind", "");
    const double lambda = j.value("lambda", 1.0);
    const double Lambda = j.value("Lambda", 1.0);
    try {
        if (kind == "laplace") return EllipticOperator::laplace();
        if (kind == "pucci_minus") return EllipticOperator::pucci_minus(lambda, Lambda);
        if (kind == "pucci_plus") return EllipticOperator::pucci_plus(lambda, Lambda);
        if (kind == "bellman") {
            if (!j.contains("matrices")) fail(pointer + "/matrices", "bellman needs matrices");
            std::vector<SymMatrix> mats;
            for (const auto& m : j.at("matrices")) {
                if (dim == 1) {
                    if (!m.is_array() || m.size() != 1 || !m.at(0).is_array() ||
                        m.at(0).size() != 1)
                        fail(pointer + "/matrices", "1D matrices must be [[a]]");
                    mats.push_back(SymMatrix::scalar(m.at(0).at(0).get<double>()));
                } else {
                    if (!m.is_array() || m.size() != 2 || m.at(0).size() != 2 ||
                        m.at(1).size() != 2)
                        fail(pointer + "/matrices", "2D matrices must be [[a,b],[b,c]]");
                    const double a = m.at(0).at(0).get<double>();
                    const double b01 = m.at(0).at(1).get<double>();
                    const double b10 = m.at(1).at(0).get<double>();
                    const double c = m.at(1).at(1).get<double>();
                    if (b01 != b10) fail(pointer + "/matrices", "matrix not symmetric");
                    mats.push_back(SymMatrix::of2(a, b01, c));
                }
            }
            return EllipticOperator::bellman(std::move(mats), lambda, Lambda);
        }
    } catch (const std::invalid_argument& e) {
        fail(pointer, e.what());
    }
    fail(pointer + "/kind", "unknown operator kind '" + kind + "'");
}

} // namespace

RunConfig RunConfig::from_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
    }

    RunConfig cfg;
    cfg.config_hash = fnv1a_hex(text);

    if (!doc.contains("problem")) fail("/problem", "missing block");
    const json& p = doc.at("problem");
    cfg.problem.dim = p.value("dim", 1);
    cfg.problem.n = p.value("n", 101);
    const std::string kind = p.value("domain_kind", "box");
    if (kind == "box")
        cfg.problem.domain_kind = DomainKind::box;
    else if (kind == "disc")
        cfg.problem.domain_kind = DomainKind::disc;
    else
        fail("/problem/domain_kind", "expected 'box' or 'disc'");
    if (p.contains("operator"))
        cfg.problem.op = parse_operator(p.at("operator"), cfg.problem.dim, "/problem/operator");

    if (p.contains("parabolic")) {
        const json& pb = p.at("parabolic");
        ParabolicSpec ps;
        ps.t_start = pb.value("t_start", -1.0);
        ps.t_end = pb.value("t_end", 1.0);
        ps.dt = pb.value("dt", 0.01);
        cfg.problem.parabolic = ps;
    }
    const bool parabolic = cfg.problem.parabolic.has_value();

    if (!p.contains("phi1")) fail("/problem/phi1", "missing obstacle");
    if (!p.contains("phi2")) fail("/problem/phi2", "missing obstacle");
    if (!p.contains("g")) fail("/problem/g", "missing boundary data");
    cfg.problem.phi1 = parse_field(p.at("phi1"), "/problem/phi1");
    cfg.problem.phi2 = parse_field(p.at("phi2"), "/problem/phi2");
    cfg.problem.g = parse_field(p.at("g"), "/problem/g");
    check_vars(cfg.problem.phi1, "/problem/phi1", cfg.problem.dim, false);
    check_vars(cfg.problem.phi2, "/problem/phi2", cfg.problem.dim, false);
    check_vars(cfg.problem.g, "/problem/g", cfg.problem.dim, parabolic);
    if (p.contains("u0")) {
        cfg.problem.u0 = parse_field(p.at("u0"), "/problem/u0");
        check_vars(cfg.problem.u0, "/problem/u0", cfg.problem.dim, false);
    } else if (parabolic) {
        fail("/problem/u0", "parabolic problems need initial data");
    }

    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        cfg.solver.tol_linear = s.value("tol_linear", cfg.solver.tol_linear);
        cfg.solver.tol_nonlinear = s.value("tol_nonlinear", cfg.solver.tol_nonlinear);
        cfg.solver.max_iter_linear = s.value("max_iter_linear", cfg.solver.max_iter_linear);
        cfg.solver.max_iter_newton = s.value("max_iter_newton", cfg.solver.max_iter_newton);
        cfg.solver.relaxation_omega = s.value("relaxation_omega", cfg.solver.relaxation_omega);
        cfg.solver.newton_damping = s.value("newton_damping", cfg.solver.newton_damping);
        try {
            cfg.solver.validate();
        } catch (const std::invalid_argument& e) {
            fail("/solver", e.what());
        }
    }

    if (doc.contains("penalty")) {
        const json& pe = doc.at("penalty");
        PenaltySpec ps;
        ps.C = pe.value("C", 0.0);
        if (!pe.contains("eps_list")) fail("/penalty/eps_list", "missing epsilon list");
        for (const auto& v : pe.at("eps_list")) ps.eps_list.push_back(v.get<double>());
        for (std::size_t i = 0; i < ps.eps_list.size(); ++i) {
            if (!(ps.eps_list[i] > 0.0)) fail("/penalty/eps_list", "epsilons must be positive");
            if (i > 0 && !(ps.eps_list[i] < ps.eps_list[i - 1]))
                fail("/penalty/eps_list", "epsilon list must be strictly decreasing");
        }
        cfg.penalty = std::move(ps);
    }

    if (doc.contains("verify")) {
        const json& v = doc.at("verify");
        VerifySpec& vs = cfg.verify;
        if (v.contains("probe_points")) {
            if (v.at("probe_points").is_string()) {
                vs.probe_points = v.at("probe_points").get<std::string>();
                if (vs.probe_points != "auto")
                    fail("/verify/probe_points", "expected 'auto' or a list of points");
            } else {
                vs.probe_points = "explicit";
                for (const auto& pt : v.at("probe_points")) {
                    std::array<double, 2> q{0.0, 0.0};
                    q[0] = pt.at(0).get<double>();
                    if (pt.size() > 1) q[1] = pt.at(1).get<double>();
                    vs.explicit_probes.push_back(q);
                }
            }
        }
        vs.radii_max = v.value("radii_max", vs.radii_max);
        if (v.contains("alpha")) {
            vs.alpha_list.clear();
            for (const auto& a : v.at("alpha")) vs.alpha_list.push_back(a.get<double>());
        }
        vs.delta = v.value("delta", vs.delta);
        vs.pair_budget = v.value("pair_budget", vs.pair_budget);
        vs.beta_min = v.value("beta_min", vs.beta_min);
        vs.r2_min = v.value("r2_min", vs.r2_min);
        vs.refine_factor_max = v.value("refine_factor_max", vs.refine_factor_max);
        vs.refinement_check = v.value("refinement_check", vs.refinement_check);
        if (v.contains("field")) {
            vs.field = parse_field(v.at("field"), "/verify/field");
            check_vars(vs.field, "/verify/field", cfg.problem.dim, false);
        }
        if (v.contains("weak_leps")) {
            const json& w = v.at("weak_leps");
            WeakLepsSpec ws;
            ws.w = parse_field(w.at("w"), "/verify/weak_leps/w");
            check_vars(ws.w, "/verify/weak_leps/w", cfg.problem.dim, false);
            if (w.contains("x0")) {
                ws.x0[0] = w.at("x0").at(0).get<double>();
                if (w.at("x0").size() > 1) ws.x0[1] = w.at("x0").at(1).get<double>();
            }
            ws.r = w.value("r", ws.r);
            ws.eps = w.value("eps", ws.eps);
            ws.C = w.value("C", ws.C);
            if (!w.contains("N")) fail("/verify/weak_leps/N", "missing level list");
            for (const auto& nv : w.at("N")) ws.N_list.push_back(nv.get<double>());
            cfg.verify.weak_leps = std::move(ws);
        }
        if (v.contains("parabolic_t0")) vs.parabolic_t0 = v.at("parabolic_t0").get<double>();
        vs.parabolic_beta_min = v.value("parabolic_beta_min", vs.parabolic_beta_min);
    }

    cfg.output_dir = doc.value("output_dir", cfg.output_dir);
    cfg.seed = doc.value("seed", cfg.seed);
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config error: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

namespace {

std::function<double(double, double)> spatial_fn(const ExprPtr& e) {
    return [e](double x, double y) {
        EvalEnv env;
        env.x = x;
        env.y = y;
        return eval(*e, env);
    };
}

} // namespace

DoubleObstacleProblem build_elliptic_problem(const RunConfig& cfg, int n_override) {
    const int n = n_override > 0 ? n_override : cfg.problem.n;
    GridPtr grid = Grid::make(cfg.problem.dim, n, cfg.problem.domain_kind);
    ProblemData data;
    data.F = cfg.problem.op;
    data.phi1 = spatial_fn(cfg.problem.phi1);
    data.phi2 = spatial_fn(cfg.problem.phi2);
    data.g = spatial_fn(cfg.problem.g);
    try {
        return DoubleObstacleProblem::from_data(std::move(grid), data);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config error at /problem: ") + e.what());
    } catch (const EvalError& e) {
        throw ConfigError(std::string("config error at /problem: ") + e.what());
    }
}

ParabolicProblem build_parabolic_problem(const RunConfig& cfg) {
    if (!cfg.problem.parabolic)
        throw ConfigError("config error at /problem/parabolic: block required");
    const ParabolicSpec& ps = *cfg.problem.parabolic;
    GridPtr grid = Grid::make(cfg.problem.dim, cfg.problem.n, cfg.problem.domain_kind);
    const ExprPtr g_expr = cfg.problem.g;
    auto lateral = [g_expr](double x, double y, double t) {
        EvalEnv env;
        env.x = x;
        env.y = y;
        env.t = t;
        return eval(*g_expr, env);
    };
    try {
        GridFunction phi1 = GridFunction::sample(grid, spatial_fn(cfg.problem.phi1));
        GridFunction phi2 = GridFunction::sample(grid, spatial_fn(cfg.problem.phi2));
        GridFunction u0 = GridFunction::sample(grid, spatial_fn(cfg.problem.u0));
        return ParabolicProblem(grid, ps.t_start, ps.t_end, ps.dt, cfg.problem.op,
                                std::move(phi1), std::move(phi2), lateral, std::move(u0));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config error at /problem: ") + e.what());
    } catch (const EvalError& e) {
        throw ConfigError(std::string("config error at /problem: ") + e.what());
    }
}

} // namespace dop
