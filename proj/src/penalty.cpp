#include "dop/penalty.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "dop/errors.hpp"

namespace dop {

PenaltyFamily::PenaltyFamily(double C, double epsilon, double clamp)
    : C_(C), epsilon_(epsilon), clamp_(clamp) {
    if (!(C > 0.0)) throw std::invalid_argument("penalty family: C must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("penalty family: epsilon must be positive");
    if (!(clamp > C)) throw std::invalid_argument("penalty family: clamp must exceed C");
    cap_exponent_ = std::log(clamp_ / C_);
}

double PenaltyFamily::beta(double s) const {
    const double a = -s / epsilon_;
    if (a >= cap_exponent_) return -clamp_;
    return -C_ * std::exp(a);
}

double PenaltyFamily::beta_prime(double s) const {
    const double a = -s / epsilon_;
    if (a >= cap_exponent_) return 0.0;
    return (C_ / epsilon_) * std::exp(a);
}

double default_C(const DoubleObstacleProblem& P) {
    const GridFunction f1 = apply_operator_field(P.op(), P.phi1());
    const GridFunction f2 = apply_operator_field(P.op(), P.phi2());
    double m = 0.0;
    for (int idx : P.grid()->interior_nodes()) {
        if (!f1.is_defined(idx) || !f2.is_defined(idx)) continue;
        m = std::max(m, std::abs(f1.value(idx)) + std::abs(f2.value(idx)));
    }
    return m + 1.0;
}

namespace {

/// Penalized system in M-matrix orientation:
///   R(u) = beta(u - phi1) - beta(phi2 - u) - F_h(u)
/// with Jacobian (beta'(u-phi1) + beta'(phi2-u)) I - dF_h/du.
class PenalizedSystem {
public:
    PenalizedSystem(const DoubleObstacleProblem& P, const PenaltyFamily& fam,
                    const detail::UnknownMap& map)
        : P_(P), fam_(fam), map_(map), work_(P.grid()) {
        for (int idx : P.grid()->non_exterior_nodes()) work_.set_undefined(idx);
        for (int idx : P.grid()->boundary_nodes()) work_.set(idx, P.boundary().value(idx));
    }

    std::vector<double> residual(std::span<const double> x) {
        fill(x);
        std::vector<double> r(x.size());
        for (std::size_t k = 0; k < map_.nodes.size(); ++k) {
            const int node = map_.nodes[k];
            const double u = work_.value(node);
            r[k] = fam_.beta(u - P_.phi1().value(node)) -
                   fam_.beta(P_.phi2().value(node) - u) -
                   P_.op().eval(discrete_hessian(work_, node));
        }
        return r;
    }

    SparseMatrix jacobian(std::span<const double> x) {
        fill(x);
        const Grid& g = *P_.grid();
        std::vector<std::tuple<int, int, double>> t;
        for (std::size_t k = 0; k < map_.nodes.size(); ++k) {
            const int node = map_.nodes[k];
            const int row = static_cast<int>(k);
            const double u = work_.value(node);
            const double dpen = fam_.beta_prime(u - P_.phi1().value(node)) +
                                fam_.beta_prime(P_.phi2().value(node) - u);
            t.emplace_back(row, row, dpen);
            append_operator_row(g, node, row, t);
        }
        return SparseMatrix::from_triplets(static_cast<int>(map_.nodes.size()), std::move(t));
    }

private:
    void fill(std::span<const double> x) {
        for (std::size_t k = 0; k < map_.nodes.size(); ++k) work_.set(map_.nodes[k], x[k]);
    }

    // rows of -dF_h/du at the current iterate
    void append_operator_row(const Grid& g, int node, int row,
                             std::vector<std::tuple<int, int, double>>& t) {
        const EllipticOperator& F = P_.op();
        auto add_stencil = [&](const SymMatrix& a) {
            detail::linear_stencil(g, a, node, [&](int j, double coeff) {
                const int slot = map_.slot[static_cast<std::size_t>(j)];
                if (slot >= 0) t.emplace_back(row, slot, -coeff);
            });
        };
        switch (F.kind()) {
            case OperatorKind::laplace:
                add_stencil(g.dim() == 1 ? SymMatrix::scalar(1.0)
                                         : SymMatrix::of2(1.0, 0.0, 1.0));
                break;
            case OperatorKind::bellman: {
                const SymMatrix m = discrete_hessian(work_, node);
                const auto& mats = F.bellman_matrices();
                std::size_t best = 0;
                double best_v = 1e308;
                for (std::size_t k = 0; k < mats.size(); ++k) {
                    const SymMatrix& a = mats[k];
                    const double v = g.dim() == 1
                                         ? a.a11 * m.a11
                                         : a.a11 * m.a11 + a.a22 * m.a22 + 2.0 * a.a12 * m.a12;
                    if (v < best_v) {
                        best_v = v;
                        best = k;
                    }
                }
                add_stencil(mats[best]);
                break;
            }
            case OperatorKind::pucci_minus:
            case OperatorKind::pucci_plus: {
                const SymMatrix m = discrete_hessian(work_, node);
                const double w_pos = F.kind() == OperatorKind::pucci_plus ? F.Lambda() : F.lambda();
                const double w_neg = F.kind() == OperatorKind::pucci_plus ? F.lambda() : F.Lambda();
                SymMatrix eff;
                if (g.dim() == 1) {
                    eff = SymMatrix::scalar(m.a11 >= 0.0 ? w_pos : w_neg);
                } else {
                    const double half_gap = 0.5 * (m.a11 - m.a22);
                    const double dev = std::sqrt(half_gap * half_gap + m.a12 * m.a12);
                    const auto ev = m.eigenvalues();
                    const double w_lo = ev[0] >= 0.0 ? w_pos : w_neg;
                    const double w_hi = ev[1] >= 0.0 ? w_pos : w_neg;
                    double da = 0.5 * (w_lo + w_hi), dc = da, db = 0.0;
                    if (dev > 1e-14) {
                        da += (w_hi - w_lo) * 0.5 * half_gap / dev;
                        dc -= (w_hi - w_lo) * 0.5 * half_gap / dev;
                        db = (w_hi - w_lo) * m.a12 / dev;
                    }
                    // gradient as an effective coefficient matrix: dF = tr(E d(D^2u))
                    eff = SymMatrix::of2(da, db / 2.0, dc);
                }
                add_stencil(eff);
                break;
            }
        }
    }

    const DoubleObstacleProblem& P_;
    const PenaltyFamily& fam_;
    const detail::UnknownMap& map_;
    GridFunction work_;
};

} // namespace

std::pair<GridFunction, PenalizedReport> solve_penalized(const DoubleObstacleProblem& P,
                                                         const PenaltyFamily& family,
                                                         const GridFunction& u0,
                                                         const SolverParams& params) {
    for (int idx : P.grid()->boundary_nodes()) {
        if (!u0.is_defined(idx) || std::abs(u0.value(idx) - P.boundary().value(idx)) > 1e-12)
            throw std::invalid_argument("solve_penalized: u0 does not match boundary data");
    }
    detail::UnknownMap map(*P.grid());
    PenalizedSystem sys(P, family, map);
    NewtonResult nr = semismooth_newton(
        [&](std::span<const double> v) { return sys.residual(v); },
        [&](std::span<const double> v) { return sys.jacobian(v); },
        detail::restrict_interior(u0, map), params);

    GridFunction u = detail::embed_solution(P, map, nr.x);
    PenalizedReport rep;
    rep.newton_iterations = nr.newton_iterations;
    rep.final_residual = nr.residual;
    rep.converged = true;
    for (int idx : P.grid()->non_exterior_nodes()) {
        const double v = u.value(idx);
        const double g =
            family.beta(v - P.phi1().value(idx)) - family.beta(P.phi2().value(idx) - v);
        rep.sup_penalty_term = std::max(rep.sup_penalty_term, std::abs(g));
        rep.max_violation_lower = std::max(rep.max_violation_lower, P.phi1().value(idx) - v);
        rep.max_violation_upper = std::max(rep.max_violation_upper, v - P.phi2().value(idx));
    }
    rep.max_violation_lower = std::max(rep.max_violation_lower, 0.0);
    rep.max_violation_upper = std::max(rep.max_violation_upper, 0.0);
    return {std::move(u), rep};
}

SweepResult penalty_sweep(const DoubleObstacleProblem& P, const std::vector<double>& eps_list,
                          const SolverParams& params, double C_override) {
    if (eps_list.empty()) throw std::invalid_argument("penalty_sweep: empty epsilon list");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0))
            throw std::invalid_argument("penalty_sweep: epsilons must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("penalty_sweep: epsilon list must be strictly decreasing");
    }

    SweepResult out;
    out.penalty_C = C_override > 0.0 ? C_override : default_C(P);
    out.bound_C = 2.0 * out.penalty_C + (default_C(P) - 1.0);
    out.u_vi = solve_elliptic(P, params).first;

    GridFunction warm = out.u_vi;
    out.all_converged = true;
    for (double eps : eps_list) {
        SweepRow row;
        row.epsilon = eps;
        try {
            PenaltyFamily fam(out.penalty_C, eps);
            auto [u_eps, rep] = solve_penalized(P, fam, warm, params);
            row.newton_iters = rep.newton_iterations;
            row.sup_penalty_term = rep.sup_penalty_term;
            row.max_violation_lower = rep.max_violation_lower;
            row.max_violation_upper = rep.max_violation_upper;
            row.converged = true;
            double dist = 0.0;
            for (int idx : P.grid()->non_exterior_nodes())
                dist = std::max(dist, std::abs(u_eps.value(idx) - out.u_vi.value(idx)));
            row.dist_to_vi = dist;
            warm = std::move(u_eps);
            out.rows.push_back(row);
        } catch (const SolveError& err) {
            row.converged = false;
            row.newton_iters = err.iterations();
            out.rows.push_back(row);
            out.all_converged = false;
            break;
        }
    }

    for (const SweepRow& r : out.rows)
        if (r.converged) out.max_sup_penalty = std::max(out.max_sup_penalty, r.sup_penalty_term);
    bool saturated = true;
    if (out.rows.size() >= 2) {
        const SweepRow& last = out.rows.back();
        const SweepRow& prev = out.rows[out.rows.size() - 2];
        if (last.converged && prev.converged)
            saturated = last.sup_penalty_term <= 1.1 * prev.sup_penalty_term + 1e-6;
    }
    out.bound_held = out.max_sup_penalty <= out.bound_C && saturated;
    return out;
}

void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_sweep_csv: cannot open " + path);
    f << "epsilon,dist_to_vi,sup_penalty_term,newton_iters,converged\n";
    char buf[128];
    for (const SweepRow& r : sweep.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d,%d\n", r.epsilon, r.dist_to_vi,
                      r.sup_penalty_term, r.newton_iters, r.converged ? 1 : 0);
        f << buf;
    }
}

} // namespace dop
