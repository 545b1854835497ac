#include "dop/vi_solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dop/errors.hpp"

namespace dop {

DoubleObstacleProblem::DoubleObstacleProblem(GridPtr grid, EllipticOperator F, GridFunction phi1,
                                             GridFunction phi2, GridFunction g)
    : grid_(std::move(grid))
    , F_(std::move(F))
    , phi1_(std::move(phi1))
    , phi2_(std::move(phi2))
    , g_(std::move(g)) {
    phi1_.check_finite("phi1");
    phi2_.check_finite("phi2");
    eps0_ = kInfiniteBound;
    for (int idx : grid_->non_exterior_nodes()) {
        const double sep = phi2_.value(idx) - phi1_.value(idx);
        eps0_ = std::min(eps0_, sep);
    }
    if (!(eps0_ > 0.0))
        throw std::invalid_argument(
            "double obstacle problem: separation invariant violated, need phi1 < phi2 "
            "everywhere (min separation " +
            std::to_string(eps0_) + ")");
    for (int idx : grid_->boundary_nodes()) {
        if (!g_.is_defined(idx))
            throw std::invalid_argument("double obstacle problem: boundary data missing at node " +
                                        std::to_string(idx));
        const double gv = g_.value(idx);
        if (gv < phi1_.value(idx) - 1e-12 || gv > phi2_.value(idx) + 1e-12)
            throw std::invalid_argument(
                "double obstacle problem: boundary data incompatible with obstacles at node " +
                std::to_string(idx));
    }
}

DoubleObstacleProblem DoubleObstacleProblem::from_data(GridPtr grid, const ProblemData& data) {
    GridFunction phi1 = GridFunction::sample(grid, data.phi1);
    GridFunction phi2 = GridFunction::sample(grid, data.phi2);
    GridFunction g(grid);
    for (int idx : grid->non_exterior_nodes()) g.set_undefined(idx);
    for (int idx : grid->boundary_nodes()) {
        Grid::Point p = grid->coord(idx);
        if (grid->kind() == DomainKind::disc) {
            // first-order boundary treatment: evaluate g at the radial
            // projection of the node onto |x| = 1
            const double rho = std::sqrt(p[0] * p[0] + p[1] * p[1]);
            if (rho > 0.0) {
                p[0] /= rho;
                p[1] /= rho;
            }
        }
        g.set(idx, data.g(p[0], p[1]));
    }
    return DoubleObstacleProblem(grid, data.F, std::move(phi1), std::move(phi2), std::move(g));
}

GridFunction complementarity_residual(const GridFunction& u, const DoubleObstacleProblem& P) {
    const GridPtr grid = P.grid();
    for (int idx : grid->boundary_nodes()) {
        if (!u.is_defined(idx) ||
            std::abs(u.value(idx) - P.boundary().value(idx)) > 1e-12)
            throw std::invalid_argument(
                "complementarity_residual: boundary mismatch at node " + std::to_string(idx));
    }
    GridFunction out(grid);
    for (int idx : grid->non_exterior_nodes()) out.set_undefined(idx);
    for (int idx : grid->interior_nodes()) {
        if (!grid->stencil_complete(idx)) continue;
        const double f = P.op().eval(discrete_hessian(u, idx));
        const double low = P.phi1().value(idx) - u.value(idx);
        const double high = P.phi2().value(idx) - u.value(idx);
        out.set(idx, std::max(std::min(f, high), low));
    }
    return out;
}

namespace detail {

UnknownMap::UnknownMap(const Grid& g) {
    slot.assign(static_cast<std::size_t>(g.total_nodes()), -1);
    nodes = g.interior_nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k)
        slot[static_cast<std::size_t>(nodes[k])] = static_cast<int>(k);
}

void linear_stencil(const Grid& g, const SymMatrix& A, int node,
                    const std::function<void(int, double)>& visit) {
    const double h2 = g.h() * g.h();
    const int i = g.ix(node), j = g.iy(node);
    visit(g.index(i - 1, j), A.a11 / h2);
    visit(g.index(i + 1, j), A.a11 / h2);
    double center = -2.0 * A.a11 / h2;
    if (g.dim() == 2) {
        visit(g.index(i, j - 1), A.a22 / h2);
        visit(g.index(i, j + 1), A.a22 / h2);
        center -= 2.0 * A.a22 / h2;
        if (A.a12 != 0.0) {
            const double c = A.a12 / (2.0 * h2);
            visit(g.index(i + 1, j + 1), c);
            visit(g.index(i - 1, j - 1), c);
            visit(g.index(i + 1, j - 1), -c);
            visit(g.index(i - 1, j + 1), -c);
        }
    }
    visit(node, center);
}

PolicyFamily assemble_family(const DoubleObstacleProblem& P, const SymMatrix& A,
                             const UnknownMap& map, double time_coeff,
                             const GridFunction* u_prev) {
    const Grid& g = *P.grid();
    const int m = map.count();
    std::vector<std::tuple<int, int, double>> triplets;
    std::vector<double> b(static_cast<std::size_t>(m), 0.0);
    for (int row = 0; row < m; ++row) {
        const int node = map.nodes[static_cast<std::size_t>(row)];
        linear_stencil(g, A, node, [&](int j, double coeff) {
            const int slot = map.slot[static_cast<std::size_t>(j)];
            if (slot >= 0) {
                triplets.emplace_back(row, slot, -coeff);
            } else {
                // boundary neighbour: its F-orientation contribution moves to b
                b[static_cast<std::size_t>(row)] += coeff * P.boundary().value(j);
            }
        });
        if (time_coeff != 0.0) {
            triplets.emplace_back(row, row, time_coeff);
            b[static_cast<std::size_t>(row)] += time_coeff * u_prev->value(node);
        }
    }
    return {SparseMatrix::from_triplets(m, std::move(triplets)), std::move(b)};
}

std::vector<double> restrict_interior(const GridFunction& f, const UnknownMap& map) {
    std::vector<double> out(map.nodes.size());
    for (std::size_t k = 0; k < map.nodes.size(); ++k) out[k] = f.value(map.nodes[k]);
    return out;
}

GridFunction embed_solution(const DoubleObstacleProblem& P, const UnknownMap& map,
                            std::span<const double> x) {
    GridFunction u(P.grid());
    for (int idx : P.grid()->non_exterior_nodes()) u.set_undefined(idx);
    for (int idx : P.grid()->boundary_nodes()) u.set(idx, P.boundary().value(idx));
    for (std::size_t k = 0; k < map.nodes.size(); ++k) u.set(map.nodes[k], x[k]);
    return u;
}

namespace {

struct HessianGradient {
    double da; // dF / d(uxx)
    double db; // dF / d(uxy)
    double dc; // dF / d(uyy)
};

HessianGradient pucci_gradient(const EllipticOperator& F, const SymMatrix& m) {
    const double w_pos = F.kind() == OperatorKind::pucci_plus ? F.Lambda() : F.lambda();
    const double w_neg = F.kind() == OperatorKind::pucci_plus ? F.lambda() : F.Lambda();
    if (m.dim == 1) {
        return {m.a11 >= 0.0 ? w_pos : w_neg, 0.0, 0.0};
    }
    const double half_gap = 0.5 * (m.a11 - m.a22);
    const double dev = std::sqrt(half_gap * half_gap + m.a12 * m.a12);
    double ddev_da = 0.0, ddev_db = 0.0;
    if (dev > 1e-14) {
        ddev_da = 0.5 * half_gap / dev;
        ddev_db = m.a12 / dev;
    }
    const auto ev = m.eigenvalues();
    const double w_lo = ev[0] >= 0.0 ? w_pos : w_neg;
    const double w_hi = ev[1] >= 0.0 ? w_pos : w_neg;
    // e_lo = mean - dev, e_hi = mean + dev
    return {0.5 * (w_lo + w_hi) + (w_hi - w_lo) * ddev_da,
            (w_hi - w_lo) * ddev_db,
            0.5 * (w_lo + w_hi) - (w_hi - w_lo) * ddev_da};
}

/// Semismooth system for Pucci members (optionally with backward-Euler time
/// term), written in M-matrix orientation:
///   R(u) = min(max(-F_h(u) + tc*(u - u_prev), u - phi2), u - phi1)
class PucciSystem {
public:
    PucciSystem(const DoubleObstacleProblem& P, const UnknownMap& map, double time_coeff,
                const GridFunction* u_prev)
        : P_(P), map_(map), tc_(time_coeff), u_prev_(u_prev), work_(P.grid()) {
        for (int idx : P.grid()->non_exterior_nodes()) work_.set_undefined(idx);
        for (int idx : P.grid()->boundary_nodes()) work_.set(idx, P.boundary().value(idx));
    }

    std::vector<double> residual(std::span<const double> x) {
        fill(x);
        std::vector<double> r(x.size());
        for (std::size_t k = 0; k < map_.nodes.size(); ++k) {
            const int node = map_.nodes[k];
            double q = -P_.op().eval(discrete_hessian(work_, node));
            if (tc_ != 0.0) q += tc_ * (work_.value(node) - u_prev_->value(node));
            const double e2 = work_.value(node) - P_.phi2().value(node);
            const double e1 = work_.value(node) - P_.phi1().value(node);
            r[k] = std::min(std::max(q, e2), e1);
        }
        return r;
    }

    SparseMatrix jacobian(std::span<const double> x) {
        fill(x);
        std::vector<std::tuple<int, int, double>> t;
        const Grid& g = *P_.grid();
        const double h2 = g.h() * g.h();
        for (std::size_t k = 0; k < map_.nodes.size(); ++k) {
            const int node = map_.nodes[k];
            const int row = static_cast<int>(k);
            const SymMatrix m = discrete_hessian(work_, node);
            double q = -P_.op().eval(m);
            if (tc_ != 0.0) q += tc_ * (work_.value(node) - u_prev_->value(node));
            const double e2 = work_.value(node) - P_.phi2().value(node);
            const double e1 = work_.value(node) - P_.phi1().value(node);
            const double inner = std::max(q, e2);
            if (e1 < inner) {
                t.emplace_back(row, row, 1.0); // lower-bound branch
                continue;
            }
            if (e2 >= q) {
                t.emplace_back(row, row, 1.0); // upper-bound branch
                continue;
            }
            const HessianGradient grad = pucci_gradient(P_.op(), m);
            const int i = g.ix(node), j = g.iy(node);
            auto add = [&](int a, int b, double coeff) {
                if (coeff == 0.0) return;
                const int slot = map_.slot[static_cast<std::size_t>(g.index(a, b))];
                if (slot >= 0) t.emplace_back(row, slot, -coeff);
            };
            // d(uxx)/du chain
            add(i - 1, j, grad.da / h2);
            add(i + 1, j, grad.da / h2);
            double center = -2.0 * grad.da / h2;
            if (g.dim() == 2) {
                add(i, j - 1, grad.dc / h2);
                add(i, j + 1, grad.dc / h2);
                center -= 2.0 * grad.dc / h2;
                const double cc = grad.db / (4.0 * h2);
                add(i + 1, j + 1, cc);
                add(i - 1, j - 1, cc);
                add(i + 1, j - 1, -cc);
                add(i - 1, j + 1, -cc);
            }
            t.emplace_back(row, row, -center + tc_);
        }
        return SparseMatrix::from_triplets(static_cast<int>(map_.nodes.size()), std::move(t));
    }

private:
    void fill(std::span<const double> x) {
        for (std::size_t k = 0; k < map_.nodes.size(); ++k) work_.set(map_.nodes[k], x[k]);
    }

    const DoubleObstacleProblem& P_;
    const UnknownMap& map_;
    double tc_;
    const GridFunction* u_prev_;
    GridFunction work_;
};

} // namespace

std::pair<GridFunction, SolveReport> solve_obstacle_system(const DoubleObstacleProblem& P,
                                                           const SolverParams& params,
                                                           double time_coeff,
                                                           const GridFunction* u_prev,
                                                           const GridFunction* warm_start) {
    params.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Grid& g = *P.grid();
    UnknownMap map(g);
    const std::vector<double> lo = restrict_interior(P.phi1(), map);
    const std::vector<double> hi = restrict_interior(P.phi2(), map);

    std::vector<double> warm;
    const std::vector<double>* warm_ptr = nullptr;
    if (warm_start) {
        warm = restrict_interior(*warm_start, map);
        warm_ptr = &warm;
    }

    SolveReport rep;
    std::vector<double> x;
    const OperatorKind kind = P.op().kind();
    if (kind == OperatorKind::laplace || kind == OperatorKind::bellman) {
        std::vector<SymMatrix> mats;
        if (kind == OperatorKind::laplace) {
            mats.push_back(g.dim() == 1 ? SymMatrix::scalar(1.0) : SymMatrix::of2(1.0, 0.0, 1.0));
        } else {
            mats = P.op().bellman_matrices();
        }
        // rescaled members evaluate F(cM)/c, identical stencils by homogeneity
        std::vector<PolicyFamily> families;
        families.reserve(mats.size());
        for (const SymMatrix& a : mats)
            families.push_back(assemble_family(P, a, map, time_coeff, u_prev));
        if (families.size() == 1) {
            LinearSolveResult r =
                projected_sor(families[0].A, families[0].b, lo, hi, params, warm_ptr);
            x = std::move(r.x);
            rep.iterations = r.iterations;
            rep.final_residual = r.residual;
        } else {
            PolicyResult r = policy_iteration(families, lo, hi, params, warm_ptr);
            x = std::move(r.x);
            rep.iterations = r.outer_iterations;
            rep.final_residual = r.residual;
        }
    } else {
        // Pucci: relaxation solve on the scaled Laplacian seeds semismooth
        // Newton on the clipped system. The 2D cross stencil is non-monotone;
        // this path is labeled experimental in reports.
        std::vector<double> seed;
        if (warm_ptr) {
            seed = *warm_ptr;
        } else {
            const double a = 0.5 * (P.op().lambda() + P.op().Lambda());
            const SymMatrix relax =
                g.dim() == 1 ? SymMatrix::scalar(a) : SymMatrix::of2(a, 0.0, a);
            PolicyFamily fam = assemble_family(P, relax, map, time_coeff, u_prev);
            seed = projected_sor(fam.A, fam.b, lo, hi, params).x;
        }
        PucciSystem sys(P, map, time_coeff, u_prev);
        NewtonResult nr = semismooth_newton(
            [&](std::span<const double> v) { return sys.residual(v); },
            [&](std::span<const double> v) { return sys.jacobian(v); }, std::move(seed), params);
        x = std::move(nr.x);
        rep.iterations = nr.newton_iterations;
        rep.final_residual = nr.residual;

        // projection keeps the box constraint exact; re-polish if it moved
        // anything beyond round-off
        for (int round = 0; round < 3; ++round) {
            double moved = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double clipped = std::min(std::max(x[k], lo[k]), hi[k]);
                moved = std::max(moved, std::abs(clipped - x[k]));
                x[k] = clipped;
            }
            if (moved <= 1e-14) break;
            NewtonResult polish = semismooth_newton(
                [&](std::span<const double> v) { return sys.residual(v); },
                [&](std::span<const double> v) { return sys.jacobian(v); }, x, params);
            x = std::move(polish.x);
            rep.iterations += polish.newton_iterations;
            rep.final_residual = polish.residual;
        }
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::min(std::max(x[k], lo[k]), hi[k]);
    }

    GridFunction u = embed_solution(P, map, x);

    const double tau = std::max(10.0 * params.tol_nonlinear, g.h() * g.h());
    int n_lo = 0, n_hi = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] - lo[k] <= tau) ++n_lo;
        if (hi[k] - x[k] <= tau) ++n_hi;
    }
    rep.contact_fraction_lower = static_cast<double>(n_lo) / map.count();
    rep.contact_fraction_upper = static_cast<double>(n_hi) / map.count();
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(u), rep};
}

} // namespace detail

std::pair<GridFunction, SolveReport> solve_elliptic(const DoubleObstacleProblem& P,
                                                    const SolverParams& params) {
    return detail::solve_obstacle_system(P, params, 0.0, nullptr, nullptr);
}

MonotonicityReport monotonicity_probe(const DoubleObstacleProblem& P,
                                      const DoubleObstacleProblem& P_above,
                                      const SolverParams& params) {
    const Grid& g = *P.grid();
    if (P_above.grid()->n() != g.n() || P_above.grid()->dim() != g.dim() ||
        P_above.grid()->kind() != g.kind())
        throw std::invalid_argument("monotonicity_probe: grids differ");
    const double slack = 1e-12;
    for (int idx : g.non_exterior_nodes()) {
        if (P_above.phi1().value(idx) < P.phi1().value(idx) - slack ||
            P_above.phi2().value(idx) < P.phi2().value(idx) - slack)
            throw std::invalid_argument("monotonicity_probe: obstacles not ordered");
    }
    for (int idx : g.boundary_nodes()) {
        if (P_above.boundary().value(idx) < P.boundary().value(idx) - slack)
            throw std::invalid_argument("monotonicity_probe: boundary data not ordered");
    }
    const GridFunction u = solve_elliptic(P, params).first;
    const GridFunction v = solve_elliptic(P_above, params).first;
    MonotonicityReport rep;
    for (int idx : g.non_exterior_nodes())
        rep.max_violation = std::max(rep.max_violation, u.value(idx) - v.value(idx));
    return rep;
}

CovarianceReport rescaling_covariance_probe(const ProblemData& data, GridPtr probe_grid,
                                            double lambda_scale, double A_scale,
                                            const SolverParams& params, double tolerance) {
    if (!(lambda_scale > 0.0 && lambda_scale <= 1.0))
        throw std::invalid_argument("rescaling_covariance_probe: lambda_scale must be in (0, 1]");
    if (!(A_scale > 0.0))
        throw std::invalid_argument("rescaling_covariance_probe: A_scale must be positive");
    if (probe_grid->kind() != DomainKind::box)
        throw std::invalid_argument("rescaling_covariance_probe: box domains only");

    const int n_fine = 2 * (probe_grid->n() - 1) + 1;
    GridPtr fine = Grid::make(probe_grid->dim(), n_fine, DomainKind::box);

    // every probe node must map onto a fine node under x -> lambda*x
    for (int idx : probe_grid->non_exterior_nodes()) {
        const Grid::Point p = probe_grid->coord(idx);
        const int fidx = fine->node_near(lambda_scale * p[0], lambda_scale * p[1]);
        const Grid::Point q = fine->coord(fidx);
        if (std::abs(q[0] - lambda_scale * p[0]) > 1e-12 ||
            std::abs(q[1] - lambda_scale * p[1]) > 1e-12)
            throw std::invalid_argument(
                "rescaling_covariance_probe: lambda_scale is not grid-compatible");
    }

    const DoubleObstacleProblem P_fine = DoubleObstacleProblem::from_data(fine, data);
    const GridFunction u_fine = solve_elliptic(P_fine, params).first;

    GridFunction phi1(probe_grid), phi2(probe_grid), g(probe_grid);
    for (int idx : probe_grid->non_exterior_nodes()) g.set_undefined(idx);
    for (int idx : probe_grid->non_exterior_nodes()) {
        const Grid::Point p = probe_grid->coord(idx);
        phi1.set(idx, data.phi1(lambda_scale * p[0], lambda_scale * p[1]) / A_scale);
        phi2.set(idx, data.phi2(lambda_scale * p[0], lambda_scale * p[1]) / A_scale);
    }
    for (int idx : probe_grid->boundary_nodes()) {
        const Grid::Point p = probe_grid->coord(idx);
        const int fidx = fine->node_near(lambda_scale * p[0], lambda_scale * p[1]);
        g.set(idx, u_fine.value(fidx) / A_scale);
    }
    const DoubleObstacleProblem P_hat(probe_grid, data.F, std::move(phi1), std::move(phi2),
                                      std::move(g));
    const GridFunction v = solve_elliptic(P_hat, params).first;

    CovarianceReport rep;
    rep.tolerance = tolerance;
    for (int idx : probe_grid->non_exterior_nodes()) {
        const Grid::Point p = probe_grid->coord(idx);
        const int fidx = fine->node_near(lambda_scale * p[0], lambda_scale * p[1]);
        rep.max_diff =
            std::max(rep.max_diff, std::abs(v.value(idx) - u_fine.value(fidx) / A_scale));
    }
    rep.pass = rep.max_diff <= tolerance;
    return rep;
}

} // namespace dop
