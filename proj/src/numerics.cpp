#include "dop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "dop/errors.hpp"

namespace dop {

SparseMatrix SparseMatrix::from_triplets(int n,
                                         std::vector<std::tuple<int, int, double>> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    SparseMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
        m.row_ptr_[static_cast<std::size_t>(i)] = static_cast<int>(m.col_.size());
        while (k < triplets.size() && std::get<0>(triplets[k]) == i) {
            const int j = std::get<1>(triplets[k]);
            if (j < 0 || j >= n) throw std::invalid_argument("sparse matrix: column out of range");
            double v = 0.0;
            while (k < triplets.size() && std::get<0>(triplets[k]) == i &&
                   std::get<1>(triplets[k]) == j) {
                v += std::get<2>(triplets[k]);
                ++k;
            }
            if (v != 0.0) {
                m.col_.push_back(j);
                m.val_.push_back(v);
            }
        }
    }
    m.row_ptr_[static_cast<std::size_t>(n)] = static_cast<int>(m.col_.size());
    return m;
}

SparseMatrix SparseMatrix::identity(int n, double scale) {
    std::vector<std::tuple<int, int, double>> t;
    t.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, scale);
    return from_triplets(n, std::move(t));
}

double SparseMatrix::row_dot(int i, std::span<const double> x) const {
    double s = 0.0;
    for (int k = row_ptr_[static_cast<std::size_t>(i)];
         k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
        s += val_[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col_[static_cast<std::size_t>(k)])];
    }
    return s;
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
    std::vector<double> out(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = row_dot(i, x);
    return out;
}

double SparseMatrix::diag(int i) const {
    for (int k = row_ptr_[static_cast<std::size_t>(i)];
         k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
        if (col_[static_cast<std::size_t>(k)] == i) return val_[static_cast<std::size_t>(k)];
    }
    return 0.0;
}

bool SparseMatrix::m_matrix_rows() const {
    for (int i = 0; i < n_; ++i) {
        for (int k = row_ptr_[static_cast<std::size_t>(i)];
             k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
            const double v = val_[static_cast<std::size_t>(k)];
            if (col_[static_cast<std::size_t>(k)] == i) {
                if (v <= 0.0) return false;
            } else if (v > 0.0) {
                return false;
            }
        }
    }
    return true;
}

void SolverParams::validate() const {
    if (!(tol_linear > 0.0) || !(tol_nonlinear > 0.0))
        throw std::invalid_argument("solver params: tolerances must be positive");
    if (!(relaxation_omega > 0.0 && relaxation_omega < 2.0))
        throw std::invalid_argument("solver params: omega must lie in (0, 2)");
    if (max_iter_newton < 1)
        throw std::invalid_argument("solver params: max_iter_newton must be >= 1");
}

double sor_omega_1d(int n) {
    return 2.0 / (1.0 + std::sin(3.141592653589793 / (n - 1)));
}

double vec_sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

namespace {

struct SorCore {
    const SparseMatrix& A;
    std::span<const double> b;
    std::vector<double> diag;

    SorCore(const SparseMatrix& a, std::span<const double> rhs) : A(a), b(rhs) {
        diag.resize(static_cast<std::size_t>(A.size()));
        for (int i = 0; i < A.size(); ++i) {
            diag[static_cast<std::size_t>(i)] = A.diag(i);
            if (diag[static_cast<std::size_t>(i)] == 0.0)
                throw std::invalid_argument("sor: zero diagonal entry at row " +
                                            std::to_string(i));
        }
    }

    void sweep(std::vector<double>& x, double omega, std::span<const double> lo,
               std::span<const double> hi) const {
        const auto rp = A.row_ptr();
        const auto cols = A.cols();
        const auto vals = A.values();
        const bool boxed = !lo.empty();
        for (int i = 0; i < A.size(); ++i) {
            double s = b[static_cast<std::size_t>(i)];
            for (int k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1];
                 ++k) {
                const int j = cols[static_cast<std::size_t>(k)];
                if (j != i) s -= vals[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(j)];
            }
            const double gs = s / diag[static_cast<std::size_t>(i)];
            double xn = x[static_cast<std::size_t>(i)] +
                        omega * (gs - x[static_cast<std::size_t>(i)]);
            if (boxed)
                xn = std::min(std::max(xn, lo[static_cast<std::size_t>(i)]),
                              hi[static_cast<std::size_t>(i)]);
            x[static_cast<std::size_t>(i)] = xn;
        }
    }
};

} // namespace

LinearSolveResult solve_linear(const SparseMatrix& A, std::span<const double> b,
                               const SolverParams& params) {
    params.validate();
    SorCore core(A, b);
    LinearSolveResult res;
    res.x.assign(static_cast<std::size_t>(A.size()), 0.0);
    const double tol = params.tol_linear * (1.0 + vec_sup_norm(b));
    const int cap = params.linear_iter_cap(A.size());
    for (int it = 1; it <= cap; ++it) {
        core.sweep(res.x, params.relaxation_omega, {}, {});
        std::vector<double> r = A.multiply(res.x);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
        res.iterations = it;
        res.residual = vec_sup_norm(r);
        if (res.residual <= tol) return res;
    }
    throw SolveError("solve_linear: SOR did not converge", res.iterations, res.residual);
}

std::vector<double> clipped_residual(const SparseMatrix& A, std::span<const double> x,
                                     std::span<const double> b, std::span<const double> lo,
                                     std::span<const double> hi) {
    std::vector<double> r = A.multiply(x);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double g = r[i] - b[i];
        r[i] = std::max(std::min(g, x[i] - lo[i]), x[i] - hi[i]);
    }
    return r;
}

LinearSolveResult projected_sor(const SparseMatrix& A, std::span<const double> b,
                                std::span<const double> lo, std::span<const double> hi,
                                const SolverParams& params, const std::vector<double>* x0) {
    params.validate();
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (lo[i] > hi[i])
            throw std::invalid_argument("projected_sor: infeasible bounds at index " +
                                        std::to_string(i));
    }
    SorCore core(A, b);
    LinearSolveResult res;
    res.m_matrix_warning = !A.m_matrix_rows();
    if (res.m_matrix_warning)
        std::cerr << "projected_sor: warning: matrix rows are not M-matrix-like; "
                     "convergence is not guaranteed\n";
    if (x0) {
        res.x = *x0;
        for (std::size_t i = 0; i < res.x.size(); ++i)
            res.x[i] = std::min(std::max(res.x[i], lo[i]), hi[i]);
    } else {
        res.x.assign(static_cast<std::size_t>(A.size()), 0.0);
        for (std::size_t i = 0; i < res.x.size(); ++i)
            res.x[i] = std::min(std::max(0.0, lo[i]), hi[i]);
    }
    const int cap = params.linear_iter_cap(A.size());
    for (int it = 1; it <= cap; ++it) {
        core.sweep(res.x, params.relaxation_omega, lo, hi);
        res.iterations = it;
        res.residual = vec_sup_norm(clipped_residual(A, res.x, b, lo, hi));
        if (res.residual <= params.tol_nonlinear) return res;
    }
    throw SolveError("projected_sor: did not converge", res.iterations, res.residual);
}

NewtonResult semismooth_newton(const ResidualFn& residual, const JacobianFn& jacobian,
                               std::vector<double> x0, const SolverParams& params) {
    params.validate();
    NewtonResult out;
    out.x = std::move(x0);
    std::vector<double> r = residual(out.x);
    out.residual = vec_sup_norm(r);
    for (int it = 0; it < params.max_iter_newton; ++it) {
        if (out.residual <= params.tol_nonlinear) return out;
        const SparseMatrix J = jacobian(out.x);

        // inexact inner solve: forcing term keeps early steps cheap
        SolverParams inner = params;
        inner.tol_linear = std::max(params.tol_linear, 1e-2 * out.residual / (1.0 + out.residual));
        std::vector<double> rhs(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
        std::vector<double> dx;
        try {
            dx = solve_linear(J, rhs, inner).x;
        } catch (const SolveError&) {
            // fall back to a stricter attempt before giving up
            inner.tol_linear = params.tol_linear;
            inner.max_iter_linear = 4 * inner.linear_iter_cap(J.size());
            dx = solve_linear(J, rhs, inner).x;
        }

        double alpha = 1.0;
        std::vector<double> x_next(out.x.size());
        std::vector<double> r_next;
        double rn_next = 0.0;
        bool accepted = false;
        const int budget = params.newton_damping ? params.max_halvings : 0;
        for (int halving = 0; halving <= budget; ++halving) {
            for (std::size_t i = 0; i < out.x.size(); ++i) x_next[i] = out.x[i] + alpha * dx[i];
            r_next = residual(x_next);
            rn_next = vec_sup_norm(r_next);
            if (rn_next < out.residual || !params.newton_damping) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw SolveError("semismooth_newton: damping exhausted without residual decrease",
                             out.newton_iterations, out.residual);
        out.x.swap(x_next);
        r.swap(r_next);
        out.residual = rn_next;
        ++out.newton_iterations;
    }
    if (out.residual <= params.tol_nonlinear) return out;
    throw SolveError("semismooth_newton: iteration cap reached", out.newton_iterations,
                     out.residual);
}

namespace {

std::vector<int> argmax_policy(const std::vector<PolicyFamily>& families,
                               std::span<const double> x) {
    const int n = families.front().A.size();
    std::vector<int> policy(static_cast<std::size_t>(n), 0);
    if (families.size() == 1) return policy;
    for (int i = 0; i < n; ++i) {
        double best = families[0].A.row_dot(i, x) - families[0].b[static_cast<std::size_t>(i)];
        for (std::size_t k = 1; k < families.size(); ++k) {
            const double g = families[k].A.row_dot(i, x) - families[k].b[static_cast<std::size_t>(i)];
            if (g > best) {
                best = g;
                policy[static_cast<std::size_t>(i)] = static_cast<int>(k);
            }
        }
    }
    return policy;
}

std::vector<double> policy_residual(const std::vector<PolicyFamily>& families,
                                    std::span<const double> x, std::span<const double> lo,
                                    std::span<const double> hi) {
    const int n = families.front().A.size();
    std::vector<double> r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double g = families[0].A.row_dot(i, x) - families[0].b[static_cast<std::size_t>(i)];
        for (std::size_t k = 1; k < families.size(); ++k)
            g = std::max(g, families[k].A.row_dot(i, x) - families[k].b[static_cast<std::size_t>(i)]);
        r[static_cast<std::size_t>(i)] = std::max(
            std::min(g, x[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)]),
            x[static_cast<std::size_t>(i)] - hi[static_cast<std::size_t>(i)]);
    }
    return r;
}

std::vector<int> active_sets(std::span<const double> x, std::span<const double> lo,
                             std::span<const double> hi) {
    std::vector<int> a(x.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= lo[i]) a[i] = -1;
        else if (x[i] >= hi[i]) a[i] = 1;
    }
    return a;
}

SparseMatrix mix_rows(const std::vector<PolicyFamily>& families, const std::vector<int>& policy) {
    const int n = families.front().A.size();
    std::vector<std::tuple<int, int, double>> t;
    for (int i = 0; i < n; ++i) {
        const SparseMatrix& A = families[static_cast<std::size_t>(policy[static_cast<std::size_t>(i)])].A;
        for (int k = A.row_ptr()[static_cast<std::size_t>(i)];
             k < A.row_ptr()[static_cast<std::size_t>(i) + 1]; ++k) {
            t.emplace_back(i, A.cols()[static_cast<std::size_t>(k)],
                           A.values()[static_cast<std::size_t>(k)]);
        }
    }
    return SparseMatrix::from_triplets(n, std::move(t));
}

} // namespace

PolicyResult policy_iteration(const std::vector<PolicyFamily>& families,
                              std::span<const double> lo, std::span<const double> hi,
                              const SolverParams& params, const std::vector<double>* x0) {
    params.validate();
    if (families.empty())
        throw std::invalid_argument("policy_iteration: needs at least one family");
    const int n = families.front().A.size();
    for (const PolicyFamily& f : families) {
        if (f.A.size() != n || static_cast<int>(f.b.size()) != n)
            throw std::invalid_argument("policy_iteration: inconsistent family dimensions");
    }

    PolicyResult out;
    out.x.assign(static_cast<std::size_t>(n), 0.0);
    if (x0) out.x = *x0;
    for (std::size_t i = 0; i < out.x.size(); ++i)
        out.x[i] = std::min(std::max(out.x[i], lo[i]), hi[i]);

    std::vector<int> policy = argmax_policy(families, out.x);
    std::vector<int> active = active_sets(out.x, lo, hi);
    for (int it = 1; it <= params.max_iter_newton; ++it) {
        const SparseMatrix A = mix_rows(families, policy);
        std::vector<double> b(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            b[static_cast<std::size_t>(i)] =
                families[static_cast<std::size_t>(policy[static_cast<std::size_t>(i)])]
                    .b[static_cast<std::size_t>(i)];
        LinearSolveResult inner = projected_sor(A, b, lo, hi, params, &out.x);
        out.x = std::move(inner.x);
        out.outer_iterations = it;
        out.residual = vec_sup_norm(policy_residual(families, out.x, lo, hi));

        std::vector<int> policy_next = argmax_policy(families, out.x);
        std::vector<int> active_next = active_sets(out.x, lo, hi);
        if (policy_next == policy && active_next == active &&
            out.residual <= params.tol_nonlinear)
            return out;
        policy.swap(policy_next);
        active.swap(active_next);
    }
    if (out.residual <= params.tol_nonlinear) return out;
    throw SolveError("policy_iteration: outer iteration cap reached", out.outer_iterations,
                     out.residual);
}

} // namespace dop
