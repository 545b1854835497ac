#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// this header is test-only and deliberately independent of the solver paths
// it checks.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dop/numerics.hpp"
#include "dop/vi_solver.hpp"

namespace fixtures {

// ---------------------------------------------------------------------------
// Fixture A: 1D Laplacian, lower obstacle 1/2 - x^2, upper obstacle 10,
// zero boundary data. Closed form by C^1 tangency matching: the solution
// coincides with the parabola on [-x*, x*] and with the tangent lines through
// (+-1, 0) outside, where the tangency point solves
//   x*^2 - 2 x* + 1/2 = 0  =>  x* = 1 - sqrt(2)/2.
// ---------------------------------------------------------------------------

inline double pa_xstar() { return 1.0 - std::sqrt(2.0) / 2.0; }

inline double pa_phi1(double x) { return 0.5 - x * x; }

inline double pa_exact(double x) {
    const double xs = pa_xstar();
    const double ax = std::abs(x);
    if (ax <= xs) return 0.5 - x * x;
    // tangent line through (1, 0) with slope -2 x*
    return 2.0 * xs * (1.0 - ax);
}

inline dop::ProblemData pa_data() {
    dop::ProblemData d;
    d.F = dop::EllipticOperator::laplace();
    d.phi1 = [](double x, double) { return pa_phi1(x); };
    d.phi2 = [](double, double) { return 10.0; };
    d.g = [](double, double) { return 0.0; };
    return d;
}

// Fixture B: constraints never active; the zero function solves exactly.
inline dop::ProblemData pb_data() {
    dop::ProblemData d;
    d.F = dop::EllipticOperator::laplace();
    d.phi1 = [](double, double) { return -1.0; };
    d.phi2 = [](double, double) { return 1.0; };
    d.g = [](double, double) { return 0.0; };
    return d;
}

// Fixture C: both obstacles active (lower near x = -1/2, upper near x = +1/2),
// separation phi2 - phi1 = 16 x^2 + 3.2 > 0.
inline double pc_phi1(double x) { return 0.4 - 8.0 * (x + 0.5) * (x + 0.5); }
inline double pc_phi2(double x) { return -0.4 + 8.0 * (x - 0.5) * (x - 0.5); }

inline dop::ProblemData pc_data() {
    dop::ProblemData d;
    d.F = dop::EllipticOperator::laplace();
    d.phi1 = [](double x, double) { return pc_phi1(x); };
    d.phi2 = [](double x, double) { return pc_phi2(x); };
    d.g = [](double, double) { return 0.0; };
    return d;
}

// Solver parameters tuned for the 1D fixtures: near-optimal SOR relaxation
// and a sweep budget that covers the slow low-frequency modes.
inline dop::SolverParams fast_params_1d(int n) {
    dop::SolverParams p;
    p.relaxation_omega = dop::sor_omega_1d(n);
    p.max_iter_linear = 200 * n;
    return p;
}

// ---------------------------------------------------------------------------
// Dense Gaussian elimination with partial pivoting; oracle for the sparse
// iterative solvers on small systems.
// ---------------------------------------------------------------------------

inline std::vector<double> dense_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
        if (std::abs(a[piv][k]) < 1e-300) throw std::runtime_error("dense_solve: singular");
        std::swap(a[k], a[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i][k] / a[k][k];
            for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a[ii][j] * x[j];
        x[ii] = s / a[ii][ii];
    }
    return x;
}

inline std::vector<std::vector<double>> to_dense(const dop::SparseMatrix& A) {
    std::vector<std::vector<double>> d(static_cast<std::size_t>(A.size()),
                                       std::vector<double>(static_cast<std::size_t>(A.size()), 0.0));
    for (int i = 0; i < A.size(); ++i) {
        for (int k = A.row_ptr()[static_cast<std::size_t>(i)];
             k < A.row_ptr()[static_cast<std::size_t>(i) + 1]; ++k)
            d[static_cast<std::size_t>(i)][static_cast<std::size_t>(A.cols()[static_cast<std::size_t>(k)])] =
                A.values()[static_cast<std::size_t>(k)];
    }
    return d;
}

// 1D Dirichlet Laplacian in M-matrix orientation (diag 2/h^2, off -1/h^2)
// over the interior of an n-node grid on [-1, 1].
inline dop::SparseMatrix laplacian_1d(int n, double scale = 1.0) {
    const double h = 2.0 / (n - 1);
    const int m = n - 2;
    std::vector<std::tuple<int, int, double>> t;
    for (int i = 0; i < m; ++i) {
        t.emplace_back(i, i, scale * 2.0 / (h * h));
        if (i > 0) t.emplace_back(i, i - 1, -scale / (h * h));
        if (i < m - 1) t.emplace_back(i, i + 1, -scale / (h * h));
    }
    return dop::SparseMatrix::from_triplets(m, std::move(t));
}

inline double sup_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace fixtures
