#pragma once

#include <functional>
#include <span>
#include <tuple>
#include <vector>

namespace dop {

/// Sentinel used to encode infinite bounds so the single- and double-obstacle
/// paths share one code path.
inline constexpr double kInfiniteBound = 1e300;

/// Square sparse matrix in compressed-row storage. Column indices are
/// strictly increasing within a row and explicit zeros are dropped.
class SparseMatrix {
public:
    SparseMatrix() = default;

    static SparseMatrix from_triplets(int n, std::vector<std::tuple<int, int, double>> triplets);
    static SparseMatrix identity(int n, double scale = 1.0);

    int size() const { return n_; }
    std::span<const int> row_ptr() const { return row_ptr_; }
    std::span<const int> cols() const { return col_; }
    std::span<const double> values() const { return val_; }

    double row_dot(int i, std::span<const double> x) const;
    std::vector<double> multiply(std::span<const double> x) const;

    /// Diagonal entry (0 when absent).
    double diag(int i) const;

    /// True when every row has positive diagonal and nonpositive
    /// off-diagonal entries.
    bool m_matrix_rows() const;

private:
    int n_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> col_;
    std::vector<double> val_;
};

/// Shared knobs for the iterative solvers. max_iter_linear <= 0 selects the
/// default budget of 20 sweeps per unknown.
struct SolverParams {
    double tol_linear = 1e-10;
    double tol_nonlinear = 1e-9;
    int max_iter_linear = 0;
    int max_iter_newton = 100;
    double relaxation_omega = 1.5;
    bool newton_damping = true;
    int max_halvings = 30;

    void validate() const;
    int linear_iter_cap(int unknowns) const {
        return max_iter_linear > 0 ? max_iter_linear : 20 * unknowns;
    }
};

/// Near-optimal SOR relaxation factor for the 1D Dirichlet Laplacian with
/// n nodes per axis; used by fixtures that need fast sweeps.
double sor_omega_1d(int n);

double vec_sup_norm(std::span<const double> v);

struct LinearSolveResult {
    std::vector<double> x;
    int iterations = 0;
    double residual = 0.0;
    bool m_matrix_warning = false;
};

/// SOR sweeps in lexicographic order until ||Ax-b||_sup <= tol_linear*(1+||b||_sup).
/// Throws std::invalid_argument on a zero diagonal and SolveError on
/// non-convergence.
LinearSolveResult solve_linear(const SparseMatrix& A, std::span<const double> b,
                               const SolverParams& params);

/// Complementarity residual max(min(Ax-b, x-lo), x-hi); identically Ax-b when
/// the bounds are infinite sentinels.
std::vector<double> clipped_residual(const SparseMatrix& A, std::span<const double> x,
                                     std::span<const double> b, std::span<const double> lo,
                                     std::span<const double> hi);

/// Projected SOR for the box-constrained complementarity system. Iterates
/// until the clipped residual sup-norm drops below tol_nonlinear. The start
/// vector defaults to clip(0, lo, hi); pass x0 to warm-start.
LinearSolveResult projected_sor(const SparseMatrix& A, std::span<const double> b,
                                std::span<const double> lo, std::span<const double> hi,
                                const SolverParams& params,
                                const std::vector<double>* x0 = nullptr);

struct NewtonResult {
    std::vector<double> x;
    int newton_iterations = 0;
    double residual = 0.0;
};

using ResidualFn = std::function<std::vector<double>(std::span<const double>)>;
using JacobianFn = std::function<SparseMatrix(std::span<const double>)>;

/// Damped semismooth Newton: J(x) dx = -R(x) with step halving until the
/// residual decreases. Inner solves run SOR with a forcing-term tolerance.
/// Throws SolveError when damping is exhausted or the iteration cap is hit.
NewtonResult semismooth_newton(const ResidualFn& residual, const JacobianFn& jacobian,
                               std::vector<double> x0, const SolverParams& params);

struct PolicyFamily {
    SparseMatrix A;
    std::vector<double> b;
};

struct PolicyResult {
    std::vector<double> x;
    int outer_iterations = 0;
    double residual = 0.0;
};

/// Howard iteration for the box-constrained Bellman complementarity system.
/// The families hold the assembled M-matrix forms (-tr(A_k D^2 .)), so the
/// min-type operator of the catalog corresponds to the pointwise max over
/// rows here; each outer step freezes the per-node argmax family and solves
/// the resulting linear complementarity problem by projected SOR. Terminates
/// when policy and active sets are unchanged and the residual is below
/// tolerance.
PolicyResult policy_iteration(const std::vector<PolicyFamily>& families,
                              std::span<const double> lo, std::span<const double> hi,
                              const SolverParams& params,
                              const std::vector<double>* x0 = nullptr);

} // namespace dop
