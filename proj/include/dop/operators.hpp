#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dop/grid.hpp"

namespace dop {

/// Symmetric d x d matrix, d in {1,2}; only the upper triangle is stored so
/// symmetry is exact by construction.
struct SymMatrix {
    int dim = 1;
    double a11 = 0.0;
    double a12 = 0.0; // unused when dim == 1
    double a22 = 0.0;

    static SymMatrix scalar(double m) { return {1, m, 0.0, 0.0}; }
    static SymMatrix of2(double m11, double m12, double m22) { return {2, m11, m12, m22}; }

    double trace() const { return dim == 1 ? a11 : a11 + a22; }

    /// Eigenvalues in ascending order ({m, m} for 1D).
    std::array<double, 2> eigenvalues() const;

    SymMatrix scaled(double c) const { return {dim, c * a11, c * a12, c * a22}; }
    SymMatrix plus(const SymMatrix& o) const {
        return {dim, a11 + o.a11, a12 + o.a12, a22 + o.a22};
    }
};

enum class OperatorKind { laplace, pucci_minus, pucci_plus, bellman };

/// Catalog of fully nonlinear uniformly elliptic operators F(D^2 u):
/// the Laplacian, the Pucci extremal operators, and Bellman minima over a
/// finite family of constant SPD coefficient matrices. All members are
/// positively 1-homogeneous with F(0) = 0.
class EllipticOperator {
public:
    static EllipticOperator laplace();
    static EllipticOperator pucci_minus(double lambda, double Lambda);
    static EllipticOperator pucci_plus(double lambda, double Lambda);

    /// Bellman member F(M) = min_k trace(A_k M). Every A_k must be SPD with
    /// eigenvalues inside [lambda, Lambda]; violations are constructor errors.
    static EllipticOperator bellman(std::vector<SymMatrix> matrices, double lambda,
                                    double Lambda);

    OperatorKind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    double Lambda() const { return Lambda_; }
    const std::vector<SymMatrix>& bellman_matrices() const { return matrices_; }
    double rescale_factor() const { return scale_; }

    /// Pointwise evaluation F(M) (with the rescale transform folded in:
    /// members constructed by rescale_operator evaluate F(cM)/c).
    double eval(const SymMatrix& m) const;

    bool is_linear() const { return kind_ == OperatorKind::laplace; }

private:
    EllipticOperator(OperatorKind kind, double lambda, double Lambda,
                     std::vector<SymMatrix> matrices);

    OperatorKind kind_;
    double lambda_;
    double Lambda_;
    std::vector<SymMatrix> matrices_;
    double scale_ = 1.0;

    friend EllipticOperator rescale_operator(const EllipticOperator& F, double c);
};

/// The transform F_c(M) := F(cM)/c. Catalog members are 1-homogeneous, so the
/// result evaluates identically to F; tests assert that equality.
EllipticOperator rescale_operator(const EllipticOperator& F, double c);

/// Centered second differences at an interior node with a complete stencil;
/// the 2D off-diagonal entry uses the four-point cross difference.
SymMatrix discrete_hessian(const GridFunction& u, int node);

/// Pointwise F(D^2 u) at every stencil-complete interior node; all other
/// nodes are marked absent in the result.
GridFunction apply_operator_field(const EllipticOperator& F, const GridFunction& u);

struct EllipticityReport {
    double min_ratio;
    double max_ratio;
    int violations;
    int samples;
};

/// Samples random (M, N >= 0) pairs and checks the trace-form ellipticity
/// bounds lambda*tr(N) <= F(M+N) - F(M) <= Lambda*tr(N) with 1e-10 slack.
EllipticityReport check_ellipticity(const EllipticOperator& F, int samples, std::uint64_t seed,
                                    int dim = 2);

} // namespace dop
