#include "dop/operators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dop/random.hpp"

namespace dop {

std::array<double, 2> SymMatrix::eigenvalues() const {
    if (dim == 1) return {a11, a11};
    const double mean = 0.5 * (a11 + a22);
    const double dev = std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + a12 * a12);
    return {mean - dev, mean + dev};
}

EllipticOperator::EllipticOperator(OperatorKind kind, double lambda, double Lambda,
                                   std::vector<SymMatrix> matrices)
    : kind_(kind), lambda_(lambda), Lambda_(Lambda), matrices_(std::move(matrices)) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("elliptic operator: lambda must be positive");
    if (!(Lambda >= lambda))
        throw std::invalid_argument("elliptic operator: Lambda must be >= lambda");
    if (kind_ == OperatorKind::bellman) {
        if (matrices_.empty())
            throw std::invalid_argument("bellman operator: needs at least one matrix");
        const int d = matrices_.front().dim;
        for (const SymMatrix& a : matrices_) {
            if (a.dim != d)
                throw std::invalid_argument("bellman operator: mixed matrix dimensions");
            const auto ev = a.eigenvalues();
            if (ev[0] < lambda - 1e-12 || ev[1] > Lambda + 1e-12)
                throw std::invalid_argument(
                    "bellman operator: coefficient eigenvalues outside [lambda, Lambda]");
        }
    }
}

EllipticOperator EllipticOperator::laplace() {
    return EllipticOperator(OperatorKind::laplace, 1.0, 1.0, {});
}

EllipticOperator EllipticOperator::pucci_minus(double lambda, double Lambda) {
    return EllipticOperator(OperatorKind::pucci_minus, lambda, Lambda, {});
}

EllipticOperator EllipticOperator::pucci_plus(double lambda, double Lambda) {
    return EllipticOperator(OperatorKind::pucci_plus, lambda, Lambda, {});
}

EllipticOperator EllipticOperator::bellman(std::vector<SymMatrix> matrices, double lambda,
                                           double Lambda) {
    return EllipticOperator(OperatorKind::bellman, lambda, Lambda, std::move(matrices));
}

double EllipticOperator::eval(const SymMatrix& m_in) const {
    const SymMatrix m = scale_ == 1.0 ? m_in : m_in.scaled(scale_);
    double v;
    switch (kind_) {
        case OperatorKind::laplace: v = m.trace(); break;
        case OperatorKind::pucci_plus:
        case OperatorKind::pucci_minus: {
            const auto ev = m.eigenvalues();
            const double w_pos = kind_ == OperatorKind::pucci_plus ? Lambda_ : lambda_;
            const double w_neg = kind_ == OperatorKind::pucci_plus ? lambda_ : Lambda_;
            auto weigh = [&](double e) { return e >= 0.0 ? w_pos * e : w_neg * e; };
            v = m.dim == 1 ? weigh(ev[0]) : weigh(ev[0]) + weigh(ev[1]);
            break;
        }
        case OperatorKind::bellman: {
            if (matrices_.front().dim != m.dim)
                throw std::invalid_argument("eval_operator: matrix dimension mismatch");
            v = std::numeric_limits<double>::infinity();
            for (const SymMatrix& a : matrices_) {
                const double tr = a.a11 * m.a11 + a.a22 * m.a22 + 2.0 * a.a12 * m.a12;
                v = std::min(v, m.dim == 1 ? a.a11 * m.a11 : tr);
            }
            break;
        }
        default: v = 0.0;
    }
    return scale_ == 1.0 ? v : v / scale_;
}

EllipticOperator rescale_operator(const EllipticOperator& F, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("rescale_operator: c must be positive");
    EllipticOperator out = F;
    out.scale_ *= c;
    return out;
}

SymMatrix discrete_hessian(const GridFunction& u, int node) {
    const Grid& g = *u.grid();
    if (!g.stencil_complete(node))
        throw std::invalid_argument("discrete_hessian: stencil leaves the domain at node " +
                                    std::to_string(node));
    const double h = g.h();
    const double h2 = h * h;
    const int i = g.ix(node), j = g.iy(node);
    auto val = [&](int a, int b) {
        const int idx = g.index(a, b);
        if (!u.is_defined(idx))
            throw std::invalid_argument("discrete_hessian: undefined stencil value at node " +
                                        std::to_string(idx));
        return u.value(idx);
    };
    const double c = val(i, j);
    const double uxx = (val(i - 1, j) - 2.0 * c + val(i + 1, j)) / h2;
    if (g.dim() == 1) return SymMatrix::scalar(uxx);
    const double uyy = (val(i, j - 1) - 2.0 * c + val(i, j + 1)) / h2;
    const double uxy =
        (val(i + 1, j + 1) + val(i - 1, j - 1) - val(i + 1, j - 1) - val(i - 1, j + 1)) /
        (4.0 * h2);
    return SymMatrix::of2(uxx, uxy, uyy);
}

GridFunction apply_operator_field(const EllipticOperator& F, const GridFunction& u) {
    const GridPtr grid = u.grid();
    GridFunction out(grid);
    for (int idx : grid->non_exterior_nodes()) out.set_undefined(idx);
    for (int idx : grid->interior_nodes()) {
        if (!grid->stencil_complete(idx)) continue;
        bool ok = u.is_defined(idx);
        for (int nb : grid->stencil_neighbors(idx)) ok = ok && nb >= 0 && u.is_defined(nb);
        if (!ok) continue;
        out.set(idx, F.eval(discrete_hessian(u, idx)));
    }
    return out;
}

EllipticityReport check_ellipticity(const EllipticOperator& F, int samples, std::uint64_t seed,
                                    int dim) {
    if (samples < 1) throw std::invalid_argument("check_ellipticity: samples must be >= 1");
    Rng rng(seed);
    auto random_sym = [&](double lim) {
        if (dim == 1) return SymMatrix::scalar(rng.uniform(-lim, lim));
        return SymMatrix::of2(rng.uniform(-lim, lim), rng.uniform(-lim, lim),
                              rng.uniform(-lim, lim));
    };
    EllipticityReport rep{std::numeric_limits<double>::infinity(),
                          -std::numeric_limits<double>::infinity(), 0, samples};
    const double slack = 1e-10;
    for (int k = 0; k < samples; ++k) {
        const SymMatrix m = random_sym(2.0);
        SymMatrix n;
        double tr_n = 0.0;
        do {
            const SymMatrix b = random_sym(1.0);
            // b*b of a symmetric b is PSD
            if (dim == 1) {
                n = SymMatrix::scalar(b.a11 * b.a11);
            } else {
                n = SymMatrix::of2(b.a11 * b.a11 + b.a12 * b.a12,
                                   b.a12 * (b.a11 + b.a22),
                                   b.a12 * b.a12 + b.a22 * b.a22);
            }
            tr_n = n.trace();
        } while (tr_n < 1e-8);
        const double df = F.eval(m.plus(n)) - F.eval(m);
        const double ratio = df / tr_n;
        rep.min_ratio = std::min(rep.min_ratio, ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (df < F.lambda() * tr_n - slack || df > F.Lambda() * tr_n + slack) ++rep.violations;
    }
    return rep;
}

} // namespace dop
