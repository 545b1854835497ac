#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dop {

enum class DomainKind { box, disc };

enum class NodeClass : unsigned char { interior, boundary, exterior };

/// Uniform Cartesian grid on [-1,1]^d, d in {1,2}, with nodes classified as
/// interior / boundary / exterior. n is required odd so the origin is a node
/// and contact-point probes never need interpolation.
///
/// Box domains have no exterior nodes. Disc domains classify by radius:
/// |x| < 1 - h/2 interior, 1 - h/2 <= |x| <= 1 + h boundary, rest exterior.
/// The boundary band width guarantees every interior node has its full
/// stencil (axis and diagonal neighbours) inside interior-or-boundary.
class Grid {
public:
    using Point = std::array<double, 2>;

    static std::shared_ptr<const Grid> make(int dim, int n, DomainKind kind);

    int dim() const { return dim_; }
    int n() const { return n_; }
    double h() const { return h_; }
    DomainKind kind() const { return kind_; }

    int total_nodes() const { return total_; }
    int interior_count() const { return interior_count_; }
    int boundary_count() const { return boundary_count_; }
    int exterior_count() const { return total_ - interior_count_ - boundary_count_; }

    NodeClass node_class(int idx) const { return cls_[static_cast<std::size_t>(idx)]; }
    bool is_interior(int idx) const { return node_class(idx) == NodeClass::interior; }
    bool is_boundary(int idx) const { return node_class(idx) == NodeClass::boundary; }
    bool is_exterior(int idx) const { return node_class(idx) == NodeClass::exterior; }

    /// Flattened index of node (i) or (i,j).
    int index(int i, int j = 0) const { return j * n_ + i; }
    int ix(int idx) const { return idx % n_; }
    int iy(int idx) const { return idx / n_; }

    Point coord(int idx) const {
        return {-1.0 + ix(idx) * h_, dim_ == 2 ? -1.0 + iy(idx) * h_ : 0.0};
    }

    double distance(int a, int b) const;
    double distance_to_domain_boundary(int idx) const;

    /// Nearest grid node to a point (ties broken toward lower index).
    int node_near(double x, double y = 0.0) const;

    /// Axis neighbours (2 per dimension); in 2D additionally the 4 diagonal
    /// neighbours. Returns -1 for off-lattice positions.
    std::vector<int> stencil_neighbors(int idx) const;

    /// True when idx is interior and the whole second-difference stencil
    /// stays inside non-exterior nodes.
    bool stencil_complete(int idx) const;

    const std::vector<int>& interior_nodes() const { return interior_nodes_; }
    const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
    const std::vector<int>& non_exterior_nodes() const { return non_exterior_nodes_; }

private:
    Grid(int dim, int n, DomainKind kind);

    int dim_;
    int n_;
    double h_;
    DomainKind kind_;
    int total_;
    int interior_count_ = 0;
    int boundary_count_ = 0;
    std::vector<NodeClass> cls_;
    std::vector<int> interior_nodes_;
    std::vector<int> boundary_nodes_;
    std::vector<int> non_exterior_nodes_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Scalar field on a grid. Carries one value per non-exterior node plus a
/// defined-mask so that partial fields (operator residuals, difference
/// quotients) can mark nodes absent without faking values.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(GridPtr grid, double fill = 0.0);

    /// Samples f(x, y) at every non-exterior node. Throws on non-finite values.
    static GridFunction sample(GridPtr grid, const std::function<double(double, double)>& f);

    /// Constant field.
    static GridFunction constant(GridPtr grid, double c);

    const GridPtr& grid() const { return grid_; }

    double value(int idx) const { return values_[static_cast<std::size_t>(idx)]; }
    void set(int idx, double v);
    void set_undefined(int idx);
    bool is_defined(int idx) const { return defined_[static_cast<std::size_t>(idx)] != 0; }

    /// Number of nodes carrying a value.
    int value_count() const;

    /// True when every non-exterior node is defined and finite.
    bool is_complete() const;

    /// Throws std::invalid_argument if any defined value is non-finite.
    void check_finite(const std::string& what) const;

private:
    GridPtr grid_;
    std::vector<double> values_;
    std::vector<char> defined_;
};

/// max |f| over defined non-exterior nodes (0 for empty fields).
double sup_norm(const GridFunction& f);

/// Non-exterior nodes within Euclidean distance r of x0.
std::vector<int> ball_nodes(const Grid& g, Grid::Point x0, double r);

struct ModulusRow {
    double r;
    double omega;
};

/// Sampled modulus of continuity: omega(r) = max |f(x)-f(y)| over defined
/// node pairs with |x-y| <= r. Radii below the 2h resolution floor are
/// rejected. Pairs are fully enumerated in 1D and deterministically
/// subsampled in 2D when the pair count exceeds pair_budget.
std::vector<ModulusRow> modulus_of_continuity(const GridFunction& f,
                                              const std::vector<double>& radii,
                                              std::size_t pair_budget = 4000000,
                                              std::uint64_t seed = 12345);

/// CSV with header x[,y],value; one row per defined non-exterior node in
/// index order, 17 significant digits (lossless round trip).
void write_csv(const GridFunction& f, const std::string& path);
GridFunction read_csv(GridPtr grid, const std::string& path);

/// JSON array-of-records form of the same data.
std::string to_json_records(const GridFunction& f);
GridFunction from_json_records(GridPtr grid, const std::string& json_text);

} // namespace dop
