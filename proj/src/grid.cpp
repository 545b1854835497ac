#include "dop/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dop/errors.hpp"
#include "dop/random.hpp"
#include "json.hpp"

namespace dop {

Grid::Grid(int dim, int n, DomainKind kind)
    : dim_(dim)
    , n_(n)
    , h_(2.0 / (n - 1))
    , kind_(kind)
    , total_(dim == 1 ? n : n * n) {
    cls_.resize(static_cast<std::size_t>(total_));
    const double r_in = 1.0 - h_ / 2.0;
    const double r_out = 1.0 + h_;
    for (int idx = 0; idx < total_; ++idx) {
        const Point p = coord(idx);
        NodeClass c;
        if (kind_ == DomainKind::box) {
            const int i = ix(idx), j = iy(idx);
            const bool edge = i == 0 || i == n_ - 1 || (dim_ == 2 && (j == 0 || j == n_ - 1));
            c = edge ? NodeClass::boundary : NodeClass::interior;
        } else {
            const double rho = std::sqrt(p[0] * p[0] + p[1] * p[1]);
            if (rho < r_in)
                c = NodeClass::interior;
            else if (rho <= r_out)
                c = NodeClass::boundary;
            else
                c = NodeClass::exterior;
        }
        cls_[static_cast<std::size_t>(idx)] = c;
        if (c == NodeClass::interior) {
            ++interior_count_;
            interior_nodes_.push_back(idx);
        } else if (c == NodeClass::boundary) {
            ++boundary_count_;
            boundary_nodes_.push_back(idx);
        }
        if (c != NodeClass::exterior) non_exterior_nodes_.push_back(idx);
    }
}

std::shared_ptr<const Grid> Grid::make(int dim, int n, DomainKind kind) {
    if (dim != 1 && dim != 2)
        throw std::invalid_argument("grid: dim must be 1 or 2, got " + std::to_string(dim));
    if (n < 5) throw std::invalid_argument("grid: n must be >= 5, got " + std::to_string(n));
    if (n % 2 == 0)
        throw std::invalid_argument("grid: n must be odd so the origin is a node, got " +
                                    std::to_string(n));
    return std::shared_ptr<const Grid>(new Grid(dim, n, kind));
}

double Grid::distance(int a, int b) const {
    const Point pa = coord(a), pb = coord(b);
    const double dx = pa[0] - pb[0], dy = pa[1] - pb[1];
    return std::sqrt(dx * dx + dy * dy);
}

double Grid::distance_to_domain_boundary(int idx) const {
    const Point p = coord(idx);
    if (kind_ == DomainKind::box) {
        const double m = dim_ == 2 ? std::max(std::abs(p[0]), std::abs(p[1])) : std::abs(p[0]);
        return 1.0 - m;
    }
    return 1.0 - std::sqrt(p[0] * p[0] + p[1] * p[1]);
}

int Grid::node_near(double x, double y) const {
    auto snap = [&](double v) {
        int i = static_cast<int>(std::lround((v + 1.0) / h_));
        return std::clamp(i, 0, n_ - 1);
    };
    return index(snap(x), dim_ == 2 ? snap(y) : 0);
}

std::vector<int> Grid::stencil_neighbors(int idx) const {
    std::vector<int> out;
    const int i = ix(idx), j = iy(idx);
    auto push = [&](int a, int b) {
        if (a < 0 || a >= n_ || b < 0 || b >= n_) {
            out.push_back(-1);
        } else {
            out.push_back(index(a, b));
        }
    };
    push(i - 1, j);
    push(i + 1, j);
    if (dim_ == 2) {
        push(i, j - 1);
        push(i, j + 1);
        push(i - 1, j - 1);
        push(i + 1, j - 1);
        push(i - 1, j + 1);
        push(i + 1, j + 1);
    }
    return out;
}

bool Grid::stencil_complete(int idx) const {
    if (!is_interior(idx)) return false;
    for (int nb : stencil_neighbors(idx)) {
        if (nb < 0 || is_exterior(nb)) return false;
    }
    return true;
}

GridFunction::GridFunction(GridPtr grid, double fill) : grid_(std::move(grid)) {
    values_.assign(static_cast<std::size_t>(grid_->total_nodes()), fill);
    defined_.assign(static_cast<std::size_t>(grid_->total_nodes()), 0);
    for (int idx : grid_->non_exterior_nodes()) defined_[static_cast<std::size_t>(idx)] = 1;
}

GridFunction GridFunction::sample(GridPtr grid, const std::function<double(double, double)>& f) {
    GridFunction out(grid);
    for (int idx : grid->non_exterior_nodes()) {
        const Grid::Point p = grid->coord(idx);
        out.values_[static_cast<std::size_t>(idx)] = f(p[0], p[1]);
    }
    out.check_finite("sampled grid function");
    return out;
}

GridFunction GridFunction::constant(GridPtr grid, double c) {
    return GridFunction(std::move(grid), c);
}

void GridFunction::set(int idx, double v) {
    values_[static_cast<std::size_t>(idx)] = v;
    defined_[static_cast<std::size_t>(idx)] = 1;
}

void GridFunction::set_undefined(int idx) {
    defined_[static_cast<std::size_t>(idx)] = 0;
    values_[static_cast<std::size_t>(idx)] = 0.0;
}

int GridFunction::value_count() const {
    int c = 0;
    for (int idx : grid_->non_exterior_nodes())
        if (is_defined(idx)) ++c;
    return c;
}

bool GridFunction::is_complete() const {
    for (int idx : grid_->non_exterior_nodes())
        if (!is_defined(idx) || !std::isfinite(value(idx))) return false;
    return true;
}

void GridFunction::check_finite(const std::string& what) const {
    for (int idx : grid_->non_exterior_nodes()) {
        if (is_defined(idx) && !std::isfinite(value(idx)))
            throw std::invalid_argument(what + ": non-finite value at node " +
                                        std::to_string(idx));
    }
}

double sup_norm(const GridFunction& f) {
    double m = 0.0;
    for (int idx : f.grid()->non_exterior_nodes()) {
        if (f.is_defined(idx)) m = std::max(m, std::abs(f.value(idx)));
    }
    return m;
}

std::vector<int> ball_nodes(const Grid& g, Grid::Point x0, double r) {
    if (r <= 0.0) throw std::invalid_argument("ball_nodes: r must be positive");
    std::vector<int> out;
    // relative slack keeps nodes at distance exactly r inside the ball when
    // the lattice spacing is not representable in binary
    const double r2 = r * r * (1.0 + 1e-12);
    for (int idx : g.non_exterior_nodes()) {
        const Grid::Point p = g.coord(idx);
        const double dx = p[0] - x0[0], dy = p[1] - x0[1];
        if (dx * dx + dy * dy <= r2) out.push_back(idx);
    }
    return out;
}

std::vector<ModulusRow> modulus_of_continuity(const GridFunction& f,
                                              const std::vector<double>& radii,
                                              std::size_t pair_budget,
                                              std::uint64_t seed) {
    const Grid& g = *f.grid();
    for (double r : radii) {
        if (!(r >= 2.0 * g.h()))
            throw std::invalid_argument("modulus_of_continuity: radius " + std::to_string(r) +
                                        " below resolution floor 2h");
    }
    std::vector<int> nodes;
    for (int idx : g.non_exterior_nodes())
        if (f.is_defined(idx)) nodes.push_back(idx);

    // (distance, |df|) pairs, sorted by distance, then prefix max.
    std::vector<std::pair<double, double>> pairs;
    const std::size_t m = nodes.size();
    const std::size_t full = m * (m - 1) / 2;
    if (g.dim() == 1 || full <= pair_budget) {
        pairs.reserve(full);
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = a + 1; b < m; ++b) {
                pairs.emplace_back(g.distance(nodes[a], nodes[b]),
                                   std::abs(f.value(nodes[a]) - f.value(nodes[b])));
            }
        }
    } else {
        Rng rng(seed);
        pairs.reserve(pair_budget);
        for (std::size_t k = 0; k < pair_budget; ++k) {
            const int a = nodes[rng.index(m)];
            const int b = nodes[rng.index(m)];
            if (a == b) continue;
            pairs.emplace_back(g.distance(a, b), std::abs(f.value(a) - f.value(b)));
        }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<double> radii_sorted = radii;
    std::sort(radii_sorted.begin(), radii_sorted.end());

    std::vector<ModulusRow> rows;
    rows.reserve(radii.size());
    double run_max = 0.0;
    std::size_t pos = 0;
    const double slack = 1e-12;
    for (double r : radii_sorted) {
        while (pos < pairs.size() && pairs[pos].first <= r + slack) {
            run_max = std::max(run_max, pairs[pos].second);
            ++pos;
        }
        rows.push_back({r, run_max});
    }
    return rows;
}

namespace {

std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_csv(const GridFunction& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    const Grid& g = *f.grid();
    out << (g.dim() == 2 ? "x,y,value\n" : "x,value\n");
    for (int idx : g.non_exterior_nodes()) {
        if (!f.is_defined(idx)) continue;
        const Grid::Point p = g.coord(idx);
        out << format17(p[0]);
        if (g.dim() == 2) out << ',' << format17(p[1]);
        out << ',' << format17(f.value(idx)) << '\n';
    }
}

GridFunction read_csv(GridPtr grid, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);
    const std::string want = grid->dim() == 2 ? "x,y,value" : "x,value";
    if (line != want)
        throw std::runtime_error("read_csv: unexpected header '" + line + "' in " + path);

    GridFunction out(grid);
    for (int idx : grid->non_exterior_nodes()) out.set_undefined(idx);

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        double vals[3] = {0, 0, 0};
        int k = 0;
        while (std::getline(ss, cell, ',') && k < 3) vals[k++] = std::stod(cell);
        const int expected = grid->dim() == 2 ? 3 : 2;
        if (k != expected) throw std::runtime_error("read_csv: malformed row '" + line + "'");
        const double x = vals[0];
        const double y = grid->dim() == 2 ? vals[1] : 0.0;
        const int idx = grid->node_near(x, y);
        const Grid::Point p = grid->coord(idx);
        if (std::abs(p[0] - x) > 1e-12 || std::abs(p[1] - y) > 1e-12)
            throw std::runtime_error("read_csv: row coordinates not on grid: '" + line + "'");
        out.set(idx, vals[expected - 1]);
    }
    return out;
}

std::string to_json_records(const GridFunction& f) {
    nlohmann::json arr = nlohmann::json::array();
    const Grid& g = *f.grid();
    for (int idx : g.non_exterior_nodes()) {
        if (!f.is_defined(idx)) continue;
        const Grid::Point p = g.coord(idx);
        nlohmann::json rec;
        rec["x"] = p[0];
        if (g.dim() == 2) rec["y"] = p[1];
        rec["value"] = f.value(idx);
        arr.push_back(std::move(rec));
    }
    return arr.dump();
}

GridFunction from_json_records(GridPtr grid, const std::string& json_text) {
    nlohmann::json arr = nlohmann::json::parse(json_text);
    GridFunction out(grid);
    for (int idx : grid->non_exterior_nodes()) out.set_undefined(idx);
    for (const auto& rec : arr) {
        const double x = rec.at("x").get<double>();
        const double y = grid->dim() == 2 ? rec.at("y").get<double>() : 0.0;
        const int idx = grid->node_near(x, y);
        out.set(idx, rec.at("value").get<double>());
    }
    return out;
}

} // namespace dop
