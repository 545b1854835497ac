#include "dop/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>

#include "dop/random.hpp"

namespace dop {

double default_contact_tau(const Grid& g, const SolverParams& params) {
    return std::max(10.0 * params.tol_nonlinear, g.h() * g.h());
}

ContactSets contact_sets(const GridFunction& u, const DoubleObstacleProblem& P, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("contact_sets: tau must be positive");
    if (tau >= P.eps0() / 2.0)
        throw std::invalid_argument(
            "contact_sets: tau >= eps0/2, lower and upper sets would overlap by construction");
    const Grid& g = *P.grid();
    ContactSets cs;
    cs.tau = tau;
    std::vector<char> in_e1(static_cast<std::size_t>(g.total_nodes()), 0);
    std::vector<char> in_e2(static_cast<std::size_t>(g.total_nodes()), 0);
    for (int idx : g.interior_nodes()) {
        if (u.value(idx) - P.phi1().value(idx) <= tau) {
            cs.E1.push_back(idx);
            in_e1[static_cast<std::size_t>(idx)] = 1;
        } else if (P.phi2().value(idx) - u.value(idx) <= tau) {
            cs.E2.push_back(idx);
            in_e2[static_cast<std::size_t>(idx)] = 1;
        } else {
            cs.A.push_back(idx);
        }
    }
    auto axis_neighbors = [&](int idx) {
        std::vector<int> nb;
        const int i = g.ix(idx), j = g.iy(idx);
        if (i > 0) nb.push_back(g.index(i - 1, j));
        if (i < g.n() - 1) nb.push_back(g.index(i + 1, j));
        if (g.dim() == 2) {
            if (j > 0) nb.push_back(g.index(i, j - 1));
            if (j < g.n() - 1) nb.push_back(g.index(i, j + 1));
        }
        return nb;
    };
    for (int idx : cs.A) {
        bool near1 = false, near2 = false;
        for (int nb : axis_neighbors(idx)) {
            near1 = near1 || in_e1[static_cast<std::size_t>(nb)];
            near2 = near2 || in_e2[static_cast<std::size_t>(nb)];
        }
        if (near1) cs.Gamma1.push_back(idx);
        if (near2) cs.Gamma2.push_back(idx);
    }
    return cs;
}

double separation_distance(const ContactSets& cs, const Grid& g) {
    if (cs.E1.empty() || cs.E2.empty()) return std::numeric_limits<double>::infinity();
    double d = std::numeric_limits<double>::infinity();
    for (int a : cs.E1)
        for (int b : cs.E2) d = std::min(d, g.distance(a, b));
    return d;
}

std::vector<std::vector<int>> grid_components(const std::vector<int>& nodes, const Grid& g) {
    std::set<int> pending(nodes.begin(), nodes.end());
    std::vector<std::vector<int>> comps;
    while (!pending.empty()) {
        std::vector<int> comp;
        std::queue<int> q;
        const int seed = *pending.begin();
        pending.erase(pending.begin());
        q.push(seed);
        while (!q.empty()) {
            const int idx = q.front();
            q.pop();
            comp.push_back(idx);
            const int i = g.ix(idx), j = g.iy(idx);
            std::vector<std::pair<int, int>> cand = {{i - 1, j}, {i + 1, j}};
            if (g.dim() == 2) {
                cand.push_back({i, j - 1});
                cand.push_back({i, j + 1});
            }
            for (auto [a, b] : cand) {
                if (a < 0 || a >= g.n() || b < 0 || b >= g.n()) continue;
                auto it = pending.find(g.index(a, b));
                if (it != pending.end()) {
                    const int c = *it;
                    pending.erase(it);
                    q.push(c);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

namespace {

/// Outside ring of a component: nodes not in the set but axis-adjacent to it.
std::vector<int> component_ring(const std::vector<int>& comp, const Grid& g) {
    std::set<int> in(comp.begin(), comp.end());
    std::set<int> ring;
    for (int idx : comp) {
        const int i = g.ix(idx), j = g.iy(idx);
        std::vector<std::pair<int, int>> cand = {{i - 1, j}, {i + 1, j}};
        if (g.dim() == 2) {
            cand.push_back({i, j - 1});
            cand.push_back({i, j + 1});
        }
        for (auto [a, b] : cand) {
            if (a < 0 || a >= g.n() || b < 0 || b >= g.n()) continue;
            const int c = g.index(a, b);
            if (!in.count(c)) ring.insert(c);
        }
    }
    return {ring.begin(), ring.end()};
}

} // namespace

std::vector<int> deepest_probes(const std::vector<int>& contact_set, const Grid& g) {
    std::vector<int> probes;
    for (const auto& comp : grid_components(contact_set, g)) {
        const std::vector<int> ring = component_ring(comp, g);
        int best = comp.front();
        double best_d = -1.0;
        for (int idx : comp) {
            double d = std::numeric_limits<double>::infinity();
            for (int r : ring) d = std::min(d, g.distance(idx, r));
            if (ring.empty()) d = 0.0;
            if (d > best_d + 1e-15) {
                best_d = d;
                best = idx;
            }
        }
        probes.push_back(best);
    }
    return probes;
}

std::vector<int> edge_probes(const std::vector<int>& contact_set, const Grid& g) {
    std::vector<int> probes;
    for (const auto& comp : grid_components(contact_set, g)) {
        std::set<int> in(comp.begin(), comp.end());
        for (int idx : comp) {
            const int i = g.ix(idx), j = g.iy(idx);
            std::vector<std::pair<int, int>> cand = {{i - 1, j}, {i + 1, j}};
            if (g.dim() == 2) {
                cand.push_back({i, j - 1});
                cand.push_back({i, j + 1});
            }
            bool edge = false;
            for (auto [a, b] : cand) {
                if (a < 0 || a >= g.n() || b < 0 || b >= g.n()) continue;
                const int c = g.index(a, b);
                if (!in.count(c) && g.is_interior(c)) edge = true;
            }
            if (edge) probes.push_back(idx);
        }
    }
    std::sort(probes.begin(), probes.end());
    return probes;
}

std::vector<double> dyadic_radii(double h, double r_max) {
    std::vector<double> out;
    for (double r = 4.0 * h; r <= r_max * (1.0 + 1e-12); r *= 2.0) out.push_back(r);
    return out;
}

namespace {

void fit_power_law(GrowthProfile& p, double floor) {
    std::vector<double> lr, ls;
    for (const GrowthRow& row : p.rows) {
        if (row.sup > floor) {
            lr.push_back(std::log(row.r));
            ls.push_back(std::log(row.sup));
        }
    }
    if (lr.size() < 4) {
        p.fit_defined = false;
        return;
    }
    const std::size_t m = lr.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sx += lr[i];
        sy += ls[i];
        sxx += lr[i] * lr[i];
        sxy += lr[i] * ls[i];
    }
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) {
        p.fit_defined = false;
        return;
    }
    p.beta = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - p.beta * sx) / m;
    p.C = std::exp(intercept);
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / m;
    for (std::size_t i = 0; i < m; ++i) {
        const double pred = intercept + p.beta * lr[i];
        ss_res += (ls[i] - pred) * (ls[i] - pred);
        ss_tot += (ls[i] - mean_y) * (ls[i] - mean_y);
    }
    p.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    p.fit_defined = true;
}

} // namespace

GrowthProfile growth_profile(const GridFunction& u, const GridFunction& phi, int x0,
                             const std::vector<double>& radii, double tau) {
    const Grid& g = *u.grid();
    if (u.value(x0) - phi.value(x0) > tau)
        throw std::invalid_argument("growth_profile: anchor is not a contact node");
    if (radii.empty()) throw std::invalid_argument("growth_profile: empty radii window");
    const double h = g.h();
    const double bdist = g.distance_to_domain_boundary(x0);
    std::vector<double> rs = radii;
    std::sort(rs.begin(), rs.end());
    for (double r : rs) {
        if (r < 4.0 * h - 1e-12)
            throw std::invalid_argument("growth_profile: radius below 4h floor");
        if (r > bdist + 1e-12)
            throw std::invalid_argument("growth_profile: radius reaches the domain boundary");
    }
    GrowthProfile p;
    p.anchor_node = x0;
    const Grid::Point c = g.coord(x0);
    for (double r : rs) {
        double s = 0.0;
        for (int idx : ball_nodes(g, c, r)) {
            if (u.is_defined(idx) && phi.is_defined(idx))
                s = std::max(s, u.value(idx) - phi.value(idx));
        }
        p.rows.push_back({r, std::max(s, 0.0)});
    }
    fit_power_law(p, 10.0 * tau);
    return p;
}

GrowthProfile parabolic_growth_profile(const Trajectory& traj, int x0, double t0,
                                       const std::vector<double>& radii, double tau) {
    if (traj.slices.size() < 2)
        throw std::invalid_argument("parabolic_growth_profile: trajectory too short");
    const Grid& g = *traj.slices.front().grid();
    std::vector<double> rs = radii;
    std::sort(rs.begin(), rs.end());
    const double r_max = rs.back();
    const double t_first = traj.times.front();
    const double t_last = traj.times.back();
    if (t0 - r_max * r_max < t_first - 1e-12 || t0 + r_max * r_max > t_last + 1e-12)
        throw std::invalid_argument("parabolic_growth_profile: insufficient time margin");
    double dt_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < traj.times.size(); ++k)
        dt_min = std::min(dt_min, traj.times[k] - traj.times[k - 1]);
    for (double r : rs) {
        if (r < 4.0 * g.h() - 1e-12)
            throw std::invalid_argument("parabolic_growth_profile: radius below 4h floor");
        if (r * r < 2.0 * dt_min - 1e-12)
            throw std::invalid_argument("parabolic_growth_profile: r^2 below 2 dt floor");
    }

    // snap the anchor time to the nearest slice
    std::size_t k0 = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double d = std::abs(traj.times[k] - t0);
        if (d < best) {
            best = d;
            k0 = k;
        }
    }
    const double center_value = traj.slices[k0].value(x0);

    GrowthProfile p;
    p.anchor_node = x0;
    p.anchor_t = traj.times[k0];
    const Grid::Point c = g.coord(x0);
    for (double r : rs) {
        const double r2 = r * r;
        double s = 0.0;
        const std::vector<int> ball = ball_nodes(g, c, r);
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            if (traj.times[k] < p.anchor_t - r2 - 1e-12 ||
                traj.times[k] > p.anchor_t + r2 + 1e-12)
                continue;
            const GridFunction& slice = traj.slices[k];
            for (int idx : ball) {
                if (slice.is_defined(idx))
                    s = std::max(s, std::abs(slice.value(idx) - center_value));
            }
        }
        p.rows.push_back({r, s});
    }
    fit_power_law(p, std::max(10.0 * tau, 1e-14));
    return p;
}

namespace {

std::vector<int> delta_interior_nodes(const GridFunction& f, double delta) {
    std::vector<int> nodes;
    const Grid& g = *f.grid();
    for (int idx : g.non_exterior_nodes()) {
        if (f.is_defined(idx) && g.distance_to_domain_boundary(idx) > delta)
            nodes.push_back(idx);
    }
    return nodes;
}

} // namespace

double holder_seminorm(const GridFunction& f, double alpha, double delta,
                       std::size_t pair_budget, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("holder_seminorm: alpha must lie in (0, 1]");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("holder_seminorm: delta must lie in (0, 1)");
    if (pair_budget < 1000)
        throw std::invalid_argument("holder_seminorm: pair budget must be >= 1000");
    const Grid& g = *f.grid();
    const std::vector<int> nodes = delta_interior_nodes(f, delta);
    const double min_dist = 2.0 * g.h() - 1e-12;
    const std::size_t m = nodes.size();
    double best = -1.0;
    auto consider = [&](int a, int b) {
        const double d = g.distance(a, b);
        if (d < min_dist) return;
        best = std::max(best, std::abs(f.value(a) - f.value(b)) / std::pow(d, alpha));
    };
    const std::size_t full = m * (m - 1) / 2;
    if (g.dim() == 1 || full <= pair_budget) {
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b) consider(nodes[a], nodes[b]);
    } else {
        Rng rng(seed);
        for (std::size_t k = 0; k < pair_budget; ++k) {
            const int a = nodes[rng.index(m)];
            const int b = nodes[rng.index(m)];
            if (a != b) consider(a, b);
        }
    }
    if (best < 0.0) throw std::invalid_argument("holder_seminorm: no admissible node pairs");
    return best;
}

double gradient_holder_seminorm(const GridFunction& u, double alpha, double delta,
                                std::size_t pair_budget, std::uint64_t seed) {
    const GridPtr grid = u.grid();
    const Grid& g = *grid;
    const double two_h = 2.0 * g.h();
    double best = -1.0;
    const int dirs = g.dim();
    for (int dir = 0; dir < dirs; ++dir) {
        GridFunction q(grid);
        for (int idx : g.non_exterior_nodes()) q.set_undefined(idx);
        for (int idx : g.interior_nodes()) {
            const int i = g.ix(idx), j = g.iy(idx);
            const int ip = dir == 0 ? g.index(i + 1, j) : g.index(i, j + 1);
            const int im = dir == 0 ? g.index(i - 1, j) : g.index(i, j - 1);
            if (u.is_defined(ip) && u.is_defined(im))
                q.set(idx, (u.value(ip) - u.value(im)) / two_h);
        }
        best = std::max(best, holder_seminorm(q, alpha, delta, pair_budget, seed));
    }
    return best;
}

std::vector<WeakLepsRow> weak_Leps_check(const GridFunction& w, const EllipticOperator& F,
                                         int x0, double r, const std::vector<double>& N_list,
                                         double eps, double C, double super_tol) {
    const Grid& g = *w.grid();
    const Grid::Point c = g.coord(x0);
    const std::vector<int> region = ball_nodes(g, c, r);
    for (int idx : region) {
        if (w.is_defined(idx) && w.value(idx) < -1e-12)
            throw std::invalid_argument("weak_Leps_check: w negative inside the probe ball");
    }
    const GridFunction field = apply_operator_field(F, w);
    for (int idx : region) {
        if (field.is_defined(idx) && field.value(idx) > super_tol)
            throw std::invalid_argument(
                "weak_Leps_check: supersolution inequality violated inside the probe ball");
    }
    const double hd = g.dim() == 1 ? g.h() : g.h() * g.h();
    const double rd = g.dim() == 1 ? r : r * r;
    const std::vector<int> half = ball_nodes(g, c, r / 2.0);
    std::vector<WeakLepsRow> rows;
    for (double N : N_list) {
        if (!(N > 0.0)) throw std::invalid_argument("weak_Leps_check: N values must be positive");
        int count = 0;
        for (int idx : half)
            if (w.is_defined(idx) && w.value(idx) > N) ++count;
        WeakLepsRow row;
        row.N = N;
        row.measured = count * hd;
        row.bound = C * w.value(x0) * rd / std::pow(N, eps);
        row.pass = row.measured <= row.bound + 1e-12;
        rows.push_back(row);
    }
    return rows;
}

std::vector<WeakLepsRow> weak_Leps_check_parabolic(const Trajectory& traj, int x0,
                                                   double t_anchor, double R, double t_lo,
                                                   double t0, const std::vector<double>& N_list,
                                                   double eps, double C) {
    const Grid& g = *traj.slices.front().grid();
    const Grid::Point c = g.coord(x0);
    const std::vector<int> ball = ball_nodes(g, c, R);
    const double hd = g.dim() == 1 ? g.h() : g.h() * g.h();

    std::size_t ka = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double d = std::abs(traj.times[k] - t_anchor);
        if (d < best) {
            best = d;
            ka = k;
        }
    }
    const double anchor_value = traj.slices[ka].value(x0);

    std::vector<WeakLepsRow> rows;
    for (double N : N_list) {
        if (!(N > 0.0))
            throw std::invalid_argument("weak_Leps_check_parabolic: N values must be positive");
        double measure = 0.0;
        for (std::size_t k = 1; k < traj.times.size(); ++k) {
            const double t = traj.times[k];
            if (t <= t_lo || t >= t0) continue;
            const double dt = traj.times[k] - traj.times[k - 1];
            int count = 0;
            for (int idx : ball)
                if (traj.slices[k].is_defined(idx) && traj.slices[k].value(idx) > N) ++count;
            measure += count * hd * dt;
        }
        WeakLepsRow row;
        row.N = N;
        row.measured = measure;
        row.bound = std::pow(C * std::max(anchor_value, 0.0) / N, eps);
        row.pass = row.measured <= row.bound + 1e-12;
        rows.push_back(row);
    }
    return rows;
}

} // namespace dop
