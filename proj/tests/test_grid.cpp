#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "dop/errors.hpp"
#include "dop/grid.hpp"
#include "dop/random.hpp"

using namespace dop;

TEST_CASE("make_grid 1D box n=5") {
    GridPtr g = Grid::make(1, 5, DomainKind::box);
    CHECK(g->h() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g->total_nodes() == 5);
    for (int i = 0; i < 5; ++i)
        CHECK(g->coord(i)[0] == doctest::Approx(-1.0 + 0.5 * i).epsilon(1e-15));
    CHECK(g->boundary_count() == 2);
    CHECK(g->is_boundary(0));
    CHECK(g->is_boundary(4));
    CHECK(g->interior_count() == 3);
}

TEST_CASE("make_grid 2D box n=5 counts") {
    GridPtr g = Grid::make(2, 5, DomainKind::box);
    CHECK(g->total_nodes() == 25);
    CHECK(g->boundary_count() == 16);
    CHECK(g->interior_count() == 9);
    CHECK(g->exterior_count() == 0);
}

TEST_CASE("make_grid disc n=41 node counts by |x| test") {
    GridPtr g = Grid::make(2, 41, DomainKind::disc);
    const double h = g->h();

    // recount the classification rule directly
    int interior_direct = 0, in_disc = 0;
    for (int idx = 0; idx < g->total_nodes(); ++idx) {
        const auto p = g->coord(idx);
        const double rho = std::sqrt(p[0] * p[0] + p[1] * p[1]);
        if (rho < 1.0 - h / 2.0) ++interior_direct;
        if (rho <= 1.0) ++in_disc;
    }
    CHECK(interior_direct == g->interior_count());

    // discretized-disc node count vs the pi/4 n^2 area estimate
    const double estimate = 3.141592653589793 / 4.0 * 41.0 * 41.0;
    const int non_ext = g->total_nodes() - g->exterior_count();
    CHECK(non_ext > 0.95 * estimate);
    CHECK(non_ext < 1.05 * estimate);
    CHECK(in_disc > 0.95 * estimate);
    // strict-interior band sits near pi (1 - h/2)^2 / h^2 by construction
    const double band_estimate = 3.141592653589793 * (1.0 - h / 2.0) * (1.0 - h / 2.0) / (h * h);
    CHECK(std::abs(interior_direct - band_estimate) < 0.05 * band_estimate);
}

TEST_CASE("make_grid rejects bad arguments") {
    CHECK_THROWS_AS(Grid::make(3, 11, DomainKind::box), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(1, 4, DomainKind::box), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(1, 6, DomainKind::box), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make(2, 3, DomainKind::disc), std::invalid_argument);
}

TEST_CASE("grid invariants: spacing, origin node, stencil closure") {
    for (int n : {5, 41, 101, 201}) {
        for (DomainKind kind : {DomainKind::box, DomainKind::disc}) {
            for (int dim : {1, 2}) {
                if (dim == 2 && n > 101) continue;
                GridPtr g = Grid::make(dim, n, kind);
                CHECK(std::abs(g->h() * (n - 1) - 2.0) < 1e-12 * 2.0);
                const int origin = g->node_near(0.0, 0.0);
                CHECK(g->coord(origin)[0] == 0.0);
                if (dim == 2) CHECK(g->coord(origin)[1] == 0.0);
                CHECK(!g->is_exterior(origin));
                for (int idx : g->interior_nodes()) {
                    CHECK(g->stencil_complete(idx));
                    for (int nb : g->stencil_neighbors(idx)) {
                        REQUIRE(nb >= 0);
                        CHECK(!g->is_exterior(nb));
                    }
                }
            }
        }
    }
}

TEST_CASE("sup_norm examples and norm axioms") {
    GridPtr g1 = Grid::make(1, 41, DomainKind::box);
    CHECK(sup_norm(GridFunction::constant(g1, 0.0)) == 0.0);
    CHECK(sup_norm(GridFunction::sample(g1, [](double x, double) { return x; })) == 1.0);

    GridPtr g2 = Grid::make(2, 21, DomainKind::box);
    const GridFunction f2 =
        GridFunction::sample(g2, [](double x, double y) { return 1.0 - x * x - y * y; });
    CHECK(sup_norm(f2) == 1.0);
    CHECK(f2.value(g2->node_near(0, 0)) == 1.0);

    Rng rng(7);
    GridFunction a(g1), b(g1);
    for (int idx : g1->non_exterior_nodes()) {
        a.set(idx, rng.uniform(-3, 3));
        b.set(idx, rng.uniform(-3, 3));
    }
    const double alpha = -2.5;
    GridFunction scaled(g1), sum(g1);
    for (int idx : g1->non_exterior_nodes()) {
        scaled.set(idx, alpha * a.value(idx));
        sum.set(idx, a.value(idx) + b.value(idx));
    }
    CHECK(sup_norm(scaled) == std::abs(alpha) * sup_norm(a));
    CHECK(sup_norm(sum) <= sup_norm(a) + sup_norm(b));
}

TEST_CASE("ball_nodes examples and nesting") {
    GridPtr g1 = Grid::make(1, 5, DomainKind::box);
    const auto ball = ball_nodes(*g1, {0.0, 0.0}, 0.6);
    REQUIRE(ball.size() == 3);
    std::set<double> xs;
    for (int idx : ball) xs.insert(g1->coord(idx)[0]);
    CHECK(xs == std::set<double>{-0.5, 0.0, 0.5});

    CHECK(ball_nodes(*g1, {0.0, 0.0}, 10.0).size() ==
          static_cast<std::size_t>(g1->total_nodes() - g1->exterior_count()));

    GridPtr g2 = Grid::make(2, 41, DomainKind::box);
    const double h = g2->h();
    const auto count = ball_nodes(*g2, {0.0, 0.0}, 0.25).size();
    const double estimate = 3.141592653589793 * 0.25 * 0.25 / (h * h);
    CHECK(count > 0.9 * estimate);
    CHECK(count < 1.1 * estimate);

    for (double r1 : {0.1, 0.3, 0.7}) {
        const auto small = ball_nodes(*g2, {0.25, -0.3}, r1);
        const auto big = ball_nodes(*g2, {0.25, -0.3}, r1 + 0.2);
        const std::set<int> big_set(big.begin(), big.end());
        for (int idx : small) CHECK(big_set.count(idx) == 1);
    }

    CHECK_THROWS_AS(ball_nodes(*g1, {0.0, 0.0}, -1.0), std::invalid_argument);
}

TEST_CASE("modulus_of_continuity examples") {
    GridPtr g = Grid::make(1, 201, DomainKind::box);

    const GridFunction lin = GridFunction::sample(g, [](double x, double) { return x; });
    auto rows = modulus_of_continuity(lin, {0.5});
    CHECK(rows[0].omega == doctest::Approx(0.5).epsilon(1e-12));

    const GridFunction cst = GridFunction::constant(g, 3.25);
    for (const auto& row : modulus_of_continuity(cst, {0.1, 0.5, 1.0}))
        CHECK(row.omega == 0.0);

    const GridFunction root =
        GridFunction::sample(g, [](double x, double) { return std::sqrt(std::abs(x)); });
    rows = modulus_of_continuity(root, {0.25});
    CHECK(std::abs(rows[0].omega - 0.5) <= 2.0 * g->h());

    CHECK_THROWS_AS(modulus_of_continuity(lin, {0.5 * g->h()}), std::invalid_argument);
}

TEST_CASE("modulus is nondecreasing and subadditive up to grid error") {
    GridPtr g = Grid::make(1, 101, DomainKind::box);
    const GridFunction f =
        GridFunction::sample(g, [](double x, double) { return std::abs(x); }); // Lip(f)=1
    const std::vector<double> radii = {0.08, 0.16, 0.24, 0.32, 0.4, 0.64};
    const auto rows = modulus_of_continuity(f, radii);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].omega >= rows[i - 1].omega);

    auto omega_at = [&](double r) { return modulus_of_continuity(f, {r})[0].omega; };
    for (auto [r1, r2] : {std::pair{0.08, 0.16}, {0.16, 0.24}, {0.24, 0.4}}) {
        CHECK(omega_at(r1 + r2) <= omega_at(r1) + omega_at(r2) + 2.0 * g->h() + 1e-12);
    }
}

TEST_CASE("csv and json round trips are bit exact") {
    namespace fs = std::filesystem;
    const std::string dir = "grid_io_tmp";
    fs::create_directories(dir);

    for (auto [dim, kind] :
         {std::pair{1, DomainKind::box}, {2, DomainKind::box}, {2, DomainKind::disc}}) {
        GridPtr g = Grid::make(dim, 21, kind);
        Rng rng(42);
        GridFunction f(g);
        for (int idx : g->non_exterior_nodes())
            f.set(idx, rng.uniform(-5, 5) * std::exp(rng.uniform(-9, 9)));

        const std::string path = dir + "/f.csv";
        write_csv(f, path);
        const GridFunction back = read_csv(g, path);
        for (int idx : g->non_exterior_nodes()) {
            REQUIRE(back.is_defined(idx));
            CHECK(back.value(idx) == f.value(idx)); // bit exact
        }

        const GridFunction jback = from_json_records(g, to_json_records(f));
        for (int idx : g->non_exterior_nodes()) CHECK(jback.value(idx) == f.value(idx));
    }
    fs::remove_all(dir);
}

TEST_CASE("grid function defined-mask bookkeeping") {
    GridPtr g = Grid::make(1, 11, DomainKind::box);
    GridFunction f(g);
    CHECK(f.value_count() == g->total_nodes() - g->exterior_count());
    CHECK(f.is_complete());
    CHECK_THROWS_AS(
        GridFunction::sample(g, [](double x, double) { return 1.0 / (x - x); }),
        std::exception);
    f.set_undefined(3);
    CHECK(f.value_count() == 10);
    CHECK(!f.is_complete());
}
