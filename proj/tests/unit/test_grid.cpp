#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "kslab/grid.hpp"

using namespace kslab;
using kslab::test::kO;
using kslab::test::sq;

TEST_SUITE("grid_core") {

TEST_CASE("grid construction and indexing") {
    const Grid g = Grid::cube(2, 0.25, 1.0);
    CHECK(g.counts()[0] == 9);
    CHECK(g.counts()[1] == 9);
    CHECK(g.counts()[2] == 1);
    CHECK(g.size() == 81);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.index(g.multi_index(i)) == i);
    CHECK(g.node_at({0.5, -0.25, 0.0}).has_value());
    CHECK_FALSE(g.node_at({0.1, 0.0, 0.0}).has_value());
    CHECK_THROWS_AS(Grid(2, 0.1, kO, {2, 5, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Grid(4, 0.1, kO, {5, 5, 5}), std::invalid_argument);
    CHECK_THROWS_AS(Grid(1, -0.1, kO, {5, 1, 1}), std::invalid_argument);
}

TEST_CASE("field values must be finite and match the node count") {
    const Grid g = Grid::cube(1, 0.5, 1.0);
    CHECK_THROWS_AS(ScalarField(g, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(ScalarField(g, {1.0, 2.0, NAN, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("oscillation examples") {
    const double h = 1.0 / 64.0;
    const Grid g = Grid::cube(2, h, 1.0);
    CHECK(oscillation(ScalarField::constant(g, 5.0), Region::ball(kO, 0.7)) == 0.0);
    const ScalarField x1 = ScalarField::from_function(g, [](const Point& x) { return x[0]; });
    CHECK(std::abs(oscillation(x1, Region::ball(kO, 1.0)) - 2.0) <= 2.0 * h);
    const ScalarField saddle = ScalarField::from_function(g, [](const Point& x) { return x[0] * x[0] - x[1] * x[1]; });
    CHECK(std::abs(oscillation(saddle, Region::ball(kO, 0.5)) - 0.5) <= 2.0 * h);
    CHECK_THROWS_WITH(oscillation(x1, Region::ball({5.0, 0.0, 0.0}, 0.1)), "empty region");
}

TEST_CASE("oscillation is shift invariant and homogeneous") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> I(-1000, 1000);
    const Grid g = Grid::cube(2, 1.0 / 16.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> v(g.size());
        for (auto& x : v) x = I(rng) / 64.0;  // dyadic values keep the arithmetic exact
        const ScalarField u(g, v);
        const Region E = Region::ball({0.1, -0.2, 0.0}, 0.6);
        ScalarField shifted = u, scaled = u;
        for (auto& x : shifted.values()) x += 3.0;
        for (auto& x : scaled.values()) x *= -4.0;
        CHECK(oscillation(shifted, E) == oscillation(u, E));
        CHECK(oscillation(scaled, E) == 4.0 * oscillation(u, E));
    }
}

TEST_CASE("monotonicity under region inclusion") {
    std::mt19937_64 rng(3);
    const Grid g = Grid::cube(2, 1.0 / 16.0, 1.0);
    const ScalarField u = test::random_field(g, rng);
    const Region small = Region::ball(kO, 0.4), big = Region::ball(kO, 0.8);
    CHECK(oscillation(u, small) <= oscillation(u, big));
    CHECK(lp_norm(u, small, 2.0) <= lp_norm(u, big, 2.0));
    CHECK(holder_seminorm(u, small, 0.5) <= holder_seminorm(u, big, 0.5));
}

TEST_CASE("lp norms") {
    const double h = 1.0 / 128.0;
    const Grid g = Grid::cube(2, h, 1.0);
    for (double p : {0.5, 1.0, 2.0, double(INFINITY)}) CHECK(lp_norm(ScalarField::constant(g, 0.0), Region::ball(kO, 1.0), p) == 0.0);
    CHECK(std::abs(lp_norm(ScalarField::constant(g, 1.0), Region::ball(kO, 1.0), 1.0) - std::numbers::pi) <= 8.0 * h);
    const Grid g1(1, 1.0 / 1024.0, kO, {1025, 1, 1});
    const ScalarField x = ScalarField::from_function(g1, [](const Point& p) { return p[0]; });
    const Region open_unit = Region::halfspace({-1.0, 0.0, 0.0}, 0.0).intersect(Region::halfspace({1.0, 0.0, 0.0}, 1.0));
    CHECK(std::abs(lp_norm(x, open_unit, 2.0) - 1.0 / std::sqrt(3.0)) <= 1.0 / 1024.0);
    CHECK(lp_norm(x, open_unit, INFINITY) == doctest::Approx(1.0 - 1.0 / 1024.0));
    CHECK_THROWS_AS(lp_norm(x, open_unit, 0.0), std::invalid_argument);
    const NormReport rep = lp_norm_report(x, open_unit, 2.0);
    CHECK(rep.sample_count == 1023);
    CHECK(rep.measure_error_bound > 0.0);
}

TEST_CASE("Hölder seminorm examples") {
    const Grid g1(1, 1.0 / 256.0, {-1.0, 0.0, 0.0}, {513, 1, 1});
    CHECK(holder_seminorm(ScalarField::constant(g1, 2.0), Region::all(), 0.5) == 0.0);
    const ScalarField root = ScalarField::from_function(g1, [](const Point& x) { return std::sqrt(std::abs(x[0])); });
    const double s = holder_seminorm(root, Region::all(), 0.5);
    CHECK(s <= 1.0 + 1e-12);
    CHECK(s >= 0.99);
    const double h = 1.0 / 32.0;
    const Grid g = Grid::cube(2, h, 1.0);
    const ScalarField x1 = ScalarField::from_function(g, [](const Point& x) { return x[0]; });
    CHECK(std::abs(holder_seminorm(x1, Region::ball(kO, 1.0), 1.0) - 1.0) <= h);
    CHECK_THROWS_AS(holder_seminorm(x1, Region::point(kO), 1.0), std::invalid_argument);
}

TEST_CASE("Lipschitz constant of a C1 sample converges with refinement") {
    double prev = INFINITY;
    for (double h : {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0}) {
        const Grid g(1, h, {-1.0, 0.0, 0.0}, {static_cast<int>(std::lround(2.0 / h)) + 1, 1, 1});
        const ScalarField u = ScalarField::from_function(g, [](const Point& x) { return std::sin(x[0]); });
        const double err = std::abs(holder_seminorm(u, Region::all(), 1.0) - 1.0);
        CHECK(err <= prev);
        CHECK(err <= h);
        prev = err;
    }
}

TEST_CASE("weighted seminorm") {
    const double h = 1.0 / 32.0;
    const Grid g = Grid::cube(2, h, 1.0);
    const Region B1 = Region::ball(kO, 1.0);
    CHECK(weighted_seminorm(ScalarField::constant(g, 1.0), B1, 1.0, 0.0) == 0.0);
    const ScalarField x1 = ScalarField::from_function(g, [](const Point& x) { return x[0]; });
    CHECK(std::abs(weighted_seminorm(x1, B1, 1.0, 0.0) - 1.0) <= 2.0 * h);
    const ScalarField root = ScalarField::from_function(g, [](const Point& x) { return std::sqrt(norm(x, 2)); });
    const double w_half = weighted_seminorm(root, B1, 0.5, 0.5), w_zero = weighted_seminorm(root, B1, 0.5, 0.0);
    CHECK(std::isfinite(w_half));
    CHECK(w_half <= w_zero);
}

TEST_CASE("rescale fixed points and oscillation scaling") {
    const double h = 1.0 / 64.0;
    const Grid g = Grid::cube(2, h, 1.0);
    const ScalarField r1 = ScalarField::from_function(g, [](const Point& x) { return norm(x, 2); });
    for (double r : {0.25, 0.5, 1.0}) {
        const ScalarField v = rescale(r1, 1.0, r);
        const double tol = rescale_tolerance(r1, 1.0, r);
        for (std::size_t i = 0; i < v.grid().size(); ++i) CHECK(std::abs(v[i] - norm(v.grid().point(i), 2)) <= tol);
    }
    const ScalarField r2 = ScalarField::from_function(g, [](const Point& x) { return sq(x, 2); });
    const ScalarField v2 = rescale(r2, 2.0, 0.5);
    // multilinear interpolation of |x|^2 at cell midpoints misses by n h^2 / 4, scaled by r^{-2}
    const double tol2 = 2.0 * h * h / 4.0 / 0.25 + 1e-12;
    for (std::size_t i = 0; i < v2.grid().size(); ++i) CHECK(std::abs(v2[i] - sq(v2.grid().point(i), 2)) <= tol2);

    const ScalarField root = ScalarField::from_function(g, [](const Point& x) { return std::sqrt(norm(x, 2)); });
    const ScalarField vr = rescale(root, 0.5, 0.25);
    const double lhs = oscillation(vr, Region::ball(kO, 1.0, true));
    const double rhs = 2.0 * oscillation(root, Region::ball(kO, 0.25, true));
    CHECK(std::abs(lhs - rhs) <= rescale_tolerance(root, 0.5, 0.25));
    CHECK_THROWS_AS(rescale(root, 0.5, 0.5, {0.9, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("rescale composes") {
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    const ScalarField u = ScalarField::from_function(g, [](const Point& x) { return std::sin(3.0 * x[0]) + x[1] * x[1]; });
    const ScalarField a = rescale(rescale(u, 0.5, 0.5), 0.5, 0.5);
    const ScalarField b = rescale(u, 0.5, 0.25);
    const double tol = 2.0 * (rescale_tolerance(u, 0.5, 0.25) + rescale_tolerance(rescale(u, 0.5, 0.5), 0.5, 0.5));
    for (std::size_t i = 0; i < a.grid().size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

TEST_CASE("Hardy-Littlewood maximal function") {
    const Grid g = Grid::cube(2, 1.0 / 16.0, 1.0);
    const ScalarField m = hardy_littlewood_maximal(ScalarField::constant(g, -3.0));
    for (double v : m.values()) CHECK(v == doctest::Approx(3.0));
    std::mt19937_64 rng(5);
    const ScalarField u = test::random_field(g, rng);
    const ScalarField mu = hardy_littlewood_maximal(u);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(mu[i] >= std::abs(u[i]) - 1e-15);
}

TEST_CASE("maximal function of a 1D spike decays like 1/|x|") {
    const double h = 1.0 / 128.0;
    const Grid g(1, h, {-1.0, 0.0, 0.0}, {257, 1, 1});
    std::vector<double> v(g.size(), 0.0);
    v[*g.node_at(kO)] = 1.0 / h;  // unit mass
    const ScalarField u(g, v);
    const ScalarField m = hardy_littlewood_maximal(u);
    // brute force over every dyadic radius, matching the implementation's radius schedule
    for (double x : {0.125, 0.25, 0.5}) {
        const std::size_t i = *g.node_at({x, 0.0, 0.0});
        CHECK(m[i] * x >= 0.25);
        CHECK(m[i] * x <= 1.0);
    }
}

TEST_CASE("region algebra and box relations") {
    const Region B = Region::ball(kO, 0.5);
    CHECK(B.contains({0.3, 0.0, 0.0}, 2));
    CHECK_FALSE(B.contains({0.5, 0.0, 0.0}, 2));
    CHECK(Region::ball(kO, 0.5, true).contains({0.5, 0.0, 0.0}, 2));
    const Region A = Region::annulus(kO, 0.2, 0.5);
    CHECK_FALSE(A.contains({0.1, 0.0, 0.0}, 2));
    CHECK(A.contains({0.3, 0.0, 0.0}, 2));
    const Region D = B.minus(Region::halfspace({1.0, 0.0, 0.0}, 0.0));
    CHECK(D.contains({0.2, 0.0, 0.0}, 2));
    CHECK_FALSE(D.contains({-0.2, 0.0, 0.0}, 2));
    CHECK(B.relate(Box{2, {-0.1, -0.1, 0.0}, {0.1, 0.1, 0.0}}) == BoxRelation::Inside);
    CHECK(B.relate(Box{2, {0.6, 0.6, 0.0}, {0.7, 0.7, 0.0}}) == BoxRelation::Outside);
    CHECK(B.relate(Box{2, {0.4, -0.1, 0.0}, {0.6, 0.1, 0.0}}) == BoxRelation::Partial);
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    CHECK(Region::all().count(g) == g.size());
    CHECK(B.measure(g) == doctest::Approx(B.count(g) * g.cell_volume()));
}

TEST_CASE("level-set regions") {
    const Grid g = Grid::cube(1, 0.25, 1.0);
    auto u = std::make_shared<const ScalarField>(ScalarField::from_function(g, [](const Point& x) { return x[0]; }));
    CHECK(Region::sublevel(u, 0.0).count(g) == 5);
    CHECK(Region::superlevel(u, 0.0).count(g) == 5);
    CHECK(Region::superlevel(u, 0.0, true).count(g) == 4);
    CHECK(Region::sublevel(u, 0.0).grid_defined());
}

TEST_CASE("Harnack for concave functions") {
    const double h = 1.0 / 64.0;
    const Grid g = Grid::cube(2, h, 1.0);
    const std::vector<std::function<double(const Point&)>> fams{
        [](const Point& x) { return 1.0 - sq(x, 2); },
        [](const Point& x) { return 1.0 - norm(x, 2); },
        [](const Point& x) { return std::min(1.0 - x[0], 1.0 + 0.5 * x[1]); }};
    for (const auto& f : fams) {
        const ScalarField u = ScalarField::from_function(g, f);
        const auto b1 = ball_nodes(g, kO, 1.0);
        double sup = -INFINITY;
        for (auto i : b1) sup = std::max(sup, u[i]);
        for (double r : {0.25, 0.5, 0.75}) {
            double inf = INFINITY;
            for (auto i : ball_nodes(g, kO, r)) inf = std::min(inf, u[i]);
            CHECK(sup <= 2.0 / (1.0 - r) * inf + 4.0 * h);
        }
    }
}

TEST_CASE("local max principle for convex functions") {
    const double h = 1.0 / 64.0;
    const Grid g = Grid::cube(2, h, 1.0);
    const std::vector<std::function<double(const Point&)>> fams{
        [](const Point& x) { return sq(x, 2); }, [](const Point& x) { return std::abs(x[0] - 0.3); },
        [](const Point& x) { return std::exp(x[0] + x[1]); }};
    for (const auto& f : fams) {
        const ScalarField u = ScalarField::from_function(g, f);
        for (double r : {0.25, 0.5}) {
            double sup = 0.0;
            for (auto i : ball_nodes(g, kO, r)) sup = std::max(sup, u[i]);
            const double l1 = lp_norm(u, Region::ball(kO, 1.0).minus(Region::ball(kO, r)), 1.0);
            CHECK(sup <= 4.0 / (unit_ball_volume(2) * (1.0 - r) * (1.0 - r)) * l1 + 8.0 * h);
        }
    }
}

TEST_CASE("Hölder modulus") {
    const HolderModulus w(2.0, 0.5);
    CHECK(w(0.25) == doctest::Approx(1.0));
    CHECK_THROWS_AS(HolderModulus(-1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(HolderModulus(1.0, 1.5), std::invalid_argument);
}

}  // TEST_SUITE
