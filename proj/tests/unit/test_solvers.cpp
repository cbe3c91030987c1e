#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "kslab/solvers.hpp"

using namespace kslab;
using kslab::test::kO;
using kslab::test::sq;

namespace {

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.grid().size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("Poisson solve is exact on quadratics") {
    for (int n : {1, 2, 3}) {
        const Grid g = Grid::cube(n, n == 3 ? 1.0 / 8.0 : 1.0 / 16.0, 1.0);
        const auto exact = [n](const Point& x) { return sq(x, n) + 0.3 * x[0]; };
        for (SolverMode mode : {SolverMode::Jacobi, SolverMode::GaussSeidelRedBlack}) {
            SolverConfig cfg;
            cfg.mode = mode;
            cfg.tolerance = 1e-10;
            const auto s = solve_poisson(g, Region::ball(kO, 1.0), ScalarField::constant(g, 2.0 * n),
                                         BoundaryData::from_function(g, exact), cfg);
            CHECK(s.residual <= 1e-10);
            CHECK(max_abs_diff(s.field, ScalarField::from_function(g, exact)) <= 1e-8);
            CHECK(s.provenance.at("solver") == "poisson");
            CHECK(s.provenance.at("mode") == to_string(mode));
        }
    }
}

TEST_CASE("discrete maximum principle and comparison") {
    const Grid g = Grid::cube(2, 1.0 / 32.0, 1.0);
    const auto bd = BoundaryData::from_function(g, [](const Point& x) { return std::sin(3.0 * x[0]) * x[1]; });
    const auto harm = solve_poisson(g, Region::ball(kO, 1.0), ScalarField::constant(g, 0.0), bd);
    const auto unknown = solve_unknowns(g, Region::ball(kO, 1.0));
    double bmax = -INFINITY, bmin = INFINITY, imax = -INFINITY, imin = INFINITY;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (unknown[i]) {
            imax = std::max(imax, harm.field[i]);
            imin = std::min(imin, harm.field[i]);
        } else if (norm(g.point(i), 2) < 1.0 + 2.0 * g.h()) {
            bmax = std::max(bmax, bd.values[i]);
            bmin = std::min(bmin, bd.values[i]);
        }
    }
    CHECK(imax <= bmax + 1e-8);
    CHECK(imin >= bmin - 1e-8);
    // larger Laplacian, smaller solution
    const auto sub = solve_poisson(g, Region::ball(kO, 1.0), ScalarField::constant(g, 1.0), bd);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(sub.field[i] <= harm.field[i] + 1e-8);
}

TEST_CASE("Pucci with equal ellipticity constants is the Poisson problem") {
    const Grid g = Grid::cube(2, 1.0 / 16.0, 1.0);
    const auto bd = BoundaryData::from_function(g, [](const Point& x) { return x[0] * x[1] + std::cos(x[1]); });
    const ScalarField f = ScalarField::from_function(g, [](const Point& x) { return 1.0 + x[0]; });
    const auto p = solve_poisson(g, Region::ball(kO, 1.0), f, bd);
    for (PucciSign s : {PucciSign::Minus, PucciSign::Plus}) {
        const auto q = solve_pucci(g, Region::ball(kO, 1.0), s, f, bd, Ellipticity(1.0, 1.0));
        CHECK(max_abs_diff(p.field, q.field) <= 1e-7);
    }
}

TEST_CASE("Pucci solve reproduces the radial solution on an annulus") {
    const Ellipticity ell(1.0, 2.0);
    std::vector<double> errs;
    for (double h : {1.0 / 16.0, 1.0 / 32.0}) {
        const Grid g = Grid::cube(2, h, 1.0);
        const auto exact = [](const Point& x) { return 1.0 / norm(x, 2); };
        const Region annulus = Region::annulus(kO, 0.25, 1.0);
        const auto bd = BoundaryData::from_function(g, [&](const Point& x) { return norm(x, 2) > 0.0 ? exact(x) : 0.0; });
        const auto s = solve_pucci(g, annulus, PucciSign::Minus, ScalarField::constant(g, 0.0), bd, ell);
        const auto unknown = solve_unknowns(g, annulus);
        double e = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (unknown[i]) e = std::max(e, std::abs(s.field[i] - exact(g.point(i))));
        errs.push_back(e);
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[1] <= 0.05);
}

TEST_CASE("pseudo-time mode agrees with red-black sweeps") {
    const Grid g = Grid::cube(2, 1.0 / 8.0, 1.0);
    const Ellipticity ell(1.0, 2.0);
    const auto bd = BoundaryData::from_function(g, [](const Point& x) { return x[0] * x[0] - 0.5 * x[1]; });
    SolverConfig cfg;
    const auto a = solve_pucci(g, Region::ball(kO, 1.0), PucciSign::Minus, ScalarField::constant(g, 0.0), bd, ell, cfg);
    cfg.mode = SolverMode::PseudoTime;
    const auto b = solve_pucci(g, Region::ball(kO, 1.0), PucciSign::Minus, ScalarField::constant(g, 0.0), bd, ell, cfg);
    CHECK(max_abs_diff(a.field, b.field) <= 1e-6);
}

TEST_CASE("solver configuration and input validation") {
    SolverConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.tolerance = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.omega = 2.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK(solver_mode_from_string(to_string(SolverMode::PseudoTime)) == SolverMode::PseudoTime);
    CHECK_THROWS_AS(solver_mode_from_string("newton"), std::invalid_argument);

    const Grid g = Grid::cube(2, 1.0 / 8.0, 1.0);
    BoundaryData bad = BoundaryData::constant(g, 0.0);
    bad.values.pop_back();
    CHECK_THROWS_AS(solve_poisson(g, Region::ball(kO, 1.0), ScalarField::constant(g, 0.0), bad), std::invalid_argument);
    BoundaryData nan = BoundaryData::constant(g, 0.0);
    nan.values[0] = NAN;
    CHECK_THROWS_AS(solve_poisson(g, Region::ball(kO, 1.0), ScalarField::constant(g, 0.0), nan), std::invalid_argument);
    CHECK_THROWS_AS(solve_poisson(g, Region::ball({0.01, 0.01, 0.0}, 0.005), ScalarField::constant(g, 0.0), BoundaryData::constant(g, 0.0)),
                    std::invalid_argument);
    SolverConfig tight;
    tight.max_iterations = 1;
    tight.tolerance = 1e-14;
    CHECK_THROWS_AS(solve_poisson(g, Region::ball(kO, 1.0), ScalarField::constant(g, 1.0), BoundaryData::constant(g, 0.0), tight),
                    std::runtime_error);
}

TEST_CASE("field library") {
    const Grid g = Grid::cube(2, 1.0 / 16.0, 1.0);
    for (const auto& name : field_library_names()) CHECK_NOTHROW(field_library(name, g));
    CHECK_THROWS_AS(field_library("nope", g), std::invalid_argument);
    CHECK_THROWS_AS(field_library("harmonic_saddle", Grid::cube(1, 0.1, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(field_library("poisson_kernel", g, {{"pole_radius", 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(field_library("abs_power", g, {{"alpha", -1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(field_library("pucci_radial", g, {{"lambda", 1.0}, {"Lambda", 1.0}}), std::invalid_argument);
    const ScalarField hub = field_library("huber", g, {{"eps", 0.5}});
    CHECK(hub[*g.node_at({0.25, 0.0, 0.0})] == doctest::Approx(0.0625));
    CHECK(hub[*g.node_at({1.0, 0.0, 0.0})] == doctest::Approx(0.75));
    const ScalarField pr = field_library("pucci_radial", g);
    REQUIRE(pr.mask().has_value());
    CHECK(pr.mask()->radius == doctest::Approx(4.0 * g.h()));
    CHECK(pr[*g.node_at({0.5, 0.0, 0.0})] == doctest::Approx(2.0));
}

TEST_CASE("random walks are reproducible and match the discrete oracle") {
    const Region target = Region::ball({0.25, 0.0, 0.0}, 0.25, true);
    WalkConfig w;
    w.n_samples = 4000;
    w.h = 1.0 / 8.0;
    w.seed = 7;
    const auto a = random_walk_hitting(2, target, {-0.5, 0.0, 0.0}, w);
    const auto b = random_walk_hitting(2, target, {-0.5, 0.0, 0.0}, w);
    CHECK(a.hits == b.hits);
    CHECK(a.capped == 0);
    const auto c = random_walk_hitting(2, target, {-0.5, 0.0, 0.0}, w, 1);
    CHECK(c.samples == a.samples);

    const auto oracle = discrete_hitting_oracle(2, target, w.h);
    const double p = oracle.field[oracle.field.grid().nearest_node({-0.5, 0.0, 0.0})];
    CHECK(std::abs(a.probability - p) <= 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(w.n_samples)) + 1e-12);

    // a larger target is hit at least as often on the same streams
    const auto big = random_walk_hitting(2, Region::ball({0.25, 0.0, 0.0}, 0.375, true), {-0.5, 0.0, 0.0}, w);
    CHECK(big.hits >= a.hits);

    const auto inside = random_walk_hitting(2, target, {0.25, 0.0, 0.0}, w);
    CHECK(inside.start_in_target);
    CHECK(inside.probability == 1.0);
    CHECK_THROWS_AS(random_walk_hitting(2, target, {1.5, 0.0, 0.0}, w), std::invalid_argument);
    WalkConfig bad = w;
    bad.h = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = w;
    bad.n_samples = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("probabilistic Harnack constants and argument checks") {
    CHECK(probabilistic_harnack_constant(2) > 0.0);
    CHECK(probabilistic_harnack_constant(3) > 0.0);
    WalkConfig w;
    w.n_samples = 50;
    CHECK_THROWS_AS(probabilistic_harnack_check(2, 0.25, Region::all(), w), std::invalid_argument);
    w.n_samples = 1000;
    CHECK_THROWS_AS(probabilistic_harnack_check(2, 0.4, Region::all(), w), std::invalid_argument);
    CHECK(second_difference_constant(2) == 4.0);
}

TEST_CASE("second differences of a Pucci solution") {
    const Ellipticity ell(1.0, 2.0);
    const Grid g = Grid::cube(2, 1.0 / 32.0, 1.0);
    SolverConfig cfg;
    cfg.tolerance = 1e-9;
    const auto s = solve_pucci(g, Region::ball(kO, 1.0), PucciSign::Plus, ScalarField::constant(g, 0.0),
                               BoundaryData::from_function(g, [](const Point& x) { return std::abs(x[0] - 0.2 * x[1]); }),
                               ell, cfg);
    for (Point e : {Point{1.0, 0.0, 0.0}, Point{0.0, 1.0, 0.0}, Point{std::sqrt(0.5), std::sqrt(0.5), 0.0}}) {
        const auto rep = second_difference_checks(s.field, Region::ball(kO, 1.0), ell, e, s.residual);
        CHECK(rep.supersolution.pass);
        CHECK(rep.lower_bound.pass);
    }
    CHECK_THROWS_AS(second_difference_checks(s.field, Region::ball(kO, 1.0), ell, kO, s.residual), std::invalid_argument);
}

}  // TEST_SUITE
