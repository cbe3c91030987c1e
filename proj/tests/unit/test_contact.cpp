#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "kslab/contact.hpp"
#include "kslab/envelope.hpp"
#include "kslab/solvers.hpp"

using namespace kslab;
using kslab::test::kO;
using kslab::test::sq;

namespace {

ScalarField brute_inf(const ScalarField& u, double eps) {
    const Grid& g = u.grid();
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double best = INFINITY;
        for (std::size_t j = 0; j < g.size(); ++j)
            best = std::min(best, u[j] + dist2(g.point(i), g.point(j), g.dim()) / (2.0 * eps));
        v[i] = best;
    }
    return ScalarField(g, v);
}

double max_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.grid().size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

ScalarField wavy(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double a = U(rng), b = U(rng), c = 2.0 * U(rng), q = 0.1 + 0.1 * (U(rng) + 1.0);
    const int n = g.dim();
    return ScalarField::from_function(g, [=](const Point& x) {
        return q * sq(x, n) + 0.02 * std::cos(3.0 * a * x[0] + c) + 0.02 * std::sin(3.0 * b * x[1]);
    });
}

}  // namespace

TEST_SUITE("contact_geometry") {

TEST_CASE("lower envelope of one line matches brute force") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> f(37), out(37);
        for (auto& x : f) x = U(rng);
        if (t % 5 == 0) f[t % 37] = INFINITY;
        const double w = 0.05 + std::abs(U(rng));
        lower_envelope_line(f.data(), 1, f.size(), w, out.data(), 1);
        for (std::size_t q = 0; q < f.size(); ++q) {
            double best = INFINITY;
            for (std::size_t p = 0; p < f.size(); ++p)
                best = std::min(best, f[p] + w * sq({static_cast<double>(p) - static_cast<double>(q), 0.0, 0.0}, 1));
            CHECK(out[q] == doctest::Approx(best).epsilon(1e-13));
        }
    }
    std::vector<double> all_inf(5, INFINITY), out(5);
    lower_envelope_line(all_inf.data(), 1, 5, 1.0, out.data(), 1);
    for (double v : out) CHECK(std::isinf(v));
}

TEST_CASE("inf-convolution equals the brute-force minimum in 1D, 2D and 3D") {
    std::mt19937_64 rng(11);
    const std::vector<Grid> grids{Grid::cube(1, 1.0 / 64.0, 1.0), Grid::cube(2, 1.0 / 12.0, 1.0),
                                  Grid::cube(3, 1.0 / 4.0, 1.0)};
    for (const Grid& g : grids)
        for (double eps : {0.05, 0.2, 1.0}) {
            const ScalarField u = test::random_field(g, rng, -1.0, 1.0);
            CHECK(max_diff(inf_convolution(u, eps), brute_inf(u, eps)) <= 1e-12);
            // sup-convolution is the mirror image
            ScalarField neg = u;
            for (auto& v : neg.values()) v = -v;
            const ScalarField s = sup_convolution(u, eps), m = inf_convolution(neg, eps);
            for (std::size_t i = 0; i < g.size(); ++i) CHECK(s[i] == doctest::Approx(-m[i]).epsilon(1e-14));
        }
    CHECK_THROWS_AS(inf_convolution(ScalarField::constant(grids[0], 0.0), 0.0), std::invalid_argument);
}

TEST_CASE("inf-convolution of |x| is the Huber function") {
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    for (double eps : {0.125, 0.25}) {
        const ScalarField a = ScalarField::from_function(g, [](const Point& x) { return norm(x, 2); });
        const ScalarField w = inf_convolution(a, eps);
        const ScalarField hub = field_library("huber", g, {{"eps", eps}});
        for (std::size_t i = 0; i < g.size(); ++i)
            if (norm(g.point(i), 2) <= 0.5) CHECK(std::abs(w[i] - hub[i]) <= g.h());
    }
}

TEST_CASE("inf-convolution semigroup, ordering and semiconcavity") {
    std::mt19937_64 rng(13);
    const Grid g = Grid::cube(2, 1.0 / 32.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        const ScalarField u = wavy(g, rng);
        const double e1 = 0.1, e2 = 0.15;
        const ScalarField ab = inf_convolution(inf_convolution(u, e1), e2);
        CHECK(max_diff(ab, inf_convolution(u, e1 + e2)) <= 2.0 * g.h() * g.h() * (1.0 / e1 + 1.0 / e2));

        const ScalarField lo = inf_convolution(u, 0.2), lower = inf_convolution(u, 0.4), hi = sup_convolution(u, 0.2);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(lower[i] <= lo[i] + 1e-15);
            CHECK(lo[i] <= u[i]);
            CHECK(u[i] <= hi[i]);
        }
        // the inf over lattice points of affine-in-x terms keeps w - |x|^2/(2 eps) concave on the lattice
        for (int d = 0; d < 2; ++d) {
            Point e{0.0, 0.0, 0.0};
            e[d] = 1.0;
            for (const ScalarField f = second_difference(lo, e, g.h()); double v : f.values()) CHECK(v <= 1.0 / 0.2 + 1e-8);
        }
        const ScalarField env = paraboloid_envelope(u, 0.2);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(env[i] <= u[i] + 1e-14);
    }
}

TEST_CASE("envelope reproduces the extremal concave paraboloid") {
    const Grid g = Grid::cube(2, 1.0 / 16.0, 1.0);
    const double eps = 0.25;
    const ScalarField u = ScalarField::from_function(g, [&](const Point& x) { return -sq(x, 2) / (2.0 * eps); });
    CHECK(max_diff(paraboloid_envelope(u, eps), u) <= 1e-12);
}

TEST_CASE("contact set of the zero field is the closed centre ball") {
    for (int n : {2, 3}) {
        const Grid g = Grid::cube(n, n == 2 ? 1.0 / 32.0 : 1.0 / 8.0, 1.0);
        const ParaboloidFamily fam{1.0, ParaboloidSign::Concave, Region::ball(kO, 0.25, true), 0.0};
        ContactOptions opts;
        opts.domain = Region::ball(kO, 1.0);
        const ContactSet cs = contact_set(ScalarField::constant(g, 0.0), fam, opts);
        const auto expect = Region::ball(kO, 0.25, true).nodes(g);
        CHECK(cs.contact_nodes() == expect);
        for (const auto& e : cs.entries) {
            CHECK(e.x0 == e.y0);
            CHECK(e.gap == 0.0);
        }
    }
}

TEST_CASE("contact points of a convex paraboloid sit halfway to the centre") {
    const Grid g = Grid::cube(2, 1.0 / 32.0, 1.0);
    const ScalarField u = ScalarField::from_function(g, [](const Point& x) { return 0.5 * sq(x, 2); });
    const ParaboloidFamily fam{1.0, ParaboloidSign::Concave, Region::ball(kO, 0.25, true), 0.0};
    const ContactSet cs = contact_set(u, fam);
    REQUIRE_FALSE(cs.entries.empty());
    for (const auto& e : cs.entries) {
        Point half{e.y0[0] / 2.0, e.y0[1] / 2.0, 0.0};
        CHECK(dist(e.x0, half, 2) <= g.h() * std::sqrt(2.0) / 2.0 + 1e-12);
        CHECK(e.gap <= e.tau);
    }
    // the transport map x + Du/M sends each contact node to 2x, with Jacobian det(I + I) = 4
    const TransportRecord tr = transport_map(cs, u, fam);
    for (std::size_t k = 0; k < tr.entry.size(); ++k) {
        const Point x = cs.entries[tr.entry[k]].x0;
        CHECK(tr.image[k][0] == doctest::Approx(2.0 * x[0]));
        CHECK(tr.image[k][1] == doctest::Approx(2.0 * x[1]));
        CHECK(tr.jacobian[k] == doctest::Approx(4.0));
    }
    const CheckReport r = area_formula_check(cs, tr, fam.center_set);
    CHECK(r.pass);
    CHECK(r.rhs == doctest::Approx(r.lhs).epsilon(0.1));
}

TEST_CASE("area formula holds on random semiconvex fields") {
    std::mt19937_64 rng(19);
    const Grid g = Grid::cube(2, 1.0 / 48.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        const ScalarField u = wavy(g, rng);
        const ParaboloidFamily fam{1.0, ParaboloidSign::Concave, Region::ball(kO, 0.25, true), 0.0};
        ContactOptions opts;
        opts.domain = Region::ball(kO, 1.0);
        const ContactSet cs = contact_set(u, fam, opts);
        CHECK(area_formula_check(cs, transport_map(cs, u, fam), fam.center_set).pass);
    }
}

TEST_CASE("measure estimate and localization") {
    const Ellipticity ell(1.0, 2.0);
    CHECK(measure_estimate_check(ScalarField::constant(Grid::cube(2, 1.0 / 32.0, 1.5), 0.0), ell, 0.1).pass);
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    const CheckReport loc =
        localization_check(ScalarField::from_function(g, [](const Point& x) { return 0.5 + 0.25 * x[0]; }), ell, 0.25, 0.1);
    CHECK(loc.pass);
    for (int n : {2, 3})
        for (double rho : {0.1, 0.25}) {
            const double C0 = localization_C0(n, ell, rho);
            CHECK(std::exp2(std::round(std::log2(C0))) == C0);
            CHECK(C0 >= 1.0);
        }
}

TEST_CASE("ABP bound on the bowl, with scale invariance") {
    const Ellipticity ell(1.0, 2.0);
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    const auto bowl = [&](double s) {
        return ScalarField::from_function(g, [s](const Point& x) { return s * (sq(x, 2) - 1.0); });
    };
    const CheckReport a = abp_bound(bowl(1.0), ell), b = abp_bound(bowl(3.0), ell);
    CHECK(a.pass);
    CHECK(b.pass);
    CHECK(b.lhs == doctest::Approx(3.0 * a.lhs).epsilon(1e-9));
    CHECK(b.rhs == doctest::Approx(3.0 * a.rhs).epsilon(1e-9));
    CHECK(abp_constant(2, ell) == doctest::Approx(2.0 / std::sqrt(std::numbers::pi)));
}

TEST_CASE("Aleksandrov check on convex fields") {
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    const ScalarField bowl = ScalarField::from_function(g, [](const Point& x) { return sq(x, 2) - 1.0; });
    CHECK(aleksandrov_check(bowl, Region::ball(kO, 1.0)).pass);
    CHECK(aleksandrov_constant(2) == doctest::Approx(1.0));
    CHECK(aleksandrov_constant(3) == doctest::Approx(3.0 / std::numbers::pi));
}

TEST_CASE("Hessian bound at contact points") {
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    const auto res = hessian_contact_set(field_library("harmonic_saddle", g, {{"scale", 0.25}}), 1.0,
                                         Region::ball(kO, 0.25, true));
    CHECK(res.report.pass);
    CHECK(res.report.measured.at("interior_contacts") > 0.0);
    // a concave paraboloid steeper than the opening never touches in the interior
    const ScalarField steep = ScalarField::from_function(g, [](const Point& x) { return -2.0 * sq(x, 2); });
    const auto none = hessian_contact_set(steep, 1.0, Region::ball(kO, 0.25, true));
    CHECK(none.report.measured.at("interior_contacts") == 0.0);
    CHECK_THROWS_AS(hessian_contact_set(steep, 0.0, Region::ball(kO, 0.25, true)), std::invalid_argument);
}

}  // TEST_SUITE
