#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "kslab/regularity.hpp"
#include "kslab/solvers.hpp"

using namespace kslab;
using kslab::test::kO;
using kslab::test::sq;

TEST_SUITE("regularity") {

TEST_CASE("decay to modulus constants") {
    const auto hd = holder_from_decay(0.25, 1.0 / 3.0);
    CHECK(hd.alpha == doctest::Approx(0.26186).epsilon(1e-4));
    CHECK(hd.C == doctest::Approx(4.0 / 3.0));
    CHECK_THROWS_AS(holder_from_decay(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(holder_from_decay(0.5, 1.0), std::invalid_argument);
}

TEST_CASE("geometric profiles satisfy the modulus with zero margin at the left end") {
    for (double theta : {0.1, 0.3, 0.75})
        for (double rho : {0.25, 0.5, 0.8}) {
            const auto prof = geometric_profile(2, theta, rho, 1.0, 15);
            const CheckReport r = decay_implies_modulus_check(prof, theta);
            CHECK(r.pass);
            CHECK(std::abs(r.margin) <= 1e-12);
        }
    DecayProfile bad = geometric_profile(2, 0.3, 0.5, 1.0, 4);
    bad.osc[3] = bad.osc[2];
    CHECK_THROWS_WITH_AS(decay_implies_modulus_check(bad, 0.3), "step inequality fails at k=2", std::runtime_error);
}

TEST_CASE("fitted exponent recovers power laws and rejects the log modulus") {
    for (double a : {0.3, 0.5, 0.7, 1.0}) {
        const auto fn = [a](const Point& x) { return std::pow(norm(x, 2), a); };
        const auto fit = fit_holder_exponent(oscillation_profile(fn, 2, kO, 0.5, 0.5, 10));
        CHECK(fit.alpha_hat == doctest::Approx(a).epsilon(1e-9));
        CHECK(fit.r_squared == doctest::Approx(1.0));
    }
    const auto logfn = [](const Point& x) {
        const double r = norm(x, 2);
        return r == 0.0 ? 0.0 : 1.0 / std::abs(std::log(std::min(r, 0.5)));
    };
    CHECK(fit_holder_exponent(oscillation_profile(logfn, 2, kO, std::ldexp(1.0, -16), 0.25, 8, 8)).alpha_hat < 0.05);
    // gridded profile of |x|^{1/2}
    const Grid g = Grid::cube(2, 1.0 / 256.0, 1.0);
    const auto prof = oscillation_profile(field_library("abs_power", g, {{"alpha", 0.5}}), kO, 0.5, 0.5, 6);
    CHECK(std::abs(fit_holder_exponent(prof).alpha_hat - 0.5) <= 0.025);
    CHECK_THROWS_AS(oscillation_profile(field_library("abs_power", g), kO, 0.5, 0.5, 12), std::invalid_argument);
    CHECK_THROWS_AS(fit_holder_exponent(geometric_profile(2, 0.3, 0.5, 1.0, 1)), std::invalid_argument);
}

TEST_CASE("mean value inequalities") {
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    const ScalarField q = ScalarField::from_function(g, [](const Point& x) { return sq(x, 2); });
    CHECK(mean_value_check(q, kO, 0.5, INFINITY).pass);
    CHECK(mean_value_check(field_library("harmonic_saddle", g), kO, 0.5, 4.0).pass);
    CHECK_THROWS_AS(mean_value_constant(2, 1.0), std::invalid_argument);
    CHECK(mean_value_constant(2, INFINITY) > 0.0);
}

TEST_CASE("Harnack for harmonic functions") {
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    const ScalarField pk = field_library("poisson_kernel", g, {{"pole_radius", 1.5}});
    CHECK(weak_harnack_laplacian_check(pk, INFINITY).pass);
    for (double r : {0.125, 0.25}) {
        const CheckReport rep = harnack_quotient_check(pk, r);
        CHECK(rep.pass);
        CHECK(rep.constants.extra.at("bound") == doctest::Approx(std::pow((1.0 - r) / (1.0 - 3.0 * r), 2)));
    }
    CHECK_THROWS_AS(harnack_quotient_check(pk, 0.4), std::invalid_argument);
    const ScalarField neg = field_library("harmonic_saddle", g);
    CHECK_THROWS_AS(weak_harnack_laplacian_check(neg, INFINITY), HypothesisError);
    CHECK_THROWS_AS(harnack_quotient_check(neg, 0.25), HypothesisError);
}

TEST_CASE("distribution parameters and the weak Harnack check on a constant") {
    const Grid g = Grid::cube(2, 1.0 / 16.0, 1.5);
    const Ellipticity ell(1.0, 2.0);
    DistributionParams p;
    p.eta = 0.5;
    p.M = 2.0;
    const CheckReport r = weak_harnack_ue_check(ScalarField::constant(g, 1.0), ell, p);
    CHECK(*r.constants.C == doctest::Approx(2.0));
    CHECK(r.lhs == doctest::Approx(1.0));
    CHECK(r.rhs == doctest::Approx(2.0));
    CHECK(r.pass);
    p.M = 1.0;
    CHECK_THROWS_AS(weak_harnack_ue_check(ScalarField::constant(g, 1.0), ell, p), std::invalid_argument);
    CHECK_THROWS_AS(weak_harnack_ue_check(ScalarField::constant(g, -1.0), ell), HypothesisError);
    CHECK_THROWS_AS(weak_harnack_ue_check(ScalarField::constant(Grid::cube(2, 1.0 / 16.0, 1.0), 1.0), ell),
                    std::invalid_argument);
}

TEST_CASE("distribution curve is non-increasing in the level") {
    const Grid g = Grid::cube(2, 1.0 / 32.0, 1.0);
    std::mt19937_64 rng(53);
    const ScalarField u = test::random_field(g, rng, 0.0, 3.0);
    const auto curve = distribution_curve(u, Region::cube(kO, 1.0, true), 32);
    REQUIRE(curve.size() >= 2);
    for (std::size_t k = 1; k < curve.size(); ++k) {
        CHECK(curve[k].first > curve[k - 1].first);
        CHECK(curve[k].second <= curve[k - 1].second);
    }
}

TEST_CASE("uniformly elliptic checks on a solved supersolution") {
    const Ellipticity ell(1.0, 2.0);
    const Grid G = Grid::cube(2, 1.0 / 32.0, 2.0);
    const auto s = solve_pucci(G, Region::all(), PucciSign::Minus, ScalarField::constant(G, 0.0),
                               BoundaryData::from_function(G, [](const Point& x) { return 1.2 + 0.5 * x[0] + 0.3 * x[1] * x[1]; }),
                               ell);
    CHECK(weak_harnack_ue_check(s.field, ell).pass);
    CHECK(harnack_ue_check(s.field, ell).pass);
    CHECK(diminish_of_distribution_check(s.field, ell).pass);
    CHECK(harnack_ue_constant(2, ell) == 8.0);
}

TEST_CASE("local maximum principle") {
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    const ScalarField u = ScalarField::from_function(g, [](const Point& x) { return sq(x, 2) - 0.5; });
    CHECK(local_max_check(u).pass);
    LocalMaxParams pucci;
    pucci.ell = Ellipticity(1.0, 2.0);
    CHECK(local_max_check(u, pucci).pass);
    LocalMaxParams low;
    low.eps_exponent = 0.5;
    CHECK_THROWS_AS(local_max_constant(2, low), std::invalid_argument);
    LocalMaxParams sub;
    sub.p = 0.5;
    CHECK_THROWS_AS(local_max_check(u, sub), std::invalid_argument);
}

TEST_CASE("ball-average Laplacian and mollification") {
    const Grid g = Grid::cube(2, 1.0 / 128.0, 1.0);
    const auto bal = ball_average_laplacian(field_library("cosine", g), kO, 0.25);
    CHECK(bal.estimate == doctest::Approx(-1.0 / 8.0).epsilon(0.02));  // Laplacian / (2(n+2))
    CHECK(bal.report.pass);
    CHECK_THROWS_AS(ball_average_laplacian(field_library("cosine", g), kO, 0.04), std::invalid_argument);
    CHECK(mollification_identity_check(field_library("harmonic_saddle", g), 0.125).pass);
    CHECK_THROWS_AS(mollification_identity_check(field_library("harmonic_saddle", g), 0.01), std::invalid_argument);
}

TEST_CASE("Morrey and Rolle") {
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    CHECK(morrey_check(field_library("abs_power", g, {{"alpha", 0.5}}), 8.0).pass);
    CHECK_THROWS_AS(morrey_check(field_library("abs_power", g), 2.0), std::invalid_argument);
    CHECK_THROWS_AS(morrey_constant(3, 3.0), std::invalid_argument);
    const auto rolle = rolle_gradient_point(field_library("harmonic_saddle", g), {0.1, 0.1, 0.0}, 0.3);
    CHECK(rolle.report.pass);
    CHECK(dist(rolle.x2, {0.1, 0.1, 0.0}, 2) <= 0.3 + 1e-12);
    CHECK_THROWS_AS(rolle_gradient_point(field_library("harmonic_saddle", g), kO, 0.0), std::invalid_argument);
}

}  // TEST_SUITE
