#include "kslab/suites.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "kslab/contact.hpp"
#include "kslab/coverings.hpp"
#include "kslab/regularity.hpp"
#include "kslab/solvers.hpp"

namespace kslab {

namespace {

constexpr Point kOrigin{0.0, 0.0, 0.0};

struct Context {
    const SuiteSpec& spec;
    int dim;
    double h;
    Ellipticity ell;
    std::vector<CheckReport>* out;

    double param(const std::string& key, double fallback) const {
        auto it = spec.params.find(key);
        if (it == spec.params.end()) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("suite parameter " + key + " is not a number: " + it->second);
        }
    }

    void run(const std::string& name, const std::function<CheckReport()>& fn) const {
        CheckReport r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r = CheckReport{};
            r.dim = dim;
            r.fail(std::string("error: ") + e.what());
        }
        r.name = name;
        out->push_back(std::move(r));
    }
};

CheckReport simple(const std::string& name, double lhs, double rhs, double tol, int dim, double h) {
    CheckReport r;
    r.name = name;
    r.lhs = lhs;
    r.rhs = rhs;
    r.tolerance = tol;
    r.dim = dim;
    r.h = h;
    return r.finalize();
}

double default_h(int dim) { return dim == 3 ? 1.0 / 24.0 : (dim == 1 ? 1.0 / 1024.0 : 1.0 / 128.0); }

void need_dim(const Context& c, int lo, const std::string& suite) {
    if (c.dim < lo) throw std::invalid_argument(suite + " needs --dim " + std::to_string(lo) + " or more");
}

// ---------------------------------------------------------------- laplacian-core

void laplacian_core(const Context& c) {
    need_dim(c, 2, "laplacian-core");
    const int n = c.dim;
    const Grid g = Grid::cube(n, c.h, 1.0);
    const double mv_tol = c.param("tolerance", 5.0 * c.h);
    const std::vector<std::pair<std::string, LibraryParams>> harmonic{
        {"harmonic_saddle", {}},
        {"harmonic_cubic", {}},
        {"harmonic_exp", {{"k", 1.0}}},
        {"poisson_kernel", {{"pole_radius", 1.5}}},
        {"poisson_kernel", {{"polex", 1.0}, {"poley", 1.0}, {"pole_radius", 1.25}}}};
    for (std::size_t k = 0; k < harmonic.size(); ++k) {
        const auto& [name, params] = harmonic[k];
        c.run("mean_value_deviation/" + name + "/" + std::to_string(k), [&] {
            const ScalarField u = field_library(name, g, params);
            const auto nodes = ball_nodes(g, kOrigin, 0.5, true);
            double avg = 0.0;
            for (std::size_t i : nodes) avg += u[i];
            avg /= static_cast<double>(nodes.size());
            return simple("", std::abs(avg - u[*g.node_at(kOrigin)]), 0.0, mv_tol, n, c.h);
        });
    }
    const ScalarField sq = ScalarField::from_function(g, [n](const Point& x) { return norm(x, n) * norm(x, n); });
    const ScalarField pk = field_library("poisson_kernel", g, {{"pole_radius", 1.5}});
    c.run("mean_value/subharmonic", [&] { return mean_value_check(sq, kOrigin, 0.5, INFINITY); });
    c.run("mean_value/superharmonic", [&] {
        ScalarField neg = sq;
        for (auto& v : neg.values()) v = -v;
        return mean_value_check(neg, kOrigin, 0.5, INFINITY);
    });
    c.run("mean_value/poisson_kernel_p4", [&] { return mean_value_check(pk, kOrigin, 0.5, 4.0); });
    c.run("weak_harnack_laplacian/poisson_kernel", [&] { return weak_harnack_laplacian_check(pk, INFINITY); });
    c.run("weak_harnack_laplacian/affine", [&] {
        return weak_harnack_laplacian_check(ScalarField::from_function(g, [](const Point& x) { return 1.0 + x[0]; }),
                                            INFINITY);
    });
    c.run("harnack_quotient/r=1/8", [&] { return harnack_quotient_check(pk, 0.125); });
    c.run("harnack_quotient/r=1/4", [&] { return harnack_quotient_check(pk, 0.25); });
    c.run("local_max/laplacian", [&] {
        const ScalarField u = ScalarField::from_function(g, [n](const Point& x) { return norm(x, n) * norm(x, n) - 0.5; });
        return local_max_check(u, {});
    });
    c.run("ball_average_laplacian/cosine", [&] {
        return ball_average_laplacian(field_library("cosine", g), kOrigin, std::max(0.25, 8.0 * c.h)).report;
    });
    c.run("mollification/saddle", [&] { return mollification_identity_check(field_library("harmonic_saddle", g), 0.125); });
    c.run("morrey/abs_power", [&] { return morrey_check(field_library("abs_power", g, {{"alpha", 0.5}}), 8.0); });
    c.run("rolle/saddle", [&] {
        return rolle_gradient_point(field_library("harmonic_saddle", g), {0.1, 0.1, 0.0}, 0.3).report;
    });
    c.run("decay/geometric", [&] { return decay_implies_modulus_check(geometric_profile(n, 0.3, 0.5, 1.0, 12), 0.3); });
    c.run("decay/abs_power", [&] {
        const double rho = 0.5, beta = 0.5;
        const int depth = std::max(1, static_cast<int>(std::floor(std::log2(0.25 / c.h) + 1e-9)));
        const auto prof = oscillation_profile(field_library("abs_power", g, {{"alpha", beta}}), kOrigin, rho, 0.5, depth);
        return decay_implies_modulus_check(prof, 1.0 - std::pow(rho, beta));
    });
    c.run("holder_fit/abs_power", [&] {
        const auto prof = oscillation_profile(field_library("abs_power", g, {{"alpha", 0.5}}), kOrigin, 0.5, 0.5,
                                              static_cast<int>(std::floor(std::log2(0.25 / c.h))));
        const auto fit = fit_holder_exponent(prof);
        auto r = simple("", std::abs(fit.alpha_hat - 0.5), 0.05 * 0.5, 0.0, n, c.h);
        r.measured["alpha_hat"] = fit.alpha_hat;
        r.measured["r_squared"] = fit.r_squared;
        return r;
    });
    c.run("holder_fit/log_counterexample", [&] {
        const auto fn = [n](const Point& x) {
            const double r = norm(x, n);
            return r == 0.0 ? 0.0 : 1.0 / std::abs(std::log(std::min(r, 0.5)));
        };
        const auto fit = fit_holder_exponent(oscillation_profile(fn, n, kOrigin, std::ldexp(1.0, -16), 0.25, 8, 8));
        auto r = simple("", fit.alpha_hat, 0.05, 0.0, n, 0.0);
        r.measured["alpha_hat"] = fit.alpha_hat;
        return r;
    });
}

// ---------------------------------------------------------------- uniformly-elliptic-core

struct SolvedFamily {
    std::string name;
    ScalarField u;
    ScalarField f;
    double residual;
};

std::vector<SolvedFamily> supersolutions(const Context& c) {
    const int n = c.dim;
    const double ph = c.param("pucci_h", n == 3 ? 1.0 / 8.0 : 1.0 / 32.0);
    const Grid G = Grid::cube(n, ph, 2.0);
    std::vector<SolvedFamily> out;
    const std::vector<std::pair<std::string, std::function<double(const Point&)>>> data{
        {"tilted", [](const Point& x) { return 1.2 + 0.5 * x[0] + 0.3 * x[1] * x[1]; }},
        {"spiked", [n](const Point& x) { return 0.3 + 0.1 * norm(x, n) * norm(x, n); }}};
    for (std::size_t k = 0; k < data.size(); ++k) {
        const double amp = k == 1 ? -4.0 : 0.0;
        const ScalarField f = ScalarField::from_function(
            G, [amp, n](const Point& x) { return amp * std::exp(-norm(x, n) * norm(x, n) / 0.05); });
        const auto s = solve_pucci(G, Region::all(), PucciSign::Minus, f, BoundaryData::from_function(G, data[k].second),
                                   c.ell);
        out.push_back({data[k].first, s.field, f, s.residual});
    }
    return out;
}

void uniformly_elliptic_core(const Context& c) {
    std::vector<SolvedFamily> fams;
    c.run("solve/pucci_minus", [&] {
        fams = supersolutions(c);
        CheckReport r = simple("", 0.0, 0.0, 0.0, c.dim, 0.0);
        r.measured["solutions"] = static_cast<double>(fams.size());
        return r;
    });
    for (const auto& s : fams) {
        const std::string tag = "/" + s.name;
        c.run("pucci_sandwich" + tag, [&] {
            ScalarField bound = s.f;
            for (auto& v : bound.values()) v = std::abs(v);
            return pucci_sandwich_residual(s.u, bound, c.ell, 10.0 * s.residual + 1e-12);
        });
        c.run("weak_harnack_ue" + tag, [&] { return weak_harnack_ue_check(s.u, c.ell); });
        c.run("diminish_of_distribution" + tag, [&] { return diminish_of_distribution_check(s.u, c.ell); });
        c.run("harnack_ue" + tag, [&] { return harnack_ue_check(s.u, c.ell); });
        c.run("local_max_pucci" + tag, [&] {
            LocalMaxParams p;
            p.ell = c.ell;
            return local_max_check(s.u, p);
        });
    }
}

// ---------------------------------------------------------------- contact-geometry

ScalarField random_semiconvex(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int n = g.dim();
    struct Mode {
        double a, ph;
        Point k;
    };
    std::vector<Mode> modes(6);
    for (auto& m : modes) {
        m.a = 0.02 * U(rng);
        m.ph = 3.0 * U(rng);
        m.k = {3.0 * U(rng), 3.0 * U(rng), 3.0 * U(rng)};
    }
    const double q = 0.1 * (U(rng) + 1.0);
    return ScalarField::from_function(g, [=](const Point& x) {
        double s = q * norm(x, n) * norm(x, n);
        for (const auto& m : modes) {
            double t = m.ph;
            for (int d = 0; d < n; ++d) t += m.k[d] * x[d];
            s += m.a * std::cos(t);
        }
        return s;
    });
}

void contact_geometry(const Context& c) {
    need_dim(c, 2, "contact-geometry");
    const int n = c.dim;
    std::mt19937_64 rng(c.spec.seed);
    c.run("measure_estimate/zero", [&] {
        return measure_estimate_check(ScalarField::constant(Grid::cube(n, c.h, 1.5), 0.0), c.ell, 0.1);
    });
    c.run("contact_set/zero_equals_B_quarter", [&] {
        const Grid g = Grid::cube(n, c.h, 1.0);
        const ParaboloidFamily fam{1.0, ParaboloidSign::Concave, Region::ball(kOrigin, 0.25, true), 0.0};
        ContactOptions opts;
        opts.domain = Region::ball(kOrigin, 1.0);
        const ContactSet cs = contact_set(ScalarField::constant(g, 0.0), fam, opts);
        const auto expect = Region::ball(kOrigin, 0.25, true).membership(g);
        std::vector<std::uint8_t> got(g.size(), 0);
        for (std::size_t i : cs.contact_nodes()) got[i] = 1;
        std::size_t diff = 0;
        for (std::size_t i = 0; i < g.size(); ++i) diff += got[i] != expect[i];
        return simple("", static_cast<double>(diff), 0.0, 0.0, n, c.h);
    });
    for (int k = 0; k < 3; ++k)
        c.run("area_formula/semiconvex/" + std::to_string(k), [&] {
            const Grid g = Grid::cube(n, std::max(c.h, n == 3 ? 1.0 / 24.0 : 1.0 / 64.0), 1.0);
            const ScalarField u = random_semiconvex(g, rng);
            const ParaboloidFamily fam{1.0, ParaboloidSign::Concave, Region::ball(kOrigin, 0.25, true), 0.0};
            ContactOptions opts;
            opts.domain = Region::ball(kOrigin, 1.0);
            const ContactSet cs = contact_set(u, fam, opts);
            return area_formula_check(cs, transport_map(cs, u, fam), fam.center_set);
        });
    const Grid g1 = Grid::cube(n, std::max(c.h, 1.0 / 64.0), 1.0);
    const ScalarField bowl = ScalarField::from_function(g1, [n](const Point& x) { return norm(x, n) * norm(x, n) - 1.0; });
    c.run("abp/bowl", [&] { return abp_bound(bowl, c.ell); });
    c.run("aleksandrov/bowl", [&] { return aleksandrov_check(bowl, Region::ball(kOrigin, 1.0)); });
    c.run("localization/affine", [&] {
        return localization_check(ScalarField::from_function(Grid::cube(n, std::max(c.h, 1.0 / 64.0), 1.0),
                                                             [](const Point& x) { return 0.5 + 0.25 * x[0]; }),
                                  c.ell, 0.25, 0.1);
    });
    c.run("hessian_contact/saddle", [&] {
        return hessian_contact_set(field_library("harmonic_saddle", g1, {{"scale", 0.25}}), 1.0,
                                   Region::ball(kOrigin, 0.25, true))
            .report;
    });
    c.run("inf_convolution/brute_force", [&] {
        const Grid g(2, 1.0 / 32.0, {-1.0, -1.0, 0.0}, {33, 33, 1});
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        std::vector<double> v(g.size());
        for (auto& x : v) x = U(rng);
        const ScalarField u(g, v);
        const double eps = 0.1;
        const ScalarField w = inf_convolution(u, eps);
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double best = INFINITY;
            for (std::size_t j = 0; j < g.size(); ++j)
                best = std::min(best, u[j] + dist2(g.point(i), g.point(j), 2) / (2.0 * eps));
            worst = std::max(worst, std::abs(best - w[i]));
        }
        return simple("", worst, 0.0, 1e-12, 2, g.h());
    });
    c.run("inf_convolution/huber", [&] {
        const double eps = 0.25;
        const ScalarField a = ScalarField::from_function(g1, [n](const Point& x) { return norm(x, n); });
        const ScalarField w = inf_convolution(a, eps);
        const ScalarField hub = field_library("huber", g1, {{"eps", eps}});
        double worst = 0.0;
        for (std::size_t i = 0; i < g1.size(); ++i)
            if (norm(g1.point(i), n) <= 0.5) worst = std::max(worst, std::abs(w[i] - hub[i]));
        return simple("", worst, 0.0, g1.h(), n, g1.h());
    });
    c.run("inf_convolution/semigroup", [&] {
        const double e1 = 0.1, e2 = 0.15;
        const ScalarField u = random_semiconvex(g1, rng);
        const ScalarField a = inf_convolution(inf_convolution(u, e1), e2);
        const ScalarField b = inf_convolution(u, e1 + e2);
        double worst = 0.0;
        for (std::size_t i = 0; i < g1.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        return simple("", worst, 0.0, 2.0 * g1.h() * g1.h() * (1.0 / e1 + 1.0 / e2), n, g1.h());
    });
}

// ---------------------------------------------------------------- coverings

bool in_closed_box(const Box& b, const Point& p, int dim) {
    for (int d = 0; d < dim; ++d)
        if (p[d] < b.lo[d] || p[d] > b.hi[d]) return false;
    return true;
}

Cylinder random_cylinder(int dim, int generation, std::mt19937_64& rng) {
    Cylinder z;
    z.Q.generation = generation;
    const std::int64_t side = std::int64_t{1} << generation;
    for (int d = 0; d < dim; ++d) z.Q.coords[d] = std::uniform_int_distribution<std::int64_t>(0, side - 1)(rng);
    z.time_index = std::uniform_int_distribution<std::int64_t>(0, side * side - 1)(rng);
    return z;
}

// sum_{k=1..5} a_k sin(2 pi k x + phi_k) with a_k ~ U(-1,1)/k
ScalarField random_trig_field(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.0, 2.0 * std::numbers::pi);
    std::array<double, 5> a{}, ph{};
    for (int k = 0; k < 5; ++k) {
        a[k] = U(rng) / (k + 1);
        ph[k] = P(rng);
    }
    return ScalarField::from_function(g, [a, ph](const Point& x) {
        double s = 0.0;
        for (int k = 0; k < 5; ++k) s += a[k] * std::sin(2.0 * std::numbers::pi * (k + 1) * x[0] + ph[k]);
        return s;
    });
}

void coverings_suite(const Context& c) {
    const int n = c.dim;
    std::mt19937_64 rng(c.spec.seed);
    const int depth = static_cast<int>(c.param("depth", 10));
    c.run("dyadic/half_interval", [&] {
        const Region E = Region::halfspace({-1.0, 0.0, 0.0}, 0.0).intersect(Region::cube(kOrigin, 1.0, true));
        const Decomposition dec = dyadic_decomposition(1, E, depth);
        // [2^-k-1, 2^-k] is the generation k+1 cube with coordinate 2^k + 1
        std::vector<std::pair<int, std::int64_t>> got, want;
        for (const auto& q : dec.cubes) got.emplace_back(q.index.generation, q.index.coords[0]);
        for (int k = 1; k <= depth; ++k) want.emplace_back(k + 1, (std::int64_t{1} << k) + 1);
        std::sort(got.begin(), got.end());
        const double residual_error = std::abs(dec.residual_measure - std::ldexp(1.0, -depth - 1));
        auto r = simple("", (got == want ? 0.0 : 1.0) + residual_error, 0.0, 0.0, 1, 0.0);
        r.measured["cubes"] = static_cast<double>(dec.cubes.size());
        r.measured["residual_measure"] = dec.residual_measure;
        return r;
    });
    c.run("dyadic/random_regions", [&] {
        std::size_t bad = 0, total = 0;
        const int count = static_cast<int>(c.param("regions", 100));
        for (int t = 0; t < count; ++t) {
            const Region E = random_region(n, rng);
            const Decomposition dec = dyadic_decomposition(n, E, n == 3 ? 4 : 6);
            total += dec.cubes.size();
            for (std::size_t a = 0; a < dec.cubes.size(); ++a) {
                const auto& q = dec.cubes[a];
                if (E.relate(q.box(n)) != BoxRelation::Inside) ++bad;
                if (q.index.generation > 0 && (!q.witness || E.contains(*q.witness, n) ||
                                               !in_closed_box(dyadic_box(n, dyadic_parent(q.index)), *q.witness, n)))
                    ++bad;
                for (std::size_t b = a + 1; b < dec.cubes.size(); ++b)
                    if (!dyadic_interiors_disjoint(q.index, dec.cubes[b].index)) ++bad;
            }
            if (dec.selected_cells + dec.residual_cells + dec.discarded_cells != dec.total_cells) ++bad;
        }
        auto r = simple("", static_cast<double>(bad), 0.0, 0.0, n, 0.0);
        r.measured["regions"] = count;
        r.measured["cubes"] = static_cast<double>(total);
        return r;
    });
    c.run("cz_selection/random", [&] {
        const Region F = random_region(n, rng);
        const double eta = 0.5;
        const CzSelection cz = cz_selection(n, F, eta, n == 3 ? 4 : 6);
        std::size_t bad = 0;
        for (std::size_t k = 0; k < cz.densities.size(); ++k) {
            if (cz.densities[k] <= eta - 1e-15) ++bad;
            if (cz.decomposition.cubes[k].index.generation > 0 && cz.parent_densities[k] > eta + 1e-15) ++bad;
        }
        auto r = simple("", static_cast<double>(bad), 0.0, 0.0, n, 0.0);
        r.measured["selected"] = static_cast<double>(cz.densities.size());
        r.measured["uncovered_F_cells"] = static_cast<double>(cz.uncovered_cells);
        return r;
    });
    c.run("vitali/random", [&] {
        std::uniform_real_distribution<double> U(-1.0, 1.0), R(0.01, 0.2);
        std::vector<Ball> balls(200);
        for (auto& b : balls) {
            for (int d = 0; d < n; ++d) b.center[d] = U(rng);
            b.radius = R(rng);
        }
        const auto sel = vitali_select(n, balls);
        auto r = simple("", (sel.disjoint ? 0.0 : 1.0) + (sel.five_cover ? 0.0 : 1.0), 0.0, 0.0, n, 0.0);
        r.measured["selected"] = static_cast<double>(sel.selected.size());
        return r;
    });
    c.run("stacking/random", [&] {
        std::uniform_int_distribution<int> gen(0, 3), mm(1, 4), count(1, 6);
        double worst = INFINITY;
        for (int t = 0; t < 1000; ++t) {
            std::vector<Cylinder> cyl(count(rng));
            for (auto& z : cyl) z = random_cylinder(n, gen(rng), rng);
            auto rep = stacking(n, cyl, mm(rng));
            worst = std::min(worst, rep.margin);
            if (!rep.pass) return rep;
        }
        return simple("", 0.0, worst, 0.0, n, 0.0);
    });
    c.run("stacking/single_cylinder_equality", [&] {
        std::uniform_int_distribution<int> gen(0, 3), mm(1, 6);
        double worst = 0.0;
        for (int t = 0; t < 20; ++t)
            worst = std::max(worst, std::abs(stacking(n, {random_cylinder(n, gen(rng), rng)}, mm(rng)).margin));
        return simple("", worst, 0.0, 0.0, n, 0.0);
    });
    c.run("ink_spots/point_in_ball", [&] {
        const Grid g = Grid::cube(n, n == 3 ? 1.0 / 16.0 : 1.0 / 64.0, 1.0);
        return ink_spots_check(Region::ball(kOrigin, 1.0), Region::point(kOrigin), 0.5, g).report;
    });
    c.run("sun_rising/sine", [&] {
        const Grid g(1, 1.0 / 1024.0, {0.0, 0.0, 0.0}, {1025, 1, 1});
        const ScalarField u =
            ScalarField::from_function(g, [](const Point& x) { return std::sin(2.0 * std::numbers::pi * x[0]); });
        return sun_rising(u, 20.0).report;
    });
    c.run("sun_rising/random_trig", [&] {
        const Grid g(1, 1.0 / 1024.0, {0.0, 0.0, 0.0}, {1025, 1, 1});
        std::size_t failed = 0;
        double worst = INFINITY;
        for (int t = 0; t < 50; ++t) {
            const ScalarField u = random_trig_field(g, rng);
            for (double m : {2.0, 5.0, 10.0, 20.0}) {
                const auto rep = sun_rising(u, m).report;
                failed += !rep.pass;
                worst = std::min(worst, rep.margin + rep.tolerance);
            }
        }
        auto r = simple("", static_cast<double>(failed), 0.0, 0.0, 1, g.h());
        r.measured["worst_margin_with_slack"] = worst;
        return r;
    });
}

// ---------------------------------------------------------------- fractional

// Direct midpoint quadrature of 2 int_0^L (2 e^{-y^2} - 2) / y^2 dy plus the exact tail -4/L,
// refined once and Richardson-combined (the integrand is smooth, so the error is O(dy^2)).
double gaussian_reference(double dy, double L) {
    auto sum = [L](double step) {
        double s = 0.0;
        const auto cells = static_cast<std::int64_t>(std::llround(L / step));
        for (std::int64_t i = 0; i < cells; ++i) {
            const double y = (static_cast<double>(i) + 0.5) * step;
            s += 2.0 * std::expm1(-y * y) / (y * y) * step;
        }
        return 2.0 * s - 4.0 / L;
    };
    const double coarse = sum(dy), fine = sum(dy / 2.0);
    return (4.0 * fine - coarse) / 3.0;
}

void fractional_suite(const Context& c) {
    c.run("fractional/linear", [&] {
        const Grid g = Grid::cube(2, 1.0 / 32.0, 2.0);
        const ScalarField u = ScalarField::from_function(g, [](const Point& x) { return 0.3 * x[0] - 0.7 * x[1]; });
        FractionalParams p;
        p.R = 2.0;
        const auto ev = fractional_laplacian(u, Region::point(kOrigin), p);
        return simple("", std::abs(ev.values[0]), 0.0, 1e-10, 2, g.h());
    });
    c.run("fractional/strict_max", [&] {
        const Grid g = Grid::cube(2, 1.0 / 32.0, 2.0);
        const ScalarField u = ScalarField::from_function(g, [](const Point& x) { return std::exp(-4.0 * (x[0] * x[0] + x[1] * x[1])); });
        FractionalParams p;
        p.R = 2.0;
        const auto ev = fractional_laplacian(u, Region::point(kOrigin), p);
        return simple("", ev.values[0], 0.0, 0.0, 2, g.h());
    });
    c.run("fractional/gaussian_1d", [&] {
        const Grid g = Grid::cube(1, 1.0 / 256.0, 16.0);
        const ScalarField u = ScalarField::from_function(g, [](const Point& x) { return std::exp(-x[0] * x[0]); });
        FractionalParams p;
        p.R = 16.0;
        p.level = 3;
        const auto ev = fractional_laplacian(u, Region::point(kOrigin), p);
        const double ref = gaussian_reference(1.0 / 4096.0, 64.0);
        auto r = simple("", std::abs(ev.values[0] - ref), 0.01 * std::abs(ref), 0.0, 1, g.h());
        r.measured["value"] = ev.values[0];
        r.measured["reference"] = ref;
        return r;
    });
    c.run("fractional/scaling", [&] {
        const Grid g = Grid::cube(1, 1.0 / 256.0, 16.0);
        FractionalParams p;
        p.R = 16.0;
        p.level = 3;
        p.sigma = 0.8;
        const ScalarField u = ScalarField::from_function(g, [](const Point& x) { return std::exp(-x[0] * x[0]); });
        const ScalarField v = ScalarField::from_function(g, [](const Point& x) { return std::exp(-x[0] * x[0] / 4.0); });
        const auto a = fractional_laplacian(u, Region::point(kOrigin), p);
        const auto b = fractional_laplacian(v, Region::point(kOrigin), p);
        const double expect = std::pow(2.0, -p.sigma) * a.values[0];
        return simple("", std::abs(b.values[0] - expect), 0.0, a.error_bounds[0] + b.error_bounds[0] + 1e-3 * std::abs(expect),
                      1, g.h());
    });
}

// ---------------------------------------------------------------- probabilistic

void probabilistic_suite(const Context& c) {
    need_dim(c, 2, "probabilistic");
    const int n = c.dim;
    WalkConfig w;
    w.seed = c.spec.seed;
    w.h = c.param("walk_h", 1.0 / 16.0);
    w.n_samples = static_cast<std::uint64_t>(c.param("samples", 100000));
    const double rho = 0.25;
    const Region half = Region::halfspace({-1.0, 0.0, 0.0}, 0.0);
    c.run("random_walk/oracle", [&] {
        const Region target = Region::ball(kOrigin, rho, true).intersect(half);
        const Point start{0.5, 0.0, 0.0};
        const auto est = random_walk_hitting(n, target, start, w);
        const auto orc = discrete_hitting_oracle(n, target, w.h);
        const double v = orc.field[orc.field.grid().nearest_node(start)];
        const double sigma = est.halfwidth / 1.96;
        auto r = simple("", std::abs(est.probability - v), 0.0, 3.0 * sigma, n, w.h);
        r.seed = w.seed;
        r.measured["estimate"] = est.probability;
        r.measured["oracle"] = v;
        r.measured["capped_fraction"] = est.capped_fraction();
        if (est.capped_fraction() > 0.01) r.fail("capped walks exceed 1% of the samples");
        return r;
    });
    WalkConfig wh = w;
    wh.n_samples = static_cast<std::uint64_t>(c.param("harnack_samples", 4000));
    const Region H1 = Region::halfspace({-1.0, 0.0, 0.0}, 0.0), H2 = Region::halfspace({0.0, -1.0, 0.0}, 0.0);
    const std::vector<std::pair<std::string, Region>> family{
        {"quarter", H1.intersect(H2)},
        {"half", H1},
        {"three_quarter", Region::all().minus(Region::halfspace({1.0, 0.0, 0.0}, 0.0).intersect(
                              Region::halfspace({0.0, 1.0, 0.0}, 0.0)))}};
    std::vector<double> mins;
    for (const auto& [name, A] : family)
        c.run("probabilistic_harnack/" + name, [&] {
            auto r = probabilistic_harnack_check(n, rho, A, wh);
            mins.push_back(r.measured.at("min_estimate"));
            return r;
        });
    c.run("probabilistic_harnack/ordered", [&] {
        if (mins.size() != 3) throw std::runtime_error("family runs incomplete");
        // each min-v estimate carries a 95% halfwidth of at most 1.96 / (2 sqrt(n))
        const double slack = 2.0 * 1.96 / (2.0 * std::sqrt(static_cast<double>(wh.n_samples)));
        const double worst = std::max(mins[0] - mins[1], mins[1] - mins[2]);
        return simple("", worst, 0.0, slack, n, wh.h);
    });
    c.run("probabilistic_harnack/disjoint", [&] {
        return probabilistic_harnack_check(n, rho, Region::ball({0.9, 0.0, 0.0}, 0.05, true), wh);
    });
    c.run("random_walk/monotone", [&] {
        const Point start{0.0, 0.5, 0.0};
        WalkConfig wm = w;
        wm.n_samples = std::min<std::uint64_t>(w.n_samples, 20000);
        const auto small = random_walk_hitting(n, family[0].second.intersect(Region::ball(kOrigin, rho, true)), start, wm);
        const auto large = random_walk_hitting(n, family[2].second.intersect(Region::ball(kOrigin, rho, true)), start, wm);
        auto r = simple("", small.probability, large.probability, 2.0 * large.halfwidth, n, wm.h);
        r.seed = wm.seed;
        return r;
    });
}

// ---------------------------------------------------------------- hessian-estimates

void hessian_estimates(const Context& c) {
    need_dim(c, 2, "hessian-estimates");
    const int n = c.dim;
    const double ph = c.param("pucci_h", n == 3 ? 1.0 / 12.0 : 1.0 / 48.0);
    const Grid G = Grid::cube(n, ph, 1.0);
    const Region B1 = Region::ball(kOrigin, 1.0);
    const std::vector<std::pair<std::string, std::function<double(const Point&)>>> data{
        {"smooth", [](const Point& x) { return std::sin(2.0 * x[0]) + x[1] * x[1]; }},
        {"kinked", [](const Point& x) { return std::abs(x[0] - 0.2 * x[1]); }}};
    SolverConfig cfg;
    cfg.tolerance = 1e-9;
    for (const auto& [name, gfun] : data) {
        std::optional<SolveResult> sol;
        c.run("solve/pucci_plus/" + name, [&] {
            sol = solve_pucci(G, B1, PucciSign::Plus, ScalarField::constant(G, 0.0), BoundaryData::from_function(G, gfun),
                              c.ell, cfg);
            auto r = simple("", sol->residual, cfg.tolerance, 0.0, n, ph);
            r.measured["iterations"] = static_cast<double>(sol->iterations);
            return r;
        });
        if (!sol) continue;
        std::vector<Point> dirs{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {std::sqrt(0.5), std::sqrt(0.5), 0.0}};
        for (std::size_t k = 0; k < dirs.size(); ++k) {
            std::optional<SecondDifferenceReports> reps;
            const std::string tag = "/" + name + "/e" + std::to_string(k);
            c.run("second_difference_supersolution" + tag, [&] {
                reps = second_difference_checks(sol->field, B1, c.ell, dirs[k], sol->residual);
                return reps->supersolution;
            });
            c.run("second_difference_lower_bound" + tag, [&] {
                if (!reps) throw std::runtime_error("second difference unavailable");
                return reps->lower_bound;
            });
        }
    }
}

using SuiteFn = void (*)(const Context&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
    static const std::vector<std::pair<std::string, SuiteFn>> r{
        {"laplacian-core", laplacian_core},         {"uniformly-elliptic-core", uniformly_elliptic_core},
        {"contact-geometry", contact_geometry},     {"coverings", coverings_suite},
        {"fractional", fractional_suite},           {"probabilistic", probabilistic_suite},
        {"hessian-estimates", hessian_estimates}};
    return r;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace

bool ReportDocument::all_pass() const { return passed() == checks.size(); }

std::size_t ReportDocument::passed() const {
    std::size_t k = 0;
    for (const auto& r : checks) k += r.pass;
    return k;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [name, fn] : registry()) v.push_back(name);
        v.push_back("full");
        return v;
    }();
    return names;
}

const std::vector<std::string>& suite_param_keys() {
    static const std::vector<std::string> keys{"tolerance", "pucci_h", "walk_h", "samples", "harnack_samples", "depth", "regions"};
    return keys;
}

ReportDocument run_suite(const SuiteSpec& spec) {
    if (std::find(suite_names().begin(), suite_names().end(), spec.name) == suite_names().end())
        throw std::invalid_argument("unknown suite: " + spec.name);
    if (spec.dim < 1 || spec.dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
    for (const auto& [key, value] : spec.params)
        if (std::find(suite_param_keys().begin(), suite_param_keys().end(), key) == suite_param_keys().end())
            throw std::invalid_argument("unknown suite parameter: " + key);
    const double h = spec.h.value_or(default_h(spec.dim));
    if (!(h > 0.0 && h <= 0.25)) throw std::invalid_argument("grid spacing must lie in (0,1/4]");
    ReportDocument doc;
    doc.suite = spec.name;
    doc.spec = spec;
    doc.h = h;
    doc.timestamp = utc_now();
    const Context ctx{spec, spec.dim, h, Ellipticity(spec.lambda, spec.Lambda), &doc.checks};
    // parse numeric parameters up front so malformed values are usage errors
    for (const auto& [key, value] : spec.params) (void)ctx.param(key, 0.0);
    for (const auto& [name, fn] : registry()) {
        if (spec.name != "full" && spec.name != name) continue;
        const std::size_t before = doc.checks.size();
        if (spec.name == "full" && spec.dim < 2 && name != "coverings" && name != "fractional") continue;
        fn(ctx);
        if (spec.name == "full")
            for (std::size_t k = before; k < doc.checks.size(); ++k) doc.checks[k].name = name + ":" + doc.checks[k].name;
    }
    if (spec.params.count("tolerance")) {
        const double t = ctx.param("tolerance", 0.0);
        for (auto& r : doc.checks) {
            const bool failed_otherwise = !r.pass && r.margin >= -r.tolerance;
            r.tolerance = t;
            r.finalize();
            if (failed_otherwise) r.pass = false;
        }
    }
    return doc;
}

json to_json(const ReportDocument& doc) {
    json j;
    j["timestamp"] = doc.timestamp;
    j["suite"] = doc.suite;
    json env;
    env["version"] = "0.1.0";
    env["dim"] = doc.spec.dim;
    env["h"] = doc.h;
    env["lambda"] = doc.spec.lambda;
    env["Lambda"] = doc.spec.Lambda;
    env["seed"] = doc.spec.seed;
    env["params"] = json::object();
    for (const auto& [k, v] : doc.spec.params) env["params"][k] = v;
    j["environment"] = env;
    j["summary"] = {{"checks", doc.checks.size()}, {"passed", doc.passed()}, {"all_pass", doc.all_pass()}};
    json table = json::array();
    for (const auto& r : doc.checks) table.push_back({{"check", r.name}, {"constants", to_json(r.constants)}});
    j["constants"] = table;
    json checks = json::array();
    for (const auto& r : doc.checks) checks.push_back(to_json(r));
    j["checks"] = checks;
    return j;
}

json merge_reports(const std::vector<json>& docs) {
    json out;
    out["timestamp"] = utc_now();
    out["suite"] = "merged";
    json sources = json::array(), checks = json::array(), table = json::array();
    std::size_t passed = 0;
    for (const auto& d : docs) {
        if (!d.contains("checks") || !d["checks"].is_array()) throw std::invalid_argument("not a report document");
        sources.push_back({{"suite", d.value("suite", "")}, {"environment", d.value("environment", json::object())}});
        for (const auto& c : d["checks"]) {
            const CheckReport r = check_report_from_json(c);
            passed += r.pass;
            checks.push_back(c);
            table.push_back({{"check", r.name}, {"constants", c.value("constants", json::object())}});
        }
    }
    out["sources"] = sources;
    out["summary"] = {{"checks", checks.size()}, {"passed", passed}, {"all_pass", passed == checks.size()}};
    out["constants"] = table;
    out["checks"] = checks;
    return out;
}

Region random_region(int dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-0.5, 0.5), R(0.1, 0.45);
    std::uniform_int_distribution<int> kind(0, 3), ops(1, 3), op(0, 1);
    auto centre = [&] {
        Point p{0.0, 0.0, 0.0};
        for (int d = 0; d < dim; ++d) p[d] = U(rng);
        return p;
    };
    auto leaf = [&]() -> Region {
        switch (kind(rng)) {
            case 0: return Region::ball(centre(), R(rng));
            case 1: return Region::cube(centre(), 2.0 * R(rng), true);
            case 2: {
                const double a = R(rng);
                return Region::annulus(centre(), 0.3 * a, a + 0.1);
            }
            default: {
                Point nrm = centre();
                if (norm(nrm, dim) < 1e-3) nrm[0] = 1.0;
                return Region::halfspace(nrm, 0.3 * U(rng));
            }
        }
    };
    Region r = leaf();
    const int k = ops(rng);
    for (int i = 1; i < k; ++i) r = op(rng) == 0 ? r.intersect(leaf()) : r.minus(leaf());
    return r;
}

}  // namespace kslab
