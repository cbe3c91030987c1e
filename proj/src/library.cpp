#include <cmath>
#include <stdexcept>

#include "kslab/solvers.hpp"

namespace kslab {

namespace {

double param(const LibraryParams& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

Point centre_of(const LibraryParams& p, const std::string& prefix) {
    return {param(p, prefix + "x", 0.0), param(p, prefix + "y", 0.0), param(p, prefix + "z", 0.0)};
}

// Masked singular family: the mask radius must cover the singular point.
ScalarField singular(const Grid& grid, const LibraryParams& p, const std::string& name,
                     const std::function<double(double)>& radial, double default_mask) {
    const Point c = centre_of(p, "c");
    const double mask = param(p, "mask", default_mask);
    if (!(mask > 0.0)) throw std::invalid_argument(name + ": singularity inside unmasked region");
    const double inner = radial(mask);
    const int n = grid.dim();
    ScalarField u = ScalarField::from_function(
        grid, [&](const Point& x) {
            const double r = dist(x, c, n);
            return r < mask ? inner : radial(r);
        },
        name);
    u.set_mask(ExcludedBall{c, mask});
    return u;
}

void need_dim(const Grid& g, int lo, const std::string& name) {
    if (g.dim() < lo) throw std::invalid_argument(name + " needs dimension at least " + std::to_string(lo));
}

}  // namespace

std::vector<std::string> field_library_names() {
    return {"harmonic_saddle", "harmonic_cubic", "harmonic_exp", "poisson_kernel", "log_counterexample",
            "fundamental_solution", "pucci_radial", "huber", "paraboloid", "abs_power", "cosine"};
}

ScalarField field_library(const std::string& name, const Grid& grid, const LibraryParams& p) {
    const int n = grid.dim();
    auto make = [&](const std::function<double(const Point&)>& fn) { return ScalarField::from_function(grid, fn, name); };
    if (name == "harmonic_saddle") {
        need_dim(grid, 2, name);
        const double s = param(p, "scale", 1.0);
        return make([s](const Point& x) { return s * (x[0] * x[0] - x[1] * x[1]); });
    }
    if (name == "harmonic_cubic") {
        need_dim(grid, 2, name);
        const double s = param(p, "scale", 1.0);
        return make([s](const Point& x) { return s * (x[0] * x[0] * x[0] - 3.0 * x[0] * x[1] * x[1]); });
    }
    if (name == "harmonic_exp") {
        need_dim(grid, 2, name);
        const double k = param(p, "k", 1.0);
        return make([k](const Point& x) { return std::exp(k * x[0]) * std::cos(k * x[1]); });
    }
    if (name == "poisson_kernel") {
        // (1 - |x|^2)/|x - y|^n with pole y on the unit sphere: positive and harmonic in B_1
        Point y = centre_of(p, "pole");
        if (std::abs(norm(y, n)) < 1e-12) y[0] = 1.0;
        const double len = norm(y, n);
        for (int d = 0; d < n; ++d) y[d] *= param(p, "pole_radius", 1.5) / len;
        if (norm(y, n) <= 1.0) throw std::invalid_argument("poisson_kernel: pole must lie outside the closed unit ball");
        return make([y, n](const Point& x) {
            return (norm(y, n) * norm(y, n) - norm(x, n) * norm(x, n)) / std::pow(dist(x, y, n), n);
        });
    }
    if (name == "log_counterexample") {
        const double a = param(p, "alpha", 1.0);
        if (!(a > 0.0)) throw std::invalid_argument("log_counterexample: alpha must be positive");
        // constant extension outside B_{1/2}; 0 is the continuous value at the origin
        auto radial = [a](double r) { return std::pow(std::abs(std::log(std::min(r, 0.5))), -a); };
        const Point c = centre_of(p, "c");
        const double mask = param(p, "mask", 4.0 * grid.h());
        if (!(mask > 0.0)) throw std::invalid_argument(name + ": singularity inside unmasked region");
        ScalarField u = make([&](const Point& x) {
            const double r = dist(x, c, n);
            return r == 0.0 ? 0.0 : radial(r);
        });
        u.set_mask(ExcludedBall{c, mask});
        return u;
    }
    if (name == "fundamental_solution") {
        if (n == 1) return make([](const Point& x) { return std::abs(x[0]); });
        const double mask = 4.0 * grid.h();
        if (n == 2) return singular(grid, p, name, [](double r) { return -std::log(r); }, mask);
        return singular(grid, p, name, [n](double r) { return std::pow(r, 2.0 - n); }, mask);
    }
    if (name == "pucci_radial") {
        const double lambda = param(p, "lambda", 1.0), Lambda = param(p, "Lambda", 2.0);
        Ellipticity ell(lambda, Lambda);
        const double alpha = ell.Lambda * (n - 1) / ell.lambda - 1.0;
        if (!(alpha > 0.0)) throw std::invalid_argument("pucci_radial: needs Lambda (n - 1) > lambda");
        return singular(grid, p, name, [alpha](double r) { return std::pow(r, -alpha); }, 4.0 * grid.h());
    }
    if (name == "huber") {
        const double eps = param(p, "eps", 0.25);
        if (!(eps > 0.0)) throw std::invalid_argument("huber: eps must be positive");
        return make([eps, n](const Point& x) {
            const double r = norm(x, n);
            return r <= eps ? r * r / (2.0 * eps) : r - eps / 2.0;
        });
    }
    if (name == "paraboloid") {
        const double M = param(p, "M", 1.0);
        const double sign = param(p, "sign", 1.0) >= 0.0 ? 1.0 : -1.0;
        const double c = param(p, "offset", 0.0);
        const Point y = centre_of(p, "c");
        return make([=](const Point& x) { return sign * M / 2.0 * dist2(x, y, n) + c; });
    }
    if (name == "abs_power") {
        const double a = param(p, "alpha", 0.5);
        if (!(a > 0.0)) throw std::invalid_argument("abs_power: alpha must be positive");
        return make([a, n](const Point& x) { return std::pow(norm(x, n), a); });
    }
    if (name == "cosine") {
        const double k = param(p, "k", 1.0);
        return make([k](const Point& x) { return std::cos(k * x[0]); });
    }
    throw std::invalid_argument("unknown field family: " + name);
}

}  // namespace kslab
