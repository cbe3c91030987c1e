#include "kslab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "kslab/coverings.hpp"

namespace kslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_ball_in_grid(const Grid& g, const Point& c, double r) {
    for (int d = 0; d < g.dim(); ++d)
        for (double s : {-1.0, 1.0}) {
            Point p = c;
            p[d] += s * r;
            if (!g.contains_point(p, 1e-9 * g.h())) throw std::invalid_argument("ball exits the grid");
        }
}

void require_cube_cover(const Grid& g, double half) {
    for (int d = 0; d < g.dim(); ++d)
        if (g.origin()[d] > -half + 1e-9 * g.h() || g.upper()[d] < half - 1e-9 * g.h()) {
            std::ostringstream os;
            os << "field grid does not cover [-" << half << "," << half << "]^n";
            throw std::invalid_argument(os.str());
        }
}

std::vector<std::size_t> live_nodes(const ScalarField& u, const Region& r) {
    std::vector<std::size_t> out;
    for (std::size_t i : r.nodes(u.grid()))
        if (!u.masked(i)) out.push_back(i);
    return out;
}

std::vector<std::size_t> live_ball(const ScalarField& u, const Point& c, double r, bool closed = true) {
    std::vector<std::size_t> out;
    for (std::size_t i : ball_nodes(u.grid(), c, r, closed))
        if (!u.masked(i)) out.push_back(i);
    return out;
}

double average(const ScalarField& u, const std::vector<std::size_t>& nodes) {
    if (nodes.empty()) throw std::invalid_argument("empty region");
    double s = 0.0;
    for (std::size_t i : nodes) s += u[i];
    return s / static_cast<double>(nodes.size());
}

double norm_of(const std::vector<double>& vals, double p, double cell) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : vals) m = std::max(m, std::abs(v));
        return m;
    }
    double s = 0.0;
    for (double v : vals) s += std::pow(std::abs(v), p);
    return std::pow(s * cell, 1.0 / p);
}

double value_at(const ScalarField& u, const Point& p) {
    if (auto n = u.grid().node_at(p)) return u[*n];
    return u.interpolate(p);
}

double laplacian_at(const ScalarField& u, std::size_t i) { return hessian_at(u, i).trace(); }

double max_gradient(const ScalarField& u, const std::vector<std::size_t>& nodes) {
    double m = 0.0;
    for (std::size_t i : nodes)
        if (u.grid().is_interior(i)) m = std::max(m, norm(gradient_at(u, i), u.grid().dim()));
    return m;
}

double min_over(const ScalarField& u, const std::vector<std::size_t>& nodes) {
    double m = kInf;
    for (std::size_t i : nodes) m = std::min(m, u[i]);
    return m;
}

void put_exponent(EstimateConstants& c, const char* key, double v) {
    if (v > 0.0 && v < 1.0) {
        if (std::string(key) == "epsilon") c.epsilon = v;
        else c.extra[key] = v;
    } else {
        c.extra[key] = v;
    }
}

}  // namespace

DecayProfile oscillation_profile(const ScalarField& u, const Point& center, double rho, double r0, int depth) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
    if (depth < 0 || !(r0 > 0.0)) throw std::invalid_argument("invalid profile radii");
    const Grid& g = u.grid();
    require_ball_in_grid(g, center, r0);
    if (std::pow(rho, depth) * r0 < 2.0 * g.h() * (1.0 - 1e-12))
        throw std::invalid_argument("innermost ball under-resolved");
    DecayProfile p{g.dim(), center, rho, r0, {}, {}};
    for (int k = 0; k <= depth; ++k) {
        const double r = r0 * std::pow(rho, k);
        const auto nodes = live_ball(u, center, r);
        if (nodes.empty()) throw std::invalid_argument("innermost ball under-resolved");
        double lo = kInf, hi = -kInf;
        for (std::size_t i : nodes) {
            lo = std::min(lo, u[i]);
            hi = std::max(hi, u[i]);
        }
        p.radii.push_back(r);
        p.osc.push_back(hi - lo);
    }
    return p;
}

DecayProfile oscillation_profile(const std::function<double(const Point&)>& fn, int dim, const Point& center,
                                 double rho, double r0, int depth, int nodes_per_radius) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
    if (depth < 0 || !(r0 > 0.0) || nodes_per_radius < 2) throw std::invalid_argument("invalid profile radii");
    if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
    DecayProfile p{dim, center, rho, r0, {}, {}};
    const int N = nodes_per_radius;
    for (int k = 0; k <= depth; ++k) {
        const double r = r0 * std::pow(rho, k);
        const double s = r / N;
        double lo = kInf, hi = -kInf;
        for (int a = -N; a <= N; ++a)
            for (int b = (dim > 1 ? -N : 0); b <= (dim > 1 ? N : 0); ++b)
                for (int c = (dim > 2 ? -N : 0); c <= (dim > 2 ? N : 0); ++c) {
                    if (a * a + b * b + c * c > N * N) continue;
                    const Point x{center[0] + a * s, center[1] + b * s, center[2] + c * s};
                    const double v = fn(x);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
        p.radii.push_back(r);
        p.osc.push_back(hi - lo);
    }
    return p;
}

DecayProfile geometric_profile(int dim, double theta, double rho, double r0, int depth, double osc0) {
    DecayProfile p{dim, {0.0, 0.0, 0.0}, rho, r0, {}, {}};
    for (int k = 0; k <= depth; ++k) {
        p.radii.push_back(r0 * std::pow(rho, k));
        p.osc.push_back(osc0 * std::pow(1.0 - theta, k));
    }
    return p;
}

HolderFromDecay holder_from_decay(double theta, double rho) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0,1)");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
    return {std::log(1.0 - theta) / std::log(rho), 1.0 / (1.0 - theta)};
}

CheckReport decay_implies_modulus_check(const DecayProfile& profile, double theta) {
    const auto [alpha, C] = holder_from_decay(theta, profile.rho);
    const auto& o = profile.osc;
    if (o.size() < 2) throw std::invalid_argument("profile needs at least two radii");
    const double tol = 1e-12 * std::max(o[0], 1e-300);
    for (std::size_t k = 0; k + 1 < o.size(); ++k)
        if (o[k + 1] > (1.0 - theta) * o[k] + tol)
            throw std::runtime_error("step inequality fails at k=" + std::to_string(k));
    CheckReport r;
    r.name = "decay_implies_modulus";
    r.dim = profile.dim;
    r.tolerance = tol;
    double worst = kInf, point_worst = kInf;
    for (std::size_t k = 0; k < o.size(); ++k) {
        const double bound = C * std::pow(profile.rho, (k + 1.0) * alpha) * o[0];
        const double margin = bound - o[k];
        if (margin < worst) {
            worst = margin;
            r.lhs = o[k];
            r.rhs = bound;
        }
        point_worst = std::min(point_worst, C * std::pow(profile.rho, k * alpha) * o[0] - o[k]);
    }
    r.constants.theta = theta;
    r.constants.rho = profile.rho;
    if (alpha > 0.0 && alpha <= 1.0) r.constants.alpha = alpha;
    else r.constants.extra["alpha"] = alpha;
    r.constants.C = C;
    r.measured["point_radius_min_margin"] = point_worst;
    r.measured["radii"] = static_cast<double>(o.size());
    r.notes.push_back("checked at radii rho^k only");
    r.finalize();
    return r;
}

HolderFit fit_holder_exponent(const DecayProfile& profile) {
    std::vector<double> x, y;
    for (std::size_t k = 0; k < profile.osc.size(); ++k)
        if (profile.osc[k] > 0.0) {
            x.push_back(std::log(profile.radii[k]));
            y.push_back(std::log(profile.osc[k]));
        }
    if (x.size() < 3) throw std::invalid_argument("degenerate profile");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return {slope, r2};
}

double mean_value_constant(int n, double p) {
    if (!(p > n / 2.0)) throw std::invalid_argument("supercritical exponent required");
    if (std::isinf(p)) return 1.0 / (2.0 * (n + 2.0));
    const double a = n / p;
    return std::pow(unit_ball_volume(n), -1.0 / p) / ((2.0 - a) * (n + 2.0 - a));
}

CheckReport mean_value_check(const ScalarField& u, const Point& center, double r, double p) {
    const Grid& g = u.grid();
    const int n = g.dim();
    const double C = mean_value_constant(n, p);
    require_ball_in_grid(g, center, r);
    const auto nodes = live_ball(u, center, r);
    const double avg = average(u, nodes);
    const double u0 = value_at(u, center);
    std::vector<double> lap;
    for (std::size_t i : nodes)
        if (g.is_interior(i)) lap.push_back(std::max(0.0, laplacian_at(u, i)));
    const double nrm = norm_of(lap, p, g.cell_volume());
    const double scale = std::isinf(p) ? r * r : std::pow(r, 2.0 - n / p);
    CheckReport rep;
    rep.name = "mean_value";
    rep.h = g.h();
    rep.dim = n;
    rep.lhs = avg;
    rep.rhs = u0 + C * scale * nrm;
    rep.tolerance = g.h() * max_gradient(u, nodes);
    rep.constants.C = std::max(1.0, C);
    rep.constants.extra["C_impl"] = C;
    rep.constants.extra["p"] = std::isinf(p) ? -1.0 : p;
    rep.measured["average_minus_center"] = avg - u0;
    rep.measured["laplacian_plus_norm"] = nrm;
    rep.measured["nodes"] = static_cast<double>(nodes.size());
    rep.finalize();
    return rep;
}

CheckReport weak_harnack_laplacian_check(const ScalarField& u, double p) {
    const Grid& g = u.grid();
    const int n = g.dim();
    const double Cmv = mean_value_constant(n, p);
    require_cube_cover(g, 1.0);
    const Point o{0.0, 0.0, 0.0};
    const auto b1 = live_ball(u, o, 1.0, false);
    const double umin = min_over(u, b1);
    if (umin < -1e-12) {
        std::ostringstream os;
        os << "hypotheses fail: u < 0 on B_1 (min " << umin << ")";
        throw HypothesisError(os.str());
    }
    const auto inner = live_ball(u, o, 1.0 / 3.0);
    std::size_t x0 = inner.front();
    for (std::size_t i : inner)
        if (u[i] < u[x0]) x0 = i;
    const double inf = u[x0];
    const double avg13 = average(u, inner);
    const auto ball23 = live_ball(u, g.point(x0), 2.0 / 3.0, false);
    const double avg23 = average(u, ball23);
    std::vector<double> lap;
    for (std::size_t i : b1)
        if (g.is_interior(i)) lap.push_back(std::max(0.0, laplacian_at(u, i)));
    const double nrm = norm_of(lap, p, g.cell_volume());
    const double two_n = std::pow(2.0, n);
    const double Cimpl = two_n * (1.0 + Cmv);
    const double w = std::isinf(p) ? 4.0 / 9.0 : std::pow(2.0 / 3.0, 2.0 - n / p);
    CheckReport r;
    r.name = "weak_harnack_laplacian";
    r.h = g.h();
    r.dim = n;
    r.lhs = avg13;
    r.rhs = Cimpl * (inf + nrm);
    r.tolerance = two_n * g.h() * max_gradient(u, ball23);
    r.constants.C = Cimpl;
    r.constants.extra["C_mean_value"] = Cmv;
    r.measured["inf_inner"] = inf;
    r.measured["chain_average_inner"] = avg13;
    r.measured["chain_scaled_average"] = two_n * avg23;
    r.measured["chain_mean_value_bound"] = two_n * (inf + Cmv * w * nrm);
    r.measured["lattice_volume_ratio"] = static_cast<double>(ball23.size()) / static_cast<double>(inner.size());
    r.measured["laplacian_plus_norm"] = nrm;
    r.finalize();
    return r;
}

CheckReport harnack_quotient_check(const ScalarField& u, double r) {
    if (!(r > 0.0 && r < 1.0 / 3.0)) throw std::invalid_argument("r must lie in (0,1/3)");
    const Grid& g = u.grid();
    const int n = g.dim();
    require_cube_cover(g, 1.0);
    const Point o{0.0, 0.0, 0.0};
    const auto b1 = live_ball(u, o, 1.0, false);
    const double umin = min_over(u, b1);
    if (umin < -1e-12) {
        std::ostringstream os;
        os << "hypotheses fail: u < 0 on B_1 (min " << umin << ")";
        throw HypothesisError(os.str());
    }
    const auto br = live_ball(u, o, r);
    double lo = kInf, hi = -kInf;
    for (std::size_t i : br) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
    }
    double resid = 0.0;
    for (std::size_t i : b1)
        if (g.is_interior(i)) resid = std::max(resid, std::abs(laplacian_at(u, i)));
    const double bound = std::pow((1.0 - r) / (1.0 - 3.0 * r), n);
    CheckReport rep;
    rep.name = "harnack_quotient";
    rep.h = g.h();
    rep.dim = n;
    rep.lhs = hi;
    rep.rhs = bound * lo;
    rep.tolerance = 2.0 * g.h() * max_gradient(u, br);
    rep.constants.extra["r"] = r;
    rep.constants.extra["bound"] = bound;
    rep.measured["quotient"] = lo > 0.0 ? hi / lo : kInf;
    rep.measured["laplacian_residual"] = resid;
    rep.finalize();
    return rep;
}

std::vector<std::pair<double, double>> distribution_curve(const ScalarField& u, const Region& region, int levels) {
    const auto nodes = live_nodes(u, region);
    std::vector<double> vals;
    for (std::size_t i : nodes) vals.push_back(u[i]);
    std::sort(vals.begin(), vals.end());
    std::vector<std::pair<double, double>> curve;
    double lo = kInf;
    for (double v : vals)
        if (v > 0.0) {
            lo = v;
            break;
        }
    if (vals.empty() || !std::isfinite(lo) || levels < 1) return curve;
    const double hi = vals.back();
    const double cell = u.grid().cell_volume();
    for (int k = 0; k < levels; ++k) {
        const double t = levels == 1 ? 0.0 : static_cast<double>(k) / (levels - 1);
        const double mu = lo * std::pow(hi / lo, t);
        const auto it = std::lower_bound(vals.begin(), vals.end(), mu);
        curve.emplace_back(mu, static_cast<double>(vals.end() - it) * cell);
    }
    return curve;
}

namespace {

struct Q3Setup {
    double min_q3;
    double norm;
};

Q3Setup q3_hypotheses(const ScalarField& u, const Ellipticity& ell) {
    const Grid& g = u.grid();
    const int n = g.dim();
    require_cube_cover(g, 1.5);
    const Point o{0.0, 0.0, 0.0};
    const auto big = live_ball(u, o, 3.0 * std::sqrt(static_cast<double>(n)), false);
    const double umin = min_over(u, big);
    if (umin < -1e-12) {
        std::ostringstream os;
        os << "hypotheses fail: u < 0 (min " << umin << ")";
        throw HypothesisError(os.str());
    }
    std::vector<double> pm;
    for (std::size_t i : big)
        if (g.is_interior(i)) pm.push_back(std::max(0.0, pucci_minus(hessian_at(u, i), ell)));
    const auto q3 = live_nodes(u, Region::cube(o, 3.0, true));
    return {min_over(u, q3), norm_of(pm, n, g.cell_volume())};
}

}  // namespace

CheckReport weak_harnack_ue_check(const ScalarField& u, const Ellipticity& ell, const DistributionParams& params) {
    if (!(params.eta > 0.0 && params.eta < 1.0)) throw std::invalid_argument("eta must lie in (0,1)");
    if (!(params.M > 1.0)) throw std::invalid_argument("M must exceed 1");
    if (!(params.delta > 0.0)) throw std::invalid_argument("delta must be positive");
    const Grid& g = u.grid();
    const int n = g.dim();
    const auto [min_q3, nrm] = q3_hypotheses(u, ell);
    const double eps = -std::log(1.0 - params.eta) / std::log(params.M);
    const double C = std::pow(params.M, eps);
    const Point o{0.0, 0.0, 0.0};
    const auto q1 = live_nodes(u, Region::cube(o, 1.0, true));
    // node cells clipped to Q_1: a node on a face keeps half its cell along that axis
    std::vector<std::pair<double, double>> vals;
    for (std::size_t i : q1) {
        const Point x = g.point(i);
        double w = g.cell_volume();
        for (int d = 0; d < n; ++d)
            if (std::abs(std::abs(x[d]) - 0.5) < 1e-9 * g.h()) w *= 0.5;
        vals.emplace_back(u[i], w);
    }
    std::sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    // the supremum over mu > 0 is attained at a node value
    double sup = 0.0, mass = 0.0;
    for (std::size_t k = 0; k < vals.size(); ++k) {
        if (!(vals[k].first > 0.0)) break;
        mass += vals[k].second;
        if (k + 1 < vals.size() && vals[k + 1].first == vals[k].first) continue;
        sup = std::max(sup, std::pow(vals[k].first, eps) * mass);
    }
    CheckReport r;
    r.name = "weak_harnack_ue";
    r.h = g.h();
    r.dim = n;
    r.lhs = sup;
    r.rhs = C * std::pow(min_q3 + nrm / params.delta, eps);
    r.constants.eta = params.eta;
    r.constants.delta = params.delta;
    r.constants.M = params.M;
    put_exponent(r.constants, "epsilon", eps);
    r.constants.C = C;
    r.measured["min_Q3"] = min_q3;
    r.measured["pucci_minus_plus_norm"] = nrm;
    r.measured["distribution_levels"] = static_cast<double>(params.levels);
    const auto curve = distribution_curve(u, Region::cube(o, 1.0, true), params.levels);
    double curve_sup = 0.0;
    for (const auto& [mu, m] : curve) curve_sup = std::max(curve_sup, std::pow(mu, eps) * m);
    r.measured["sampled_curve_sup"] = curve_sup;
    r.finalize();
    return r;
}

double harnack_ue_constant(int n, const Ellipticity& ell) {
    // measured sup/inf quotients on solved sandwich families stay below 3 for Lambda/lambda <= 2
    (void)n;
    return ell.Lambda / ell.lambda <= 2.0 ? 8.0 : 8.0 * ell.Lambda / ell.lambda;
}

CheckReport harnack_ue_check(const ScalarField& u, const Ellipticity& ell, std::optional<double> C) {
    const Grid& g = u.grid();
    const int n = g.dim();
    require_cube_cover(g, 1.0);
    const Point o{0.0, 0.0, 0.0};
    const auto b1 = live_ball(u, o, 1.0, false);
    const double umin = min_over(u, b1);
    if (umin < -1e-12) {
        std::ostringstream os;
        os << "hypotheses fail: u < 0 on B_1 (min " << umin << ")";
        throw HypothesisError(os.str());
    }
    std::vector<double> f;
    for (std::size_t i : b1) {
        if (!g.is_interior(i)) continue;
        const SymMatrix H = hessian_at(u, i);
        f.push_back(std::max({0.0, pucci_minus(H, ell), -pucci_plus(H, ell)}));
    }
    const double nf = norm_of(f, n, g.cell_volume());
    const auto half = live_ball(u, o, 0.5);
    double lo = kInf, hi = -kInf;
    for (std::size_t i : half) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
    }
    const double c = C ? *C : harnack_ue_constant(n, ell);
    CheckReport r;
    r.name = "harnack_ue";
    r.h = g.h();
    r.dim = n;
    r.lhs = hi;
    r.rhs = c * (lo + nf);
    r.constants.C = c;
    r.measured["forcing_norm"] = nf;
    r.measured["quotient"] = lo > 0.0 ? hi / lo : kInf;
    r.finalize();
    r.notes.push_back("C pinned from measured quotients");
    return r;
}

CheckReport diminish_of_distribution_check(const ScalarField& u, const Ellipticity& ell, const DiminishParams& params) {
    if (!(params.eta0 > 0.0 && params.eta0 < 1.0)) throw std::invalid_argument("eta0 must lie in (0,1)");
    if (!(params.M > 1.0)) throw std::invalid_argument("M must exceed 1");
    const Grid& g = u.grid();
    const int n = g.dim();
    const double h = g.h();
    const auto [min_q3, nrm] = q3_hypotheses(u, ell);
    if (min_q3 > 1.0) {
        std::ostringstream os;
        os << "hypotheses fail: min over closed Q_3 is " << min_q3 << " > 1";
        throw HypothesisError(os.str());
    }
    if (nrm > params.delta) {
        std::ostringstream os;
        os << "hypotheses fail: ||(P^-(D^2u))_+||_{L^n} = " << nrm << " > delta = " << params.delta;
        throw HypothesisError(os.str());
    }
    const Point o{0.0, 0.0, 0.0};
    int depth = params.max_depth;
    if (depth < 0) depth = std::max(0, static_cast<int>(std::floor(std::log2(1.0 / (2.0 * h)))) - 1);
    auto shared = std::make_shared<const ScalarField>(u);
    const Region F = Region::superlevel(shared, 1.0, true).intersect(Region::cube(o, 1.0, true));
    const Decomposition dec = dyadic_decomposition(n, F, depth);

    const double sq = std::sqrt(static_cast<double>(n));
    std::vector<std::uint8_t> low(g.size(), 0), mid(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        low[i] = !u.masked(i) && u[i] <= 1.0;
        mid[i] = !u.masked(i) && u[i] <= params.M;
    }
    double eta0_meas = 1.0, cube_density_min = 1.0, max_rescaled_forcing = 0.0, sum_cubes = 0.0, sum_good = 0.0;
    std::size_t far_from_low = 0;
    for (const auto& cube : dec.cubes) {
        const double l = cube.side();
        const Point x0 = cube.center(n);
        bool meets = false;
        for (std::size_t i : ball_nodes(g, x0, 1.5 * l * sq, true))
            if (low[i]) {
                meets = true;
                break;
            }
        if (!meets) ++far_from_low;
        const auto half = ball_nodes(g, x0, l / 2.0, false);
        std::size_t hit = 0;
        for (std::size_t i : half) hit += mid[i];
        if (!half.empty()) eta0_meas = std::min(eta0_meas, static_cast<double>(hit) / half.size());
        // cube nodes with half-open faces so neighbouring cubes do not share nodes
        const Box b = cube.box(n);
        std::size_t in_cube = 0, good = 0;
        for (std::size_t i : ball_nodes(g, x0, 0.5 * l * sq + h, true)) {
            const Point x = g.point(i);
            bool inside = true;
            for (int d = 0; d < n; ++d)
                if (x[d] < b.lo[d] - 1e-12 || x[d] >= b.hi[d] - 1e-12) inside = false;
            if (!inside) continue;
            ++in_cube;
            good += mid[i];
        }
        if (in_cube) cube_density_min = std::min(cube_density_min, static_cast<double>(good) / in_cube);
        sum_cubes += static_cast<double>(in_cube);
        sum_good += static_cast<double>(good);
        const double rr = 3.0 * l * sq;
        std::vector<double> pm;
        for (std::size_t i : ball_nodes(g, x0, rr, false))
            if (g.is_interior(i)) pm.push_back(std::max(0.0, pucci_minus(hessian_at(u, i), ell)));
        max_rescaled_forcing = std::max(max_rescaled_forcing, rr * norm_of(pm, n, g.cell_volume()));
    }
    const auto q1 = live_nodes(u, Region::cube(o, 1.0, true));
    std::size_t above = 0, between = 0;
    for (std::size_t i : q1) {
        if (u[i] > 1.0) ++above;
        if (u[i] > 1.0 && u[i] <= params.M) ++between;
    }
    const double eta = params.eta0 * unit_ball_volume(n) * std::pow(0.5, n);
    const double cell = g.cell_volume();
    CheckReport r;
    r.name = "diminish_of_distribution";
    r.h = h;
    r.dim = n;
    r.lhs = eta * static_cast<double>(above) * cell;
    r.rhs = static_cast<double>(between) * cell;
    r.constants.delta = params.delta;
    r.constants.M = params.M;
    r.constants.eta = eta;
    r.constants.extra["eta0"] = params.eta0;
    r.measured["cubes"] = static_cast<double>(dec.cubes.size());
    r.measured["eta0_measured"] = eta0_meas;
    r.measured["cube_density_min"] = cube_density_min;
    r.measured["cube_sum_density"] = sum_cubes > 0 ? sum_good / sum_cubes : 1.0;
    r.measured["cubes_far_from_low_set"] = static_cast<double>(far_from_low);
    r.measured["max_rescaled_forcing"] = max_rescaled_forcing;
    r.measured["residual_measure"] = dec.residual_measure;
    r.measured["pucci_minus_plus_norm"] = nrm;
    r.finalize();
    r.notes.push_back("level set sampled on the grid; cubes use node counts");
    return r;
}

double local_max_constant(int n, const LocalMaxParams& params) {
    if (params.C) return *params.C;
    if (params.ell) return 16.0;
    if (!(params.eps_exponent >= 1.0))
        throw std::invalid_argument("eps_exponent below 1 needs an explicit constant");
    const double a = std::pow(ball_volume(n, 0.5), -1.0 / params.eps_exponent);
    const double w = std::isinf(params.p) ? 0.25 : std::pow(0.5, 2.0 - n / params.p);
    return std::max(a, mean_value_constant(n, params.p) * w);
}

CheckReport local_max_check(const ScalarField& u, const LocalMaxParams& params) {
    const Grid& g = u.grid();
    const int n = g.dim();
    if (!(params.eps_exponent > 0.0)) throw std::invalid_argument("eps_exponent must be positive");
    if (!params.ell && !(params.p > n / 2.0)) throw std::invalid_argument("supercritical exponent required");
    const double C = local_max_constant(n, params);
    require_cube_cover(g, 1.0);
    const Point o{0.0, 0.0, 0.0};
    const auto half = live_ball(u, o, 0.5);
    const auto b1 = live_ball(u, o, 1.0, false);
    double lhs = 0.0;
    for (std::size_t i : half) lhs = std::max(lhs, u[i]);
    std::vector<double> pos, neg;
    for (std::size_t i : b1) {
        pos.push_back(std::max(0.0, u[i]));
        if (!g.is_interior(i)) continue;
        const SymMatrix H = hessian_at(u, i);
        const double v = params.ell ? pucci_plus(H, *params.ell) : H.trace();
        neg.push_back(std::max(0.0, -v));
    }
    const double nu = norm_of(pos, params.eps_exponent, g.cell_volume());
    const double nf = norm_of(neg, params.ell ? static_cast<double>(n) : params.p, g.cell_volume());
    CheckReport r;
    r.name = params.ell ? "local_max_pucci" : "local_max_laplacian";
    r.h = g.h();
    r.dim = n;
    r.lhs = lhs;
    r.rhs = C * (nu + nf);
    r.tolerance = g.h() * max_gradient(u, b1);
    r.constants.C = std::max(1.0, C);
    r.constants.extra["C_impl"] = C;
    r.constants.extra["eps_exponent"] = params.eps_exponent;
    r.measured["u_plus_norm"] = nu;
    r.measured["forcing_norm"] = nf;
    r.measured["C_measured"] = (nu + nf) > 0.0 ? lhs / (nu + nf) : 0.0;
    r.finalize();
    if (params.ell) r.notes.push_back("Pucci-mode constant is pinned, not derived");
    return r;
}

BallAverageLaplacian ball_average_laplacian(const ScalarField& u, const Point& point, double rho) {
    const Grid& g = u.grid();
    const int n = g.dim();
    const auto node = g.node_at(point);
    if (!node || !g.is_interior(*node)) throw std::invalid_argument("point must be an interior node");
    if (!(rho / 2.0 >= 4.0 * g.h())) throw std::invalid_argument("under-resolved radii");
    require_ball_in_grid(g, point, rho);
    const double u0 = u[*node];
    double E[2], moment_err[2];
    for (int k = 0; k < 2; ++k) {
        const double r = rho / (k == 0 ? 1.0 : 2.0);
        const auto nodes = live_ball(u, point, r);
        E[k] = (average(u, nodes) - u0) / (r * r);
        double m2 = 0.0;
        for (std::size_t i : nodes) {
            const double d = g.point(i)[0] - point[0];
            m2 += d * d;
        }
        m2 /= static_cast<double>(nodes.size()) * r * r;
        moment_err[k] = std::abs(m2 - 1.0 / (n + 2.0));
    }
    const double est = (4.0 * E[1] - E[0]) / 3.0;
    const double lap = laplacian_at(u, *node);
    const double target = lap / (2.0 * (n + 2.0));
    BallAverageLaplacian out{est, {}};
    CheckReport& r = out.report;
    r.name = "ball_average_laplacian";
    r.h = g.h();
    r.dim = n;
    r.lhs = std::abs(est - target);
    r.rhs = 0.0;
    r.tolerance = 0.5 * std::abs(lap) * (4.0 * moment_err[1] + moment_err[0]) / 3.0 + 1e-6 * (1.0 + std::abs(lap));
    r.constants.extra["C_expected"] = 1.0 / (2.0 * (n + 2.0));
    r.measured["estimate"] = est;
    r.measured["target"] = target;
    r.measured["laplacian"] = lap;
    if (lap != 0.0) r.measured["C_estimated"] = est / lap;
    r.measured["lattice_moment_error"] = std::max(moment_err[0], moment_err[1]);
    r.finalize();
    return out;
}

CheckReport mollification_identity_check(const ScalarField& u, double eps) {
    const Grid& g = u.grid();
    const int n = g.dim();
    const double h = g.h();
    if (!(eps >= 3.0 * h)) throw std::invalid_argument("eps too small for grid");
    const auto offs = ball_offsets(n, h, eps);
    std::vector<double> w;
    double total = 0.0;
    for (const auto& k : offs) {
        double s = 0.0;
        for (int d = 0; d < n; ++d) s += static_cast<double>(k[d]) * k[d];
        const double q = 1.0 - s * h * h / (eps * eps);
        w.push_back(q * q);
        total += q * q;
    }
    for (auto& x : w) x /= total;
    const int margin = static_cast<int>(std::ceil(eps / h)) + 1;
    double dev = 0.0, sup = 0.0, resid = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        sup = std::max(sup, std::abs(u[i]));
        if (!g.is_interior(i, margin) || u.masked(i)) continue;
        const Index3 c = g.multi_index(i);
        double s = 0.0;
        for (std::size_t j = 0; j < offs.size(); ++j)
            s += w[j] * u[g.index({c[0] + offs[j][0], c[1] + offs[j][1], c[2] + offs[j][2]})];
        dev = std::max(dev, std::abs(s - u[i]));
        resid = std::max(resid, std::abs(laplacian_at(u, i)));
        ++count;
    }
    if (!count) throw std::invalid_argument("eps too large for grid");
    const double C = 1.0 + sup;
    CheckReport r;
    r.name = "mollification_identity";
    r.h = h;
    r.dim = n;
    r.lhs = dev;
    r.rhs = C * h * h;
    r.constants.C = C;
    r.constants.extra["eps"] = eps;
    r.measured["deviation_over_h2"] = dev / (h * h);
    r.measured["laplacian_residual"] = resid;
    r.measured["nodes"] = static_cast<double>(count);
    r.finalize();
    return r;
}

double morrey_constant(int n, double p) {
    if (!(p > n)) throw std::invalid_argument("p must exceed n");
    if (std::isinf(p)) return std::pow(2.0, n + 2);
    const double pp = p / (p - 1.0);
    const double gamma = n - (n - 1.0) * pp;
    return std::pow(2.0, n + 1) * std::pow(n * unit_ball_volume(n), -1.0 / p) * std::pow(gamma, -1.0 / pp) *
           std::pow(2.0, 1.0 - n / p);
}

CheckReport morrey_check(const ScalarField& u, double p) {
    const Grid& g = u.grid();
    const int n = g.dim();
    if (!(p > n)) throw std::invalid_argument("p must exceed n");
    CheckReport r;
    r.name = "morrey";
    r.h = g.h();
    r.dim = n;
    if (n == 1) {
        const double alpha = std::isinf(p) ? 1.0 : 1.0 - 1.0 / p;
        std::vector<double> slopes;
        for (std::size_t i = 0; i + 1 < g.size(); ++i) slopes.push_back((u[i + 1] - u[i]) / g.h());
        r.lhs = holder_seminorm(u, Region::all(), alpha);
        r.rhs = norm_of(slopes, p, g.h());
        r.tolerance = 1e-12 * (1.0 + r.rhs);
        r.constants.C = 1.0;
        r.constants.alpha = alpha;
        r.finalize();
        return r;
    }
    require_cube_cover(g, 1.0);
    const Point o{0.0, 0.0, 0.0};
    const double expo = std::isinf(p) ? 1.0 : 1.0 - n / p;
    double sup = 0.0;
    for (int k = 1; k * g.h() < 0.5; ++k) {
        const double rad = k * g.h();
        const auto nodes = live_ball(u, o, rad);
        double lo = kInf, hi = -kInf;
        for (std::size_t i : nodes) {
            lo = std::min(lo, u[i]);
            hi = std::max(hi, u[i]);
        }
        sup = std::max(sup, (hi - lo) / std::pow(rad, expo));
    }
    std::vector<double> grads;
    for (std::size_t i : live_ball(u, o, 1.0, false))
        if (g.is_interior(i)) grads.push_back(norm(gradient_at(u, i), n));
    const double C = morrey_constant(n, p);
    r.lhs = sup;
    r.rhs = C * norm_of(grads, p, g.cell_volume());
    r.constants.C = C;
    r.constants.extra["exponent"] = expo;
    r.measured["gradient_norm"] = r.rhs / C;
    r.finalize();
    return r;
}

RolleResult rolle_gradient_point(const ScalarField& u, const Point& x1, double R, std::optional<double> omega_osc) {
    const Grid& g = u.grid();
    const int n = g.dim();
    if (!(R > 0.0)) throw std::invalid_argument("radius must be positive");
    require_ball_in_grid(g, x1, R + g.h());
    const auto nodes = live_ball(u, x1, R);
    if (nodes.empty()) throw std::invalid_argument("empty ball");
    double lo = kInf, hi = -kInf;
    for (std::size_t i : nodes) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
    }
    const double osc = omega_osc ? *omega_osc : hi - lo;
    std::size_t best = nodes.front();
    double bv = kInf;
    for (std::size_t i : nodes) {
        const double phi = lo + osc * (1.0 - dist2(g.point(i), x1, n) / (R * R));
        if (u[i] - phi < bv) {
            bv = u[i] - phi;
            best = i;
        }
    }
    RolleResult out;
    out.node = best;
    out.x2 = g.point(best);
    const bool boundary = dist(out.x2, x1, n) > R - g.h();
    const double grad = g.is_interior(best) ? norm(gradient_at(u, best), n) : 0.0;
    const double hess = g.is_interior(best) ? hessian_at(u, best).frobenius() : 0.0;
    CheckReport& r = out.report;
    r.name = "rolle_gradient";
    r.h = g.h();
    r.dim = n;
    r.lhs = grad;
    r.rhs = 2.0 * osc / R;
    r.tolerance = g.h() * (2.0 * osc / (R * R) + hess);
    r.measured["oscillation"] = osc;
    r.measured["boundary_argmin"] = boundary ? 1.0 : 0.0;
    r.finalize();
    if (boundary) r.notes.push_back("argmin within one node of the ball boundary");
    return out;
}

}  // namespace kslab
