#include "kslab/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "kslab/envelope.hpp"

namespace kslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive_eps(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
}

bool covers_unit_cube(const Grid& g) {
    for (int d = 0; d < g.dim(); ++d) {
        if (g.origin()[d] > -1.0 + 1e-9 * g.h()) return false;
        if (g.upper()[d] < 1.0 - 1e-9 * g.h()) return false;
    }
    return true;
}

std::vector<std::uint8_t> domain_members(const ScalarField& u, const std::optional<Region>& domain) {
    const Grid& g = u.grid();
    std::vector<std::uint8_t> m = domain ? domain->membership(g) : std::vector<std::uint8_t>(g.size(), 1);
    if (u.mask())
        for (std::size_t i = 0; i < g.size(); ++i)
            if (u.masked(i)) m[i] = 0;
    return m;
}

// Members with an axis neighbour outside the set or outside the grid.
std::vector<std::uint8_t> boundary_layer(const Grid& g, const std::vector<std::uint8_t>& members) {
    std::vector<std::uint8_t> b(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!members[i]) continue;
        const Index3 k = g.multi_index(i);
        for (int d = 0; d < g.dim() && !b[i]; ++d) {
            for (int s : {-1, 1}) {
                Index3 j = k;
                j[d] += s;
                if (!g.in_range(j) || !members[g.index(j)]) {
                    b[i] = 1;
                    break;
                }
            }
        }
    }
    return b;
}

double lp_over(const std::vector<double>& vals, double p, double cell) {
    double s = 0.0;
    for (double v : vals) s += std::pow(std::max(v, 0.0), p);
    return std::pow(s * cell, 1.0 / p);
}

double det3(const std::array<std::array<double, 3>, 3>& a, int n) {
    if (n == 1) return a[0][0];
    if (n == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

std::vector<Point> sphere_samples(int n) {
    std::vector<Point> pts;
    if (n == 1) {
        pts.push_back({1.0, 0.0, 0.0});
        pts.push_back({-1.0, 0.0, 0.0});
    } else if (n == 2) {
        for (int k = 0; k < 720; ++k) {
            const double t = 2.0 * std::numbers::pi * k / 720.0;
            pts.push_back({std::cos(t), std::sin(t), 0.0});
        }
    } else {
        const int N = 2000;
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < N; ++k) {
            const double z = 1.0 - 2.0 * (k + 0.5) / N;
            const double r = std::sqrt(1.0 - z * z);
            pts.push_back({r * std::cos(golden * k), r * std::sin(golden * k), z});
        }
    }
    return pts;
}

}  // namespace

ScalarField inf_convolution(const ScalarField& u, double eps) {
    require_positive_eps(eps);
    const double h = u.grid().h();
    ScalarField out(u.grid(), separable_lower_envelope(u.grid(), u.values(), h * h / (2.0 * eps)),
                    u.name().empty() ? "" : u.name() + "_inf");
    out.set_mask(u.mask());
    return out;
}

ScalarField sup_convolution(const ScalarField& u, double eps) {
    require_positive_eps(eps);
    std::vector<double> neg(u.values());
    for (auto& v : neg) v = -v;
    const double h = u.grid().h();
    auto env = separable_lower_envelope(u.grid(), std::move(neg), h * h / (2.0 * eps));
    for (auto& v : env) v = -v;
    ScalarField out(u.grid(), std::move(env), u.name().empty() ? "" : u.name() + "_sup");
    out.set_mask(u.mask());
    return out;
}

ScalarField paraboloid_envelope(const ScalarField& u, double eps) {
    ScalarField g = sup_convolution(inf_convolution(u, eps), eps);
    if (!u.name().empty()) g.set_name(u.name() + "_gamma");
    return g;
}

double ParaboloidFamily::value(const Point& x, const Point& y, int dim) const {
    const double q = 0.5 * M * dist2(x, y, dim);
    return (sign == ParaboloidSign::Concave ? -q : q) + vertical_offset;
}

std::string ParaboloidFamily::describe() const {
    std::ostringstream os;
    os << (sign == ParaboloidSign::Concave ? "concave" : "convex") << " paraboloids M=" << M
       << " offset=" << vertical_offset << " centers=" << center_set.describe();
    return os.str();
}

RadialProfileFamily::RadialProfileFamily(double a, double r, double c0, Region centers)
    : alpha(a), rho(r), C0(c0), center_set(std::move(centers)) {
    if (!(alpha >= 1.0)) throw std::invalid_argument("alpha must be at least 1");
    if (!(rho > 0.0 && rho < 0.5)) throw std::invalid_argument("rho must lie in (0,1/2)");
    if (!(C0 >= 1.0)) throw std::invalid_argument("C0 must be at least 1");
}

double RadialProfileFamily::q(double r) const {
    const double cap = std::pow(rho / 2.0, -alpha);
    if (r <= rho / 2.0) return cap;
    return std::min(std::pow(r, -alpha), cap);
}

double RadialProfileFamily::C1() const { return 1.0 / (q(0.5 + rho / 2.0) - q(1.0 - rho / 2.0)); }

double RadialProfileFamily::value(const Point& x, const Point& y, int dim) const {
    return C0 * C1() * (q(dist(x, y, dim)) - q(1.0 - rho / 2.0));
}

Point RadialProfileFamily::gradient(const Point& x, const Point& y, int dim) const {
    Point g{0.0, 0.0, 0.0};
    const double r = dist(x, y, dim);
    if (r <= rho / 2.0) return g;
    const double dq = -alpha * std::pow(r, -alpha - 1.0);
    for (int d = 0; d < dim; ++d) g[d] = C0 * C1() * dq * (x[d] - y[d]) / r;
    return g;
}

SymMatrix RadialProfileFamily::hessian(const Point& x, const Point& y, int dim) const {
    SymMatrix H(dim);
    const double r = dist(x, y, dim);
    if (r <= rho / 2.0) return H;
    const double a = C0 * C1() * alpha * std::pow(r, -alpha - 2.0);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            const double zi = (x[i] - y[i]) / r, zj = (x[j] - y[j]) / r;
            H.set(i, j, a * ((alpha + 2.0) * zi * zj - (i == j ? 1.0 : 0.0)));
        }
    return H;
}

double RadialProfileFamily::sup() const { return C0 * C1() * (q(0.0) - q(1.0 - rho / 2.0)); }

std::string RadialProfileFamily::describe() const {
    std::ostringstream os;
    os << "radial profile alpha=" << alpha << " rho=" << rho << " C0=" << C0 << " C1=" << C1()
       << " centers=" << center_set.describe();
    return os.str();
}

std::vector<std::size_t> ContactSet::contact_nodes(bool interior_only) const {
    std::vector<std::size_t> out;
    for (const auto& e : entries)
        if (!interior_only || !e.boundary) out.push_back(e.node);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Region ContactSet::as_region() const {
    std::vector<std::uint8_t> m(grid.size(), 0);
    for (const auto& e : entries) m[e.node] = 1;
    return Region::node_set(grid, std::move(m));
}

ContactSet contact_set(const ScalarField& u, const TestFamily& family, const ContactOptions& opts) {
    const Grid& g = u.grid();
    const int n = g.dim();
    const double h = g.h();
    const auto members = domain_members(u, opts.domain);
    const auto layer = boundary_layer(g, members);

    const Region& centers_region =
        std::visit([](const auto& f) -> const Region& { return f.center_set; }, family);
    const auto centers = centers_region.nodes(g);
    if (centers.empty()) throw std::invalid_argument("center set is empty");

    std::vector<std::size_t> domain_nodes;
    double umin = kInf;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (members[i]) {
            domain_nodes.push_back(i);
            umin = std::min(umin, u[i]);
        }
    if (domain_nodes.empty()) throw std::invalid_argument("contact domain is empty");

    ContactSet cs{g, {}, 0.0, std::visit([](const auto& f) { return f.describe(); }, family), centers.size()};

    const auto* para = std::get_if<ParaboloidFamily>(&family);
    const auto* radial = std::get_if<RadialProfileFamily>(&family);
    if (para && !(para->M > 0.0)) throw std::invalid_argument("opening M must be positive");

    std::vector<std::size_t> candidates;
    std::vector<double> vals;
    for (std::size_t c : centers) {
        const Point y = g.point(c);
        candidates.clear();
        double tau = 0.0;
        if (para) tau = opts.tau_factor * para->M * h * h + 1e-12;
        if (para && para->sign == ParaboloidSign::Concave && members[c]) {
            // u(x) + (M/2)|x-y|^2 <= u(y) + tau bounds the search radius
            const double R = std::sqrt(2.0 * (u[c] - umin + tau) / para->M);
            const int kr = static_cast<int>(std::ceil(R / h)) + 1;
            const Index3 ci = g.multi_index(c);
            Index3 lo{0, 0, 0}, hi{0, 0, 0};
            for (int d = 0; d < n; ++d) {
                lo[d] = std::max(0, ci[d] - kr);
                hi[d] = std::min(g.counts()[d] - 1, ci[d] + kr);
            }
            for (int i0 = lo[0]; i0 <= hi[0]; ++i0)
                for (int i1 = lo[1]; i1 <= hi[1]; ++i1)
                    for (int i2 = lo[2]; i2 <= hi[2]; ++i2) {
                        const std::size_t idx = g.index({i0, i1, i2});
                        if (members[idx]) candidates.push_back(idx);
                    }
        } else {
            candidates = domain_nodes;
        }
        vals.resize(candidates.size());
        double m = kInf;
        std::size_t arg = candidates.front();
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            const Point x = g.point(candidates[k]);
            const double phi = para ? para->value(x, y, n) : radial->value(x, y, n);
            vals[k] = u[candidates[k]] - phi;
            if (vals[k] < m) {
                m = vals[k];
                arg = candidates[k];
            }
        }
        if (radial) {
            const Point xs = g.point(arg);
            const auto ev = eigenvalues(radial->hessian(xs, y, n));
            const double op = std::max(std::abs(ev.front()), std::abs(ev.back()));
            tau = opts.tau_factor * op * h * h + 1e-12;
        }
        cs.tolerance = std::max(cs.tolerance, tau);
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            if (vals[k] > m + tau) continue;
            ContactEntry e;
            e.node = candidates[k];
            e.x0 = g.point(e.node);
            e.y0 = y;
            e.offset = m;
            e.gap = vals[k] - m;
            e.tau = tau;
            e.boundary = layer[e.node] || !g.is_interior(e.node);
            if (g.is_interior(e.node)) e.gradient = gradient_at(u, e.node);
            cs.entries.push_back(e);
        }
    }
    return cs;
}

TransportRecord transport_map(const ContactSet& contact, const ScalarField& u, const TestFamily& family) {
    TransportRecord tr;
    const int n = contact.grid.dim();
    const auto* para = std::get_if<ParaboloidFamily>(&family);
    const auto* radial = std::get_if<RadialProfileFamily>(&family);
    for (std::size_t k = 0; k < contact.entries.size(); ++k) {
        const auto& e = contact.entries[k];
        if (e.boundary) continue;
        const SymMatrix D2u = hessian_at(u, e.node);
        Point T{0.0, 0.0, 0.0};
        std::array<std::array<double, 3>, 3> DT{};
        if (para) {
            const double s = para->sign == ParaboloidSign::Concave ? 1.0 : -1.0;
            for (int i = 0; i < n; ++i) {
                T[i] = e.x0[i] + s * e.gradient[i] / para->M;
                for (int j = 0; j < n; ++j) DT[i][j] = (i == j ? 1.0 : 0.0) + s * D2u(i, j) / para->M;
            }
        } else {
            if (dist(e.x0, e.y0, n) <= radial->rho / 2.0)
                throw std::runtime_error("profile gradient not invertible here");
            const double pn = norm(e.gradient, n);
            const double K = radial->C0 * radial->C1() * radial->alpha;
            Point z{0.0, 0.0, 0.0};
            if (pn > 0.0) {
                // D phi_0(z) = -K |z|^{-alpha-1} z/|z|
                const double r = std::pow(K / pn, 1.0 / (radial->alpha + 1.0));
                for (int d = 0; d < n; ++d) z[d] = -r * e.gradient[d] / pn;
            } else {
                for (int d = 0; d < n; ++d) z[d] = e.x0[d] - e.y0[d];
            }
            for (int d = 0; d < n; ++d) T[d] = e.x0[d] - z[d];
            // Phi^{-1} = (1/a) (zz^T/(alpha+1) - (I - zz^T)) at the recorded z = x0 - y0
            const double r0 = dist(e.x0, e.y0, n);
            const double a = K * std::pow(r0, -radial->alpha - 2.0);
            std::array<std::array<double, 3>, 3> Pinv{};
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double zi = (e.x0[i] - e.y0[i]) / r0, zj = (e.x0[j] - e.y0[j]) / r0;
                    Pinv[i][j] = (zi * zj / (radial->alpha + 1.0) - ((i == j ? 1.0 : 0.0) - zi * zj)) / a;
                }
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (int l = 0; l < n; ++l) s += Pinv[i][l] * D2u(l, j);
                    DT[i][j] = (i == j ? 1.0 : 0.0) - s;
                }
        }
        const double det = det3(DT, n);
        tr.entry.push_back(k);
        tr.image.push_back(T);
        tr.raw_jacobian.push_back(det);
        tr.jacobian.push_back(std::max(det, 0.0));
        if (det < 0.0) tr.clamped_total += -det;
    }
    return tr;
}

CheckReport area_formula_check(const ContactSet& contact, const TransportRecord& transport, const Region& center_set) {
    const Grid& g = contact.grid;
    const double cell = g.cell_volume();
    CheckReport r;
    r.name = "area_formula";
    r.h = g.h();
    r.dim = g.dim();
    const auto members = center_set.membership(g);
    const auto layer = boundary_layer(g, members);
    std::size_t count = 0, layer_count = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        count += members[i];
        layer_count += layer[i];
    }
    std::unordered_map<std::size_t, double> per_node;
    for (std::size_t k = 0; k < transport.entry.size(); ++k) {
        const std::size_t node = contact.entries[transport.entry[k]].node;
        auto [it, fresh] = per_node.emplace(node, transport.jacobian[k]);
        if (!fresh) it->second = std::max(it->second, transport.jacobian[k]);
    }
    double sum = 0.0;
    for (const auto& [node, j] : per_node) sum += j;
    r.lhs = static_cast<double>(count) * cell;
    r.rhs = sum * cell;
    r.tolerance = static_cast<double>(layer_count) * cell;
    r.measured["center_nodes"] = static_cast<double>(count);
    r.measured["contact_nodes"] = static_cast<double>(per_node.size());
    r.measured["clamped_total"] = transport.clamped_total * cell;
    r.measured["slack"] = count ? r.tolerance / r.lhs : 0.0;
    r.finalize();
    return r;
}

double localization_C0(int n, const Ellipticity& ell, double rho) {
    const double alpha = ell.Lambda * n / ell.lambda;
    const RadialProfileFamily base(alpha, rho, 1.0, Region::all());
    const double fac = base.C1() * alpha * std::pow(1.0 + rho / 2.0, -alpha - 2.0) *
                       (ell.lambda * (alpha + 1.0) - ell.Lambda * (n - 1));
    double C0 = 1.0;
    while (C0 * fac < 1.0) C0 *= 2.0;
    return C0;
}

namespace {

struct PucciNormInfo {
    double norm = 0.0;
    std::size_t nodes = 0;
};

// ||(P^-(D^2 u))_+||_{L^n} over the listed nodes that carry a full stencil.
PucciNormInfo pucci_plus_part_norm(const ScalarField& u, const Ellipticity& ell, const std::vector<std::size_t>& nodes) {
    const Grid& g = u.grid();
    std::vector<double> vals;
    for (std::size_t i : nodes) {
        if (!g.is_interior(i)) continue;
        vals.push_back(std::max(0.0, pucci_minus(hessian_at(u, i), ell)));
    }
    return {lp_over(vals, g.dim(), g.cell_volume()), vals.size()};
}

std::vector<std::size_t> unmasked_nodes(const ScalarField& u, const Region& r) {
    std::vector<std::size_t> out;
    for (std::size_t i : r.nodes(u.grid()))
        if (!u.masked(i)) out.push_back(i);
    return out;
}

}  // namespace

CheckReport measure_estimate_check(const ScalarField& u, const Ellipticity& ell, double delta) {
    const Grid& g = u.grid();
    const int n = g.dim();
    if (!covers_unit_cube(g)) throw std::invalid_argument("field grid does not cover B_1");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    const Point o{0.0, 0.0, 0.0};
    const Region B1 = Region::ball(o, 1.0);
    const auto b1 = unmasked_nodes(u, B1);
    double umin = kInf;
    for (std::size_t i : b1) umin = std::min(umin, u[i]);
    if (umin < -1e-12) {
        std::ostringstream os;
        os << "hypotheses fail: u < 0 on B_1 (min " << umin << ")";
        throw HypothesisError(os.str());
    }
    const auto pn = pucci_plus_part_norm(u, ell, b1);
    if (pn.norm > delta) {
        std::ostringstream os;
        os << "hypotheses fail: ||(P^-(D^2u))_+||_{L^n(B_1)} = " << pn.norm << " > delta = " << delta;
        throw HypothesisError(os.str());
    }
    const double theta = 0.25;
    const auto zero = g.node_at(o);
    const double u0 = zero ? u[*zero] : u.interpolate(o);
    if (u0 > theta) {
        std::ostringstream os;
        os << "hypotheses fail: u(0) = " << u0 << " > theta = " << theta;
        throw HypothesisError(os.str());
    }

    const Region B = Region::ball(o, 0.25);
    ParaboloidFamily fam{1.0, ParaboloidSign::Concave, B, 0.5 * 0.75 * 0.75};
    ContactOptions copt;
    copt.domain = B1;
    const ContactSet cs = contact_set(u, fam, copt);
    const TransportRecord tr = transport_map(cs, u, fam);
    const CheckReport area = area_formula_check(cs, tr, B);

    CheckReport r;
    r.name = "measure_estimate";
    r.h = g.h();
    r.dim = n;
    std::size_t bad_level = 0, boundary = 0;
    for (const auto& e : cs.entries) {
        if (u[e.node] > 1.0 + 1e-12) ++bad_level;
        if (e.boundary) ++boundary;
    }
    double Cm = 1.0;
    std::vector<double> pm_on_A;
    for (std::size_t k = 0; k < tr.entry.size(); ++k) {
        const auto& e = cs.entries[tr.entry[k]];
        const double pm = std::max(0.0, pucci_minus(hessian_at(u, e.node), ell));
        pm_on_A.push_back(pm);
        Cm = std::max(Cm, tr.jacobian[k] / (1.0 + std::pow(pm, n)));
    }
    const double lam_ratio = std::max(1.0 + (n - 1) * ell.Lambda / ell.lambda, 1.0 / ell.lambda);
    const double C_theory = std::pow(2.0, n - 1) * std::pow(lam_ratio, n);
    const double measB = B.measure(g);
    const double eta = measB / (2.0 * Cm);

    std::size_t sub = 0;
    for (std::size_t i : b1)
        if (u[i] <= 1.0) ++sub;
    r.lhs = eta;
    r.rhs = static_cast<double>(sub) * g.cell_volume();
    r.constants.theta = theta;
    r.constants.delta = delta;
    r.constants.C = Cm;
    r.constants.extra["C_theory"] = C_theory;
    if (eta > 0.0 && eta < 1.0) r.constants.eta = eta;
    else r.constants.extra["eta"] = eta;
    const double normA = lp_over(pm_on_A, n, g.cell_volume());
    r.measured["pucci_norm_B1"] = pn.norm;
    r.measured["pucci_norm_A"] = normA;
    r.measured["contact_entries"] = static_cast<double>(cs.entries.size());
    r.measured["contact_nodes"] = static_cast<double>(cs.contact_nodes().size());
    r.measured["boundary_contacts"] = static_cast<double>(boundary);
    r.measured["contacts_above_level"] = static_cast<double>(bad_level);
    r.measured["area_lhs"] = area.lhs;
    r.measured["area_rhs"] = area.rhs;
    r.measured["area_margin"] = area.margin;
    r.measured["chain_bound"] = measB / Cm - std::pow(normA, n);
    r.measured["ratio_sublevel_B1"] = r.rhs / B1.measure(g);
    r.finalize();
    if (bad_level) r.fail("contact points outside {u <= 1}");
    if (!area.pass) r.fail("area formula fails on the contact set");
    if (boundary) r.notes.push_back("boundary contacts excluded from the transport");
    if (std::pow(normA, n) > measB / (2.0 * Cm))
        r.notes.push_back("delta^n exceeds |B_{1/4}|/(2C): conclusion measured, not implied");
    return r;
}

CheckReport localization_check(const ScalarField& u, const Ellipticity& ell, double rho, double delta) {
    const Grid& g = u.grid();
    const int n = g.dim();
    if (!covers_unit_cube(g)) throw std::invalid_argument("field grid does not cover B_1");
    if (!(rho > 0.0 && rho < 0.5)) throw std::invalid_argument("rho must lie in (0,1/2)");
    const Point o{0.0, 0.0, 0.0};
    const auto b1 = unmasked_nodes(u, Region::ball(o, 1.0));
    double umin = kInf;
    for (std::size_t i : b1) umin = std::min(umin, u[i]);
    if (umin < -1e-12) {
        std::ostringstream os;
        os << "hypotheses fail: u < 0 on B_1 (min " << umin << ")";
        throw HypothesisError(os.str());
    }
    const auto pn = pucci_plus_part_norm(u, ell, b1);
    if (pn.norm > delta) {
        std::ostringstream os;
        os << "hypotheses fail: ||(P^-(D^2u))_+||_{L^n(B_1)} = " << pn.norm << " > delta = " << delta;
        throw HypothesisError(os.str());
    }
    double min_half = kInf;
    for (std::size_t i : unmasked_nodes(u, Region::ball(o, 0.5, true))) min_half = std::min(min_half, u[i]);
    if (min_half > 1.0) {
        std::ostringstream os;
        os << "hypotheses fail: min over closed B_1/2 is " << min_half << " > 1";
        throw HypothesisError(os.str());
    }

    const double alpha = ell.Lambda * n / ell.lambda;
    const double C0 = localization_C0(n, ell, rho);
    const RadialProfileFamily fam(alpha, rho, C0, Region::ball(o, rho / 2.0));
    const double M = fam.sup();

    std::vector<Point> centers;
    {
        auto cn = fam.center_set.nodes(g);
        const std::size_t stride = std::max<std::size_t>(1, cn.size() / 64);
        for (std::size_t k = 0; k < cn.size(); k += stride) centers.push_back(g.point(cn[k]));
        for (int d = 0; d < n; ++d)
            for (double s : {-1.0, 1.0}) {
                Point y{0.0, 0.0, 0.0};
                y[d] = s * (rho / 2.0) * (1.0 - 1e-9);
                centers.push_back(y);
            }
    }
    const auto half_nodes = Region::ball(o, 0.5, true).nodes(g);
    const auto ann_nodes = Region::ball(o, 1.0).minus(Region::ball(o, rho, true)).nodes(g);
    const auto sphere = sphere_samples(n);
    double phi_min_half = kInf, phi_max_sphere = -kInf, min_dist_ann = kInf, pucci_min_ann = kInf;
    for (const Point& y : centers) {
        const double ny = norm(y, n);
        Point far{0.0, 0.0, 0.0};
        for (int d = 0; d < n; ++d) far[d] = ny > 0 ? -0.5 * y[d] / ny : (d == 0 ? 0.5 : 0.0);
        phi_min_half = std::min(phi_min_half, fam.value(far, y, n));
        for (std::size_t i : half_nodes) phi_min_half = std::min(phi_min_half, fam.value(g.point(i), y, n));
        for (const Point& s : sphere) phi_max_sphere = std::max(phi_max_sphere, fam.value(s, y, n));
        for (std::size_t i : ann_nodes) {
            const Point x = g.point(i);
            min_dist_ann = std::min(min_dist_ann, dist(x, y, n));
            pucci_min_ann = std::min(pucci_min_ann, pucci_minus(fam.hessian(x, y, n), ell));
        }
        // the annulus infimum of P^- sits where |x - y| is largest
        Point xf{0.0, 0.0, 0.0};
        for (int d = 0; d < n; ++d) xf[d] = ny > 0 ? -y[d] / ny : (d == 0 ? 1.0 : 0.0);
        pucci_min_ann = std::min(pucci_min_ann, pucci_minus(fam.hessian(xf, y, n), ell));
    }

    double min_rho = kInf;
    for (std::size_t i : unmasked_nodes(u, Region::ball(o, rho, true))) min_rho = std::min(min_rho, u[i]);

    CheckReport r;
    r.name = "localization";
    r.h = g.h();
    r.dim = n;
    r.lhs = min_rho;
    r.rhs = M;
    r.constants.rho = rho;
    r.constants.delta = delta;
    r.constants.M = M;
    r.constants.extra["profile_alpha"] = alpha;
    r.constants.extra["C0"] = C0;
    r.constants.extra["C1"] = fam.C1();
    r.measured["phi_min_closed_half_ball"] = phi_min_half;
    r.measured["phi_max_unit_sphere"] = phi_max_sphere;
    r.measured["min_center_distance_annulus"] = min_dist_ann;
    r.measured["pucci_min_annulus"] = pucci_min_ann;
    r.measured["pucci_norm_B1"] = pn.norm;
    r.measured["min_closed_half_ball"] = min_half;
    r.measured["centers_sampled"] = static_cast<double>(centers.size());
    r.finalize();
    if (phi_min_half < 1.0) r.fail("profile below 1 on the closed half ball");
    if (!(phi_max_sphere < 0.0)) r.fail("profile not negative on the unit sphere");
    if (!(min_dist_ann > rho / 2.0)) r.fail("profile cap reaches the annulus");
    if (pucci_min_ann < 1.0 - 1e-12) r.fail("P^-(D^2 phi) < 1 on the annulus");
    return r;
}

double abp_constant(int n, const Ellipticity& ell) {
    return 2.0 / (ell.lambda * std::pow(unit_ball_volume(n), 1.0 / n));
}

CheckReport abp_bound(const ScalarField& u, const Ellipticity& ell, const AbpOptions& opts) {
    const Grid& g = u.grid();
    const int n = g.dim();
    if (!covers_unit_cube(g)) throw std::invalid_argument("field grid does not cover B_1");
    if (opts.forcing && !opts.forcing->grid().same_as(g)) throw std::invalid_argument("grid mismatch");
    const Point o{0.0, 0.0, 0.0};
    const auto dom = unmasked_nodes(u, Region::ball(o, 1.0, true));
    std::vector<std::uint8_t> members(g.size(), 0);
    for (std::size_t i : dom) members[i] = 1;
    const auto layer = boundary_layer(g, members);
    double bmin = kInf, m = 0.0, scale = 0.0;
    for (std::size_t i : dom) {
        if (layer[i]) bmin = std::min(bmin, u[i]);
        m = std::max(m, -u[i]);
        scale = std::max(scale, std::abs(u[i]));
    }
    // layer nodes sit up to one spacing inside the sphere, so allow h times the local slope there
    double layer_slope = 0.0;
    for (std::size_t i : dom)
        if (layer[i] && g.is_interior(i)) layer_slope = std::max(layer_slope, norm(gradient_at(u, i), n));
    const double slack = g.h() * layer_slope + 1e-12;
    if (bmin < -slack) {
        std::ostringstream os;
        os << "hypotheses fail: u < 0 on the boundary of B_1 (min " << bmin << ")";
        throw HypothesisError(os.str());
    }
    const double deficit = std::max(0.0, -bmin);
    const double Cimpl = abp_constant(n, ell);
    CheckReport r;
    r.name = "abp";
    r.h = g.h();
    r.dim = n;
    r.constants.C = std::max(1.0, Cimpl);
    r.constants.extra["C_impl"] = Cimpl;
    if (m <= 0.0) {
        r.lhs = 0.0;
        r.rhs = 0.0;
        r.notes.push_back("no negative part");
        r.finalize();
        return r;
    }
    const int counts = opts.slope_counts > 0 ? opts.slope_counts : (n == 1 ? 64 : (n == 2 ? 16 : 6));
    const double s = m / (2.0 * counts);
    std::vector<Point> slopes;
    for (int a = -counts; a <= counts; ++a)
        for (int b = (n > 1 ? -counts : 0); b <= (n > 1 ? counts : 0); ++b)
            for (int c = (n > 2 ? -counts : 0); c <= (n > 2 ? counts : 0); ++c) {
                const Point p{a * s, b * s, c * s};
                if (norm(p, n) < m / 2.0) slopes.push_back(p);
            }
    std::vector<Point> pts(dom.size());
    for (std::size_t k = 0; k < dom.size(); ++k) pts[k] = g.point(dom[k]);
    std::vector<std::uint8_t> inA(g.size(), 0);
    const double tau = 1e-12 * (1.0 + scale);
    std::size_t boundary = 0;
    std::vector<double> v(dom.size());
    for (const Point& p : slopes) {
        double best = kInf;
        for (std::size_t k = 0; k < dom.size(); ++k) {
            double dot = 0.0;
            for (int d = 0; d < n; ++d) dot += p[d] * pts[k][d];
            v[k] = u[dom[k]] - dot;
            best = std::min(best, v[k]);
        }
        for (std::size_t k = 0; k < dom.size(); ++k)
            if (v[k] <= best + tau) {
                if (!inA[dom[k]] && layer[dom[k]]) ++boundary;
                inA[dom[k]] = 1;
            }
    }
    std::vector<double> vals;
    std::size_t a_nodes = 0, skipped = 0;
    std::vector<Point> grads;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!inA[i]) continue;
        ++a_nodes;
        if (!g.is_interior(i)) {
            ++skipped;
            continue;
        }
        grads.push_back(gradient_at(u, i));
        if (opts.forcing) vals.push_back(std::max(0.0, (*opts.forcing)[i]));
        else vals.push_back(std::max(0.0, pucci_minus(hessian_at(u, i), ell)));
    }
    const double nrm = lp_over(vals, n, g.cell_volume());
    // fraction of slope cells reached by the discrete gradient image of A
    std::size_t covered = 0;
    {
        std::vector<std::array<long long, 3>> cells;
        for (const Point& q : grads) {
            std::array<long long, 3> c{0, 0, 0};
            for (int d = 0; d < n; ++d) c[d] = std::llround(q[d] / s);
            cells.push_back(c);
        }
        std::sort(cells.begin(), cells.end());
        for (const Point& p : slopes) {
            std::array<long long, 3> c{0, 0, 0};
            for (int d = 0; d < n; ++d) c[d] = std::llround(p[d] / s);
            if (std::binary_search(cells.begin(), cells.end(), c)) ++covered;
        }
    }
    r.lhs = m;
    r.rhs = Cimpl * nrm;
    // u + deficit is non-negative on the layer, and the estimate for it shifts by the deficit
    r.tolerance = deficit;
    r.measured["boundary_deficit"] = deficit;
    r.measured["slopes"] = static_cast<double>(slopes.size());
    r.measured["slope_spacing"] = s;
    r.measured["contact_nodes"] = static_cast<double>(a_nodes);
    r.measured["boundary_contacts"] = static_cast<double>(boundary);
    r.measured["stencil_skipped"] = static_cast<double>(skipped);
    r.measured["norm_on_A"] = nrm;
    r.measured["slope_cover_fraction"] = static_cast<double>(covered) / static_cast<double>(slopes.size());
    r.finalize();
    if (opts.forcing) r.notes.push_back("norm taken of the supplied forcing f_+ on A");
    return r;
}

double aleksandrov_constant(int n) { return n / unit_ball_volume(n - 1); }

CheckReport aleksandrov_check(const ScalarField& u, const Region& omega, double convexity_tol) {
    const Grid& g = u.grid();
    const int n = g.dim();
    const auto members = omega.membership(g);
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (members[i]) nodes.push_back(i);
    if (nodes.empty()) throw std::invalid_argument("empty region");

    double min_eig = kInf, det_sum = 0.0;
    std::size_t hess_nodes = 0;
    for (std::size_t i : nodes) {
        if (!g.is_interior(i)) continue;
        const SymMatrix H = hessian_at(u, i);
        const auto ev = eigenvalues(H);
        min_eig = std::min(min_eig, ev.front());
        det_sum += std::max(0.0, H.determinant());
        ++hess_nodes;
    }
    if (min_eig < -convexity_tol) {
        std::ostringstream os;
        os << "convexity violated: min Hessian eigenvalue " << min_eig;
        throw std::invalid_argument(os.str());
    }

    // diameter from directional widths of the node cloud
    std::vector<Point> dirs;
    if (n == 1) dirs.push_back({1.0, 0.0, 0.0});
    else if (n == 2)
        for (int k = 0; k < 360; ++k) {
            const double t = std::numbers::pi * k / 360.0;
            dirs.push_back({std::cos(t), std::sin(t), 0.0});
        }
    else dirs = sphere_samples(3);
    double diam = 0.0;
    for (const Point& e : dirs) {
        double lo = kInf, hi = -kInf;
        for (std::size_t i : nodes) {
            const Point x = g.point(i);
            double d = 0.0;
            for (int k = 0; k < n; ++k) d += e[k] * x[k];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        diam = std::max(diam, hi - lo);
    }

    std::vector<double> edt;
    bool closed_form = true;
    for (std::size_t i : nodes)
        if (!omega.boundary_distance(g.point(i), n)) {
            closed_form = false;
            break;
        }
    if (!closed_form) {
        std::vector<std::uint8_t> outside(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) outside[i] = !members[i];
        edt = distance_to_set(g, outside);
    }
    double lhs = 0.0, bmax = 0.0;
    for (std::size_t i : nodes) {
        const double d = closed_form ? *omega.boundary_distance(g.point(i), n) : edt[i];
        if (!(d > 0.0) || !std::isfinite(d)) {
            bmax = std::max(bmax, std::abs(u[i]));
            continue;
        }
        lhs = std::max(lhs, std::pow(std::abs(u[i]), n) / d);
    }
    const double C = aleksandrov_constant(n);
    CheckReport r;
    r.name = "aleksandrov";
    r.h = g.h();
    r.dim = n;
    r.lhs = lhs;
    r.rhs = C * std::pow(diam, n - 1) * det_sum * g.cell_volume();
    r.constants.C = std::max(1.0, C);
    r.constants.extra["C_impl"] = C;
    r.measured["diameter"] = diam;
    r.measured["min_hessian_eigenvalue"] = hess_nodes ? min_eig : 0.0;
    r.measured["monge_ampere_mass"] = det_sum * g.cell_volume();
    r.measured["boundary_abs_max"] = bmax;
    r.measured["distance_closed_form"] = closed_form ? 1.0 : 0.0;
    r.finalize();
    return r;
}

HessianContactResult hessian_contact_set(const ScalarField& u, double M, const Region& center_set) {
    if (!(M > 0.0)) throw std::invalid_argument("opening M must be positive");
    ParaboloidFamily fam{M, ParaboloidSign::Concave, center_set, 0.0};
    ContactSet cs = contact_set(u, fam);
    CheckReport r;
    r.name = "hessian_contact";
    r.h = u.grid().h();
    r.dim = u.grid().dim();
    double min_eig = kInf;
    std::size_t interior = 0;
    for (std::size_t node : cs.contact_nodes(true)) {
        min_eig = std::min(min_eig, eigenvalues(hessian_at(u, node)).front());
        ++interior;
    }
    const double h = u.grid().h();
    r.lhs = interior ? -min_eig : -kInf;
    r.rhs = M;
    r.tolerance = 2.0 * cs.tolerance / (h * h);
    r.constants.M = M >= 1.0 ? std::optional<double>(M) : std::nullopt;
    r.constants.extra["opening"] = M;
    r.measured["interior_contacts"] = static_cast<double>(interior);
    r.measured["boundary_contacts"] = static_cast<double>(cs.contact_nodes().size() - interior);
    r.measured["min_hessian_eigenvalue"] = interior ? min_eig : 0.0;
    r.finalize();
    if (!interior) {
        r.lhs = 0.0;
        r.finalize();
        r.notes.push_back("no interior contacts");
    }
    return HessianContactResult{std::move(cs), std::move(r)};
}

}  // namespace kslab
