#include "kslab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kslab/envelope.hpp"

namespace kslab {

double norm(const Point& p, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += p[d] * p[d];
    return std::sqrt(s);
}

double dist2(const Point& a, const Point& b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
}

double dist(const Point& a, const Point& b, int dim) { return std::sqrt(dist2(a, b, dim)); }

double unit_ball_volume(int n) {
    switch (n) {
        case 1: return 2.0;
        case 2: return std::numbers::pi;
        case 3: return 4.0 * std::numbers::pi / 3.0;
        default: return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
    }
}

double ball_volume(int n, double r) { return unit_ball_volume(n) * std::pow(r, n); }

Grid::Grid(int dim, double h, Point origin, Index3 counts) : dim_(dim), h_(h), origin_(origin), counts_(counts) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("grid spacing must be positive");
    for (int d = 0; d < 3; ++d) {
        if (d < dim) {
            if (counts_[d] < 3) throw std::invalid_argument("grid needs at least 3 nodes per axis");
        } else {
            counts_[d] = 1;
            origin_[d] = 0.0;
        }
    }
    size_ = static_cast<std::size_t>(counts_[0]) * counts_[1] * counts_[2];
}

Grid Grid::cube(int dim, double h, double half_width, Point center) {
    const int n = static_cast<int>(std::lround(half_width / h));
    Point o{0.0, 0.0, 0.0};
    Index3 c{1, 1, 1};
    for (int d = 0; d < dim; ++d) {
        o[d] = center[d] - n * h;
        c[d] = 2 * n + 1;
    }
    return Grid(dim, h, o, c);
}

double Grid::cell_volume() const { return std::pow(h_, dim_); }

Point Grid::upper() const {
    Point u = origin_;
    for (int d = 0; d < dim_; ++d) u[d] = origin_[d] + (counts_[d] - 1) * h_;
    return u;
}

double Grid::diameter() const { return dist(origin_, upper(), dim_); }

Index3 Grid::multi_index(std::size_t idx) const {
    Index3 i{0, 0, 0};
    i[2] = static_cast<int>(idx % counts_[2]);
    idx /= counts_[2];
    i[1] = static_cast<int>(idx % counts_[1]);
    i[0] = static_cast<int>(idx / counts_[1]);
    return i;
}

Point Grid::point(const Index3& i) const {
    Point p{0.0, 0.0, 0.0};
    for (int d = 0; d < dim_; ++d) p[d] = origin_[d] + i[d] * h_;
    return p;
}

Point Grid::point(std::size_t idx) const { return point(multi_index(idx)); }

bool Grid::in_range(const Index3& i) const {
    for (int d = 0; d < 3; ++d)
        if (i[d] < 0 || i[d] >= counts_[d]) return false;
    return true;
}

std::optional<std::size_t> Grid::node_at(const Point& p) const {
    Index3 i{0, 0, 0};
    for (int d = 0; d < dim_; ++d) {
        const double t = (p[d] - origin_[d]) / h_;
        const double r = std::round(t);
        if (std::abs(t - r) > 1e-9) return std::nullopt;
        i[d] = static_cast<int>(r);
    }
    if (!in_range(i)) return std::nullopt;
    return index(i);
}

std::size_t Grid::nearest_node(const Point& p) const {
    Index3 i{0, 0, 0};
    for (int d = 0; d < dim_; ++d) {
        const double t = std::round((p[d] - origin_[d]) / h_);
        i[d] = static_cast<int>(std::clamp(t, 0.0, static_cast<double>(counts_[d] - 1)));
    }
    return index(i);
}

bool Grid::contains_point(const Point& p, double slack) const {
    const Point u = upper();
    for (int d = 0; d < dim_; ++d)
        if (p[d] < origin_[d] - slack || p[d] > u[d] + slack) return false;
    return true;
}

bool Grid::is_interior(std::size_t idx, int margin) const {
    const Index3 i = multi_index(idx);
    for (int d = 0; d < dim_; ++d)
        if (i[d] < margin || i[d] >= counts_[d] - margin) return false;
    return true;
}

Grid Grid::shrink(int margin) const {
    Point o = origin_;
    Index3 c = counts_;
    for (int d = 0; d < dim_; ++d) {
        o[d] += margin * h_;
        c[d] -= 2 * margin;
        if (c[d] < 3) throw std::invalid_argument("grid too small");
    }
    return Grid(dim_, h_, o, c);
}

bool Grid::same_as(const Grid& o) const {
    if (dim_ != o.dim_ || counts_ != o.counts_) return false;
    if (std::abs(h_ - o.h_) > 1e-12 * h_) return false;
    for (int d = 0; d < dim_; ++d)
        if (std::abs(origin_[d] - o.origin_[d]) > 1e-9 * h_) return false;
    return true;
}

ScalarField::ScalarField(Grid grid, std::vector<double> values, std::string name)
    : grid_(std::move(grid)), values_(std::move(values)), name_(std::move(name)) {
    if (values_.size() != grid_.size()) throw std::invalid_argument("value count does not match node count");
    for (double v : values_)
        if (!std::isfinite(v)) throw std::invalid_argument("field values must be finite");
}

ScalarField ScalarField::from_function(const Grid& grid, const std::function<double(const Point&)>& fn,
                                       std::string name) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid.point(i));
    return ScalarField(grid, std::move(v), std::move(name));
}

ScalarField ScalarField::constant(const Grid& grid, double c, std::string name) {
    return ScalarField(grid, std::vector<double>(grid.size(), c), std::move(name));
}

bool ScalarField::masked(std::size_t idx) const {
    if (!mask_) return false;
    return dist(grid_.point(idx), mask_->center, grid_.dim()) < mask_->radius;
}

double ScalarField::interpolate(const Point& p) const {
    const int n = grid_.dim();
    if (!grid_.contains_point(p, 1e-9 * grid_.h()))
        throw std::invalid_argument("requested source region exits the grid");
    Index3 base{0, 0, 0};
    std::array<double, 3> frac{0.0, 0.0, 0.0};
    for (int d = 0; d < n; ++d) {
        double t = (p[d] - grid_.origin()[d]) / grid_.h();
        t = std::clamp(t, 0.0, static_cast<double>(grid_.counts()[d] - 1));
        int b = static_cast<int>(std::floor(t));
        if (b >= grid_.counts()[d] - 1) b = grid_.counts()[d] - 2;
        base[d] = b;
        frac[d] = t - b;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << n); ++corner) {
        Index3 i = base;
        double w = 1.0;
        for (int d = 0; d < n; ++d) {
            const int bit = (corner >> d) & 1;
            i[d] += bit;
            w *= bit ? frac[d] : 1.0 - frac[d];
        }
        if (w != 0.0) acc += w * values_[grid_.index(i)];
    }
    return acc;
}

double ScalarField::neighbour_variation() const {
    double m = 0.0;
    for (std::size_t idx = 0; idx < values_.size(); ++idx) {
        const Index3 i = grid_.multi_index(idx);
        for (int d = 0; d < grid_.dim(); ++d) {
            if (i[d] + 1 >= grid_.counts()[d]) continue;
            Index3 j = i;
            ++j[d];
            m = std::max(m, std::abs(values_[grid_.index(j)] - values_[idx]));
        }
    }
    return m;
}

ScalarField ScalarField::restrict_to(const Grid& target) const {
    std::vector<double> v(target.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto j = grid_.node_at(target.point(i));
        if (!j) throw std::invalid_argument("target grid is not a sub-lattice of the field grid");
        v[i] = values_[*j];
    }
    ScalarField out(target, std::move(v), name_);
    out.set_mask(mask_);
    return out;
}

HolderModulus::HolderModulus(double c, double a) : C(c), alpha(a) {
    if (!(c >= 0.0)) throw std::invalid_argument("modulus constant must be non-negative");
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("modulus exponent must lie in (0,1]");
}

double HolderModulus::operator()(double r) const { return C * std::pow(r, alpha); }

std::vector<Index3> ball_offsets(int dim, double h, double r, bool closed) {
    std::vector<Index3> out;
    const int k = static_cast<int>(std::floor(r / h)) + 1;
    const double r2 = (r / h) * (r / h);
    const int k1 = dim > 1 ? k : 0;
    const int k2 = dim > 2 ? k : 0;
    for (int a = -k; a <= k; ++a)
        for (int b = -k1; b <= k1; ++b)
            for (int c = -k2; c <= k2; ++c) {
                const double d2 = static_cast<double>(a * a + b * b + c * c);
                const bool in = closed ? d2 <= r2 * (1.0 + 1e-12) : d2 < r2 * (1.0 - 1e-12);
                if (in) out.push_back({a, b, c});
            }
    return out;
}

std::vector<std::size_t> ball_nodes(const Grid& g, const Point& c, double r, bool closed) {
    std::vector<std::size_t> out;
    const int n = g.dim();
    Index3 lo{0, 0, 0}, hi{0, 0, 0};
    for (int d = 0; d < n; ++d) {
        lo[d] = std::max(0, static_cast<int>(std::floor((c[d] - r - g.origin()[d]) / g.h())) - 1);
        hi[d] = std::min(g.counts()[d] - 1, static_cast<int>(std::ceil((c[d] + r - g.origin()[d]) / g.h())) + 1);
    }
    const double r2 = r * r;
    Index3 i{0, 0, 0};
    for (i[0] = lo[0]; i[0] <= hi[0]; ++i[0])
        for (i[1] = lo[1]; i[1] <= hi[1]; ++i[1])
            for (i[2] = lo[2]; i[2] <= hi[2]; ++i[2]) {
                const double d2 = dist2(g.point(i), c, n);
                const bool in = closed ? d2 <= r2 * (1.0 + 1e-12) : d2 < r2 * (1.0 - 1e-12);
                if (in) out.push_back(g.index(i));
            }
    return out;
}

namespace {

std::vector<std::size_t> nonempty_nodes(const Grid& g, const Region& region) {
    auto nodes = region.nodes(g);
    if (nodes.empty()) throw std::invalid_argument("empty region");
    return nodes;
}

}  // namespace

double oscillation(const ScalarField& u, const Region& region) {
    const auto nodes = nonempty_nodes(u.grid(), region);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto i : nodes) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
    }
    return hi - lo;
}

double lp_norm(const ScalarField& u, const Region& region, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("exponent p must be positive");
    const auto nodes = nonempty_nodes(u.grid(), region);
    if (std::isinf(p)) {
        double m = 0.0;
        for (auto i : nodes) m = std::max(m, std::abs(u[i]));
        return m;
    }
    double s = 0.0;
    for (auto i : nodes) s += std::pow(std::abs(u[i]), p);
    return std::pow(s * u.grid().cell_volume(), 1.0 / p);
}

NormReport lp_norm_report(const ScalarField& u, const Region& region, double p) {
    NormReport r;
    r.norm = std::isinf(p) ? "L^inf" : "L^" + std::to_string(p);
    r.region = region.describe();
    r.value = lp_norm(u, region, p);
    r.h = u.grid().h();
    const auto mem = region.membership(u.grid());
    std::size_t boundary = 0;
    for (std::size_t i = 0; i < mem.size(); ++i) {
        if (!mem[i]) continue;
        ++r.sample_count;
        const Index3 idx = u.grid().multi_index(i);
        for (int d = 0; d < u.grid().dim() && true; ++d) {
            bool edge = false;
            for (int s : {-1, 1}) {
                Index3 j = idx;
                j[d] += s;
                if (!u.grid().in_range(j) || !mem[u.grid().index(j)]) edge = true;
            }
            if (edge) {
                ++boundary;
                break;
            }
        }
    }
    r.measure = static_cast<double>(r.sample_count) * u.grid().cell_volume();
    r.measure_error_bound = static_cast<double>(boundary) * u.grid().cell_volume();
    return r;
}

namespace {

constexpr std::size_t kExhaustiveLimit = 20000;

double exhaustive_holder(const ScalarField& u, const std::vector<std::size_t>& nodes, double alpha) {
    const Grid& g = u.grid();
    std::vector<Point> pts(nodes.size());
    for (std::size_t a = 0; a < nodes.size(); ++a) pts[a] = g.point(nodes[a]);
    double best = 0.0;
    const double half = alpha / 2.0;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        const double ua = u[nodes[a]];
        for (std::size_t b = a + 1; b < nodes.size(); ++b) {
            const double du = std::abs(u[nodes[b]] - ua);
            if (du == 0.0) continue;
            const double d2 = dist2(pts[a], pts[b], g.dim());
            const double q = du / (alpha == 1.0 ? std::sqrt(d2) : std::pow(d2, half));
            best = std::max(best, q);
        }
    }
    return best;
}

// Offsets used above the exhaustive limit: every offset with sup-norm <= 6, then 64
// log-spaced distance buckets, each sampled along a fixed direction set.
std::vector<Index3> bucket_offsets(int dim, int max_len) {
    std::vector<Index3> out;
    const int k0 = 6;
    const int k1 = dim > 1 ? k0 : 0;
    const int k2 = dim > 2 ? k0 : 0;
    auto canonical = [](const Index3& o) {
        for (int d = 0; d < 3; ++d) {
            if (o[d] > 0) return true;
            if (o[d] < 0) return false;
        }
        return false;
    };
    for (int a = -k0; a <= k0; ++a)
        for (int b = -k1; b <= k1; ++b)
            for (int c = -k2; c <= k2; ++c) {
                Index3 o{a, b, c};
                if (canonical(o)) out.push_back(o);
            }
    std::vector<Point> dirs;
    if (dim == 1) {
        dirs.push_back({1.0, 0.0, 0.0});
    } else if (dim == 2) {
        for (int j = 0; j < 16; ++j) {
            const double t = std::numbers::pi * j / 16.0;
            dirs.push_back({std::cos(t), std::sin(t), 0.0});
        }
    } else {
        for (int a = -1; a <= 1; ++a)
            for (int b = -1; b <= 1; ++b)
                for (int c = -1; c <= 1; ++c) {
                    Index3 o{a, b, c};
                    if (!canonical(o)) continue;
                    const double l = std::sqrt(static_cast<double>(a * a + b * b + c * c));
                    dirs.push_back({a / l, b / l, c / l});
                }
    }
    if (max_len > k0) {
        const double lo = std::log(static_cast<double>(k0));
        const double hi = std::log(static_cast<double>(max_len));
        for (int j = 1; j <= 64; ++j) {
            const double len = std::exp(lo + (hi - lo) * j / 64.0);
            for (const auto& d : dirs) {
                Index3 o{0, 0, 0};
                for (int a = 0; a < dim; ++a) o[a] = static_cast<int>(std::lround(len * d[a]));
                if (canonical(o)) out.push_back(o);
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double bucketed_holder(const ScalarField& u, const std::vector<std::size_t>& nodes, double alpha) {
    const Grid& g = u.grid();
    std::vector<std::uint8_t> member(g.size(), 0);
    for (auto i : nodes) member[i] = 1;
    int max_len = 0;
    for (int d = 0; d < g.dim(); ++d) max_len = std::max(max_len, g.counts()[d]);
    const auto offs = bucket_offsets(g.dim(), max_len);
    double best = 0.0;
    for (auto i : nodes) {
        const Index3 a = g.multi_index(i);
        for (const auto& o : offs) {
            Index3 b{a[0] + o[0], a[1] + o[1], a[2] + o[2]};
            if (!g.in_range(b)) continue;
            const std::size_t j = g.index(b);
            if (!member[j]) continue;
            const double len = std::sqrt(static_cast<double>(o[0] * o[0] + o[1] * o[1] + o[2] * o[2])) * g.h();
            best = std::max(best, std::abs(u[j] - u[i]) / std::pow(len, alpha));
        }
    }
    return best;
}

}  // namespace

double holder_seminorm_nodes(const ScalarField& u, const std::vector<std::size_t>& nodes, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("Hölder exponent must lie in (0,1]");
    if (nodes.size() < 2) throw std::invalid_argument("fewer than 2 nodes");
    if (nodes.size() <= kExhaustiveLimit) return exhaustive_holder(u, nodes, alpha);
    return bucketed_holder(u, nodes, alpha);
}

double holder_seminorm(const ScalarField& u, const Region& region, double alpha) {
    return holder_seminorm_nodes(u, region.nodes(u.grid()), alpha);
}

double weighted_seminorm(const ScalarField& u, const Region& domain, double alpha, double beta) {
    const Grid& g = u.grid();
    const auto mem = domain.membership(g);
    std::vector<double> dgrid;
    bool closed_form = true;
    for (std::size_t i = 0; i < mem.size() && closed_form; ++i)
        if (mem[i] && !domain.boundary_distance(g.point(i), g.dim())) closed_form = false;
    if (!closed_form) {
        std::vector<std::uint8_t> outside(g.size());
        for (std::size_t i = 0; i < mem.size(); ++i) outside[i] = mem[i] ? 0 : 1;
        dgrid = distance_to_set(g, outside);
    }
    const Point lo = g.origin();
    const Point hi = g.upper();
    double best = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < mem.size(); ++i) {
        if (!mem[i]) continue;
        const Point x0 = g.point(i);
        double d = closed_form ? *domain.boundary_distance(x0, g.dim()) : dgrid[i];
        // balls must also stay inside the sampled lattice
        for (int a = 0; a < g.dim(); ++a) d = std::min({d, x0[a] - lo[a] + g.h(), hi[a] - x0[a] + g.h()});
        if (!std::isfinite(d) || d < 2.0 * g.h()) continue;
        any = true;
        for (double r = d; r >= 2.0 * g.h(); r *= 0.5) {
            const auto nodes = ball_nodes(g, x0, r / 2.0);
            if (nodes.size() >= 2) best = std::max(best, std::pow(r, beta) * holder_seminorm_nodes(u, nodes, alpha));
            // for beta >= 0 the largest radius dominates: both factors are monotone in r
            if (beta >= 0.0) break;
        }
    }
    if (!any) throw std::invalid_argument("no interior ball of radius >= 2h fits");
    return best;
}

ScalarField rescale(const ScalarField& u, double alpha, double r, const Point& center, std::optional<double> out_h) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("rescale radius must lie in (0,1]");
    const int n = u.grid().dim();
    const double h = out_h.value_or(u.grid().h());
    const Grid out = Grid::cube(n, h, 1.0);
    const double scale = std::pow(r, -alpha);
    std::vector<double> v(out.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        Point x = out.point(i);
        Point src = center;
        for (int d = 0; d < n; ++d) src[d] = center[d] + r * x[d];
        v[i] = scale * u.interpolate(src);
    }
    return ScalarField(out, std::move(v), u.name().empty() ? "" : u.name() + "_rescaled");
}

double rescale_tolerance(const ScalarField& u, double alpha, double r) {
    return std::pow(r, -alpha) * u.neighbour_variation();
}

ScalarField hardy_littlewood_maximal(const ScalarField& u, std::optional<double> power) {
    const Grid& g = u.grid();
    std::vector<double> a(g.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = power ? std::pow(std::abs(u[i]), *power) : std::abs(u[i]);
    std::vector<std::vector<Index3>> shells;
    std::vector<double> radii;
    for (double r = g.h(); r <= g.diameter() * (1.0 + 1e-12); r *= 2.0) {
        radii.push_back(r);
        shells.push_back(ball_offsets(g.dim(), g.h(), r));
    }
    if (radii.empty() || radii.back() < g.diameter()) shells.push_back(ball_offsets(g.dim(), g.h(), g.diameter(), true));
    std::vector<double> m(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Index3 c = g.multi_index(i);
        double best = a[i];
        for (const auto& offs : shells) {
            double s = 0.0;
            std::size_t cnt = 0;
            for (const auto& o : offs) {
                Index3 j{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
                if (!g.in_range(j)) continue;
                s += a[g.index(j)];
                ++cnt;
            }
            if (cnt) best = std::max(best, s / static_cast<double>(cnt));
        }
        m[i] = best;
    }
    return ScalarField(g, std::move(m), "maximal");
}

}  // namespace kslab
