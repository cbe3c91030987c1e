#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <variant>

#include "kslab/grid.hpp"

namespace kslab {

namespace {

struct AllR {};
struct BallR {
    Point c;
    double r;
    bool closed;
};
struct CubeR {
    Point c;
    double side;
    bool closed;
};
struct AnnulusR {
    Point c;
    double r_in, r_out;
};
struct HalfR {
    Point normal;
    double offset;
};
struct PointR {
    Point p;
};
struct LevelR {
    std::shared_ptr<const ScalarField> field;
    double c;
    bool upper;
    bool strict;
};
struct NodeSetR {
    std::shared_ptr<const Grid> grid;
    std::vector<std::uint8_t> members;
};
struct DyadicR {
    int dim;
    int finest;
    std::unordered_set<std::uint64_t> cells;
};
enum class Op { Intersect, Minus, Unite };

bool within(double d2, double r, bool closed) {
    const double r2 = r * r;
    return closed ? d2 <= r2 * (1.0 + 1e-12) : d2 < r2 * (1.0 - 1e-12);
}

BoxRelation complement(BoxRelation r) {
    if (r == BoxRelation::Inside) return BoxRelation::Outside;
    if (r == BoxRelation::Outside) return BoxRelation::Inside;
    return BoxRelation::Partial;
}

std::uint64_t cell_key(const std::array<std::int64_t, 3>& c) {
    return (static_cast<std::uint64_t>(c[0]) << 42) | (static_cast<std::uint64_t>(c[1]) << 21) |
           static_cast<std::uint64_t>(c[2]);
}

double fmt_clean(double x) { return std::abs(x) < 1e-15 ? 0.0 : x; }

std::string pt(const Point& p, int dim) {
    std::ostringstream os;
    os << "(";
    for (int d = 0; d < dim; ++d) os << (d ? "," : "") << fmt_clean(p[d]);
    os << ")";
    return os.str();
}

}  // namespace

struct Region::Node {
    std::variant<AllR, BallR, CubeR, AnnulusR, HalfR, PointR, LevelR, NodeSetR, DyadicR> leaf;
    bool composite = false;
    Op op = Op::Intersect;
    std::shared_ptr<const Node> a, b;
};

Box dyadic_box(int dim, const DyadicIndex& q) {
    Box b;
    b.dim = dim;
    const double side = std::ldexp(1.0, -q.generation);
    for (int d = 0; d < dim; ++d) {
        b.lo[d] = -0.5 + static_cast<double>(q.coords[d]) * side;
        b.hi[d] = b.lo[d] + side;
    }
    return b;
}

namespace {

std::shared_ptr<Region::Node> leaf_node() { return std::make_shared<Region::Node>(); }

bool contains_node(const Region::Node& n, const Point& p, int dim);

bool leaf_contains(const Region::Node& n, const Point& p, int dim) {
    return std::visit(
        [&](const auto& L) -> bool {
            using T = std::decay_t<decltype(L)>;
            if constexpr (std::is_same_v<T, AllR>) {
                return true;
            } else if constexpr (std::is_same_v<T, BallR>) {
                return within(dist2(p, L.c, dim), L.r, L.closed);
            } else if constexpr (std::is_same_v<T, CubeR>) {
                const double half = L.side / 2.0;
                for (int d = 0; d < dim; ++d) {
                    const double t = std::abs(p[d] - L.c[d]);
                    if (L.closed ? t > half * (1.0 + 1e-12) : t >= half * (1.0 - 1e-12)) return false;
                }
                return true;
            } else if constexpr (std::is_same_v<T, AnnulusR>) {
                const double d2 = dist2(p, L.c, dim);
                return !within(d2, L.r_in, false) && within(d2, L.r_out, false);
            } else if constexpr (std::is_same_v<T, HalfR>) {
                double s = 0.0;
                for (int d = 0; d < dim; ++d) s += L.normal[d] * p[d];
                return s < L.offset;
            } else if constexpr (std::is_same_v<T, PointR>) {
                for (int d = 0; d < dim; ++d)
                    if (std::abs(p[d] - L.p[d]) > 1e-12) return false;
                return true;
            } else if constexpr (std::is_same_v<T, LevelR>) {
                const Grid& g = L.field->grid();
                if (!g.contains_point(p, 0.5 * g.h())) return false;
                const double v = (*L.field)[g.nearest_node(p)];
                if (L.upper) return L.strict ? v > L.c : v >= L.c;
                return v <= L.c;
            } else if constexpr (std::is_same_v<T, NodeSetR>) {
                if (!L.grid->contains_point(p, 0.5 * L.grid->h())) return false;
                return L.members[L.grid->nearest_node(p)] != 0;
            } else {
                std::array<std::int64_t, 3> c{0, 0, 0};
                const double scale = std::ldexp(1.0, L.finest);
                for (int d = 0; d < L.dim; ++d) {
                    const double t = (p[d] + 0.5) * scale;
                    if (t < 0.0 || t > scale) return false;
                    // closed cells: a point on a face belongs to either neighbour
                    const auto f = static_cast<std::int64_t>(std::floor(t));
                    c[d] = std::min<std::int64_t>(f, static_cast<std::int64_t>(scale) - 1);
                }
                if (L.cells.count(cell_key(c))) return true;
                for (int d = 0; d < L.dim; ++d) {
                    const double t = (p[d] + 0.5) * scale;
                    if (t == std::floor(t) && c[d] > 0) {
                        auto c2 = c;
                        c2[d] = static_cast<std::int64_t>(t) - 1;
                        if (L.cells.count(cell_key(c2))) return true;
                    }
                }
                return false;
            }
        },
        n.leaf);
}

bool contains_node(const Region::Node& n, const Point& p, int dim) {
    if (!n.composite) return leaf_contains(n, p, dim);
    const bool ina = contains_node(*n.a, p, dim);
    switch (n.op) {
        case Op::Intersect: return ina && contains_node(*n.b, p, dim);
        case Op::Minus: return ina && !contains_node(*n.b, p, dim);
        case Op::Unite: return ina || contains_node(*n.b, p, dim);
    }
    return false;
}

BoxRelation cell_relation(const Grid& g, const std::vector<std::uint8_t>& members, const Box& box,
                          const std::function<bool(std::size_t)>& member) {
    (void)members;
    const int n = box.dim;
    Index3 lo{0, 0, 0}, hi{0, 0, 0};
    bool covers = true;
    for (int d = 0; d < n; ++d) {
        const double h = g.h();
        // node cells [x - h/2, x + h/2] whose interior meets the box interior
        const double a = (box.lo[d] - g.origin()[d]) / h - 0.5;
        const double b = (box.hi[d] - g.origin()[d]) / h + 0.5;
        int i0 = static_cast<int>(std::floor(a)) + 1;
        int i1 = static_cast<int>(std::ceil(b)) - 1;
        if (a < -1.0 || b > g.counts()[d]) covers = false;
        i0 = std::max(i0, 0);
        i1 = std::min(i1, g.counts()[d] - 1);
        if (i0 > i1) return BoxRelation::Outside;
        lo[d] = i0;
        hi[d] = i1;
    }
    bool any_in = false, any_out = !covers;
    Index3 i{0, 0, 0};
    for (i[0] = lo[0]; i[0] <= hi[0]; ++i[0])
        for (i[1] = lo[1]; i[1] <= hi[1]; ++i[1])
            for (i[2] = lo[2]; i[2] <= hi[2]; ++i[2]) {
                if (member(g.index(i)))
                    any_in = true;
                else
                    any_out = true;
                if (any_in && any_out) return BoxRelation::Partial;
            }
    if (!any_in) return BoxRelation::Outside;
    return any_out ? BoxRelation::Partial : BoxRelation::Inside;
}

BoxRelation leaf_relate(const Region::Node& n, const Box& box) {
    const int dim = box.dim;
    return std::visit(
        [&](const auto& L) -> BoxRelation {
            using T = std::decay_t<decltype(L)>;
            if constexpr (std::is_same_v<T, AllR>) {
                return BoxRelation::Inside;
            } else if constexpr (std::is_same_v<T, BallR> || std::is_same_v<T, AnnulusR>) {
                double dmin2 = 0.0, dmax2 = 0.0;
                for (int d = 0; d < dim; ++d) {
                    const double a = box.lo[d] - L.c[d];
                    const double b = box.hi[d] - L.c[d];
                    const double near = (a > 0.0) ? a : (b < 0.0 ? -b : 0.0);
                    const double far = std::max(std::abs(a), std::abs(b));
                    dmin2 += near * near;
                    dmax2 += far * far;
                }
                if constexpr (std::is_same_v<T, BallR>) {
                    if (L.closed) {
                        if (dmax2 <= L.r * L.r) return BoxRelation::Inside;
                        if (dmin2 > L.r * L.r) return BoxRelation::Outside;
                    } else {
                        if (dmax2 < L.r * L.r) return BoxRelation::Inside;
                        if (dmin2 >= L.r * L.r) return BoxRelation::Outside;
                    }
                    return BoxRelation::Partial;
                } else {
                    const double ri2 = L.r_in * L.r_in, ro2 = L.r_out * L.r_out;
                    if (dmin2 >= ri2 && dmax2 < ro2) return BoxRelation::Inside;
                    if (dmax2 < ri2 || dmin2 >= ro2) return BoxRelation::Outside;
                    return BoxRelation::Partial;
                }
            } else if constexpr (std::is_same_v<T, CubeR>) {
                const double half = L.side / 2.0;
                bool inside = true, outside = false;
                for (int d = 0; d < dim; ++d) {
                    const double a = L.c[d] - half, b = L.c[d] + half;
                    if (L.closed) {
                        if (box.lo[d] < a || box.hi[d] > b) inside = false;
                        if (box.hi[d] < a || box.lo[d] > b) outside = true;
                    } else {
                        if (box.lo[d] <= a || box.hi[d] >= b) inside = false;
                        if (box.hi[d] <= a || box.lo[d] >= b) outside = true;
                    }
                }
                if (outside) return BoxRelation::Outside;
                return inside ? BoxRelation::Inside : BoxRelation::Partial;
            } else if constexpr (std::is_same_v<T, HalfR>) {
                double mx = 0.0, mn = 0.0;
                for (int d = 0; d < dim; ++d) {
                    const double a = L.normal[d] * box.lo[d], b = L.normal[d] * box.hi[d];
                    mx += std::max(a, b);
                    mn += std::min(a, b);
                }
                if (mx < L.offset) return BoxRelation::Inside;
                if (mn >= L.offset) return BoxRelation::Outside;
                return BoxRelation::Partial;
            } else if constexpr (std::is_same_v<T, PointR>) {
                for (int d = 0; d < dim; ++d)
                    if (L.p[d] < box.lo[d] || L.p[d] > box.hi[d]) return BoxRelation::Outside;
                return BoxRelation::Partial;
            } else if constexpr (std::is_same_v<T, LevelR>) {
                const auto& f = *L.field;
                return cell_relation(f.grid(), {}, box, [&](std::size_t i) {
                    if (L.upper) return L.strict ? f[i] > L.c : f[i] >= L.c;
                    return f[i] <= L.c;
                });
            } else if constexpr (std::is_same_v<T, NodeSetR>) {
                return cell_relation(*L.grid, {}, box, [&](std::size_t i) { return L.members[i] != 0; });
            } else {
                const double scale = std::ldexp(1.0, L.finest);
                std::array<std::int64_t, 3> lo{0, 0, 0}, hi{0, 0, 0};
                for (int d = 0; d < L.dim; ++d) {
                    const double a = (box.lo[d] + 0.5) * scale;
                    const double b = (box.hi[d] + 0.5) * scale;
                    lo[d] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(a)));
                    hi[d] = std::min<std::int64_t>(static_cast<std::int64_t>(scale) - 1,
                                                   static_cast<std::int64_t>(std::ceil(b)) - 1);
                    if (lo[d] > hi[d]) return BoxRelation::Outside;
                }
                bool any_in = false, any_out = false;
                std::array<std::int64_t, 3> c{0, 0, 0};
                for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
                    for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
                        for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2]) {
                            if (L.cells.count(cell_key(c)))
                                any_in = true;
                            else
                                any_out = true;
                            if (any_in && any_out) return BoxRelation::Partial;
                        }
                if (!any_in) return BoxRelation::Outside;
                return any_out ? BoxRelation::Partial : BoxRelation::Inside;
            }
        },
        n.leaf);
}

BoxRelation relate_node(const Region::Node& n, const Box& box) {
    if (!n.composite) return leaf_relate(n, box);
    const BoxRelation ra = relate_node(*n.a, box);
    const BoxRelation rb = relate_node(*n.b, box);
    auto meet = [](BoxRelation x, BoxRelation y) {
        if (x == BoxRelation::Outside || y == BoxRelation::Outside) return BoxRelation::Outside;
        if (x == BoxRelation::Inside && y == BoxRelation::Inside) return BoxRelation::Inside;
        return BoxRelation::Partial;
    };
    switch (n.op) {
        case Op::Intersect: return meet(ra, rb);
        case Op::Minus: return meet(ra, complement(rb));
        case Op::Unite:
            if (ra == BoxRelation::Inside || rb == BoxRelation::Inside) return BoxRelation::Inside;
            if (ra == BoxRelation::Outside && rb == BoxRelation::Outside) return BoxRelation::Outside;
            return BoxRelation::Partial;
    }
    return BoxRelation::Partial;
}

std::optional<double> leaf_distance(const Region::Node& n, const Point& p, int dim) {
    return std::visit(
        [&](const auto& L) -> std::optional<double> {
            using T = std::decay_t<decltype(L)>;
            if constexpr (std::is_same_v<T, BallR>) {
                return std::abs(L.r - dist(p, L.c, dim));
            } else if constexpr (std::is_same_v<T, CubeR>) {
                double m = std::numeric_limits<double>::infinity();
                for (int d = 0; d < dim; ++d) m = std::min(m, std::abs(L.side / 2.0 - std::abs(p[d] - L.c[d])));
                return m;
            } else if constexpr (std::is_same_v<T, AnnulusR>) {
                const double r = dist(p, L.c, dim);
                return std::min(std::abs(r - L.r_in), std::abs(L.r_out - r));
            } else if constexpr (std::is_same_v<T, HalfR>) {
                double s = 0.0, l = 0.0;
                for (int d = 0; d < dim; ++d) {
                    s += L.normal[d] * p[d];
                    l += L.normal[d] * L.normal[d];
                }
                return std::abs(L.offset - s) / std::sqrt(l);
            } else {
                return std::nullopt;
            }
        },
        n.leaf);
}

std::optional<double> distance_node(const Region::Node& n, const Point& p, int dim) {
    if (!n.composite) return leaf_distance(n, p, dim);
    if (n.op != Op::Intersect) return std::nullopt;
    auto a = distance_node(*n.a, p, dim);
    auto b = distance_node(*n.b, p, dim);
    if (!a || !b) return std::nullopt;
    return std::min(*a, *b);
}

std::string describe_node(const Region::Node& n, int dim) {
    if (n.composite) {
        const char* op = n.op == Op::Intersect ? " ∩ " : (n.op == Op::Minus ? " ∖ " : " ∪ ");
        return "(" + describe_node(*n.a, dim) + op + describe_node(*n.b, dim) + ")";
    }
    std::ostringstream os;
    std::visit(
        [&](const auto& L) {
            using T = std::decay_t<decltype(L)>;
            if constexpr (std::is_same_v<T, AllR>) {
                os << "all";
            } else if constexpr (std::is_same_v<T, BallR>) {
                os << (L.closed ? "closed_ball" : "ball") << pt(L.c, dim) << "r=" << L.r;
            } else if constexpr (std::is_same_v<T, CubeR>) {
                os << (L.closed ? "closed_cube" : "cube") << pt(L.c, dim) << "side=" << L.side;
            } else if constexpr (std::is_same_v<T, AnnulusR>) {
                os << "annulus" << pt(L.c, dim) << "r_in=" << L.r_in << ",r_out=" << L.r_out;
            } else if constexpr (std::is_same_v<T, HalfR>) {
                os << "halfspace" << pt(L.normal, dim) << "<" << L.offset;
            } else if constexpr (std::is_same_v<T, PointR>) {
                os << "point" << pt(L.p, dim);
            } else if constexpr (std::is_same_v<T, LevelR>) {
                os << (L.upper ? (L.strict ? "{u>" : "{u>=") : "{u<=") << L.c << "}";
            } else if constexpr (std::is_same_v<T, NodeSetR>) {
                os << "node_set";
            } else {
                os << "dyadic_union[" << L.cells.size() << " cells at generation " << L.finest << "]";
            }
        },
        n.leaf);
    return os.str();
}

bool grid_defined_node(const Region::Node& n) {
    if (n.composite) return grid_defined_node(*n.a) || grid_defined_node(*n.b);
    return std::holds_alternative<LevelR>(n.leaf) || std::holds_alternative<NodeSetR>(n.leaf);
}

}  // namespace

Region Region::all() {
    auto n = leaf_node();
    n->leaf = AllR{};
    return Region(n);
}

Region Region::ball(const Point& center, double r, bool closed) {
    if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
    auto n = leaf_node();
    n->leaf = BallR{center, r, closed};
    return Region(n);
}

Region Region::cube(const Point& center, double side, bool closed) {
    if (!(side > 0.0)) throw std::invalid_argument("cube side must be positive");
    auto n = leaf_node();
    n->leaf = CubeR{center, side, closed};
    return Region(n);
}

Region Region::annulus(const Point& center, double r_in, double r_out) {
    if (!(r_in >= 0.0 && r_out > r_in)) throw std::invalid_argument("annulus radii must satisfy 0 <= r_in < r_out");
    auto n = leaf_node();
    n->leaf = AnnulusR{center, r_in, r_out};
    return Region(n);
}

Region Region::halfspace(const Point& normal, double offset) {
    auto n = leaf_node();
    n->leaf = HalfR{normal, offset};
    return Region(n);
}

Region Region::point(const Point& p) {
    auto n = leaf_node();
    n->leaf = PointR{p};
    return Region(n);
}

Region Region::sublevel(std::shared_ptr<const ScalarField> field, double c) {
    auto n = leaf_node();
    n->leaf = LevelR{std::move(field), c, false, false};
    return Region(n);
}

Region Region::superlevel(std::shared_ptr<const ScalarField> field, double c, bool strict) {
    auto n = leaf_node();
    n->leaf = LevelR{std::move(field), c, true, strict};
    return Region(n);
}

Region Region::node_set(const Grid& grid, std::vector<std::uint8_t> members) {
    if (members.size() != grid.size()) throw std::invalid_argument("node set size does not match grid");
    auto n = leaf_node();
    n->leaf = NodeSetR{std::make_shared<const Grid>(grid), std::move(members)};
    return Region(n);
}

Region Region::dyadic_union(int dim, std::vector<DyadicIndex> cubes) {
    int finest = 0;
    for (const auto& q : cubes) finest = std::max(finest, q.generation);
    if (finest > 20) throw std::invalid_argument("dyadic union generation too deep");
    DyadicR d{dim, finest, {}};
    for (const auto& q : cubes) {
        const std::int64_t span = std::int64_t{1} << (finest - q.generation);
        std::array<std::int64_t, 3> lo{0, 0, 0}, hi{0, 0, 0};
        for (int a = 0; a < dim; ++a) {
            lo[a] = q.coords[a] * span;
            hi[a] = lo[a] + span - 1;
        }
        std::array<std::int64_t, 3> c{0, 0, 0};
        for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0])
            for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1])
                for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2]) d.cells.insert(cell_key(c));
    }
    auto n = leaf_node();
    n->leaf = std::move(d);
    return Region(n);
}

namespace {
std::shared_ptr<const Region::Node> combine(Op op, std::shared_ptr<const Region::Node> a,
                                            std::shared_ptr<const Region::Node> b) {
    auto n = std::make_shared<Region::Node>();
    n->composite = true;
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}
}  // namespace

Region Region::intersect(const Region& other) const { return Region(combine(Op::Intersect, node_, other.node_)); }
Region Region::minus(const Region& other) const { return Region(combine(Op::Minus, node_, other.node_)); }
Region Region::unite(const Region& other) const { return Region(combine(Op::Unite, node_, other.node_)); }

bool Region::contains(const Point& p, int dim) const { return contains_node(*node_, p, dim); }

std::vector<std::uint8_t> Region::membership(const Grid& grid) const {
    std::vector<std::uint8_t> m(grid.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = contains(grid.point(i), grid.dim()) ? 1 : 0;
    return m;
}

std::vector<std::size_t> Region::nodes(const Grid& grid) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (contains(grid.point(i), grid.dim())) out.push_back(i);
    return out;
}

std::size_t Region::count(const Grid& grid) const { return nodes(grid).size(); }

double Region::measure(const Grid& grid) const { return static_cast<double>(count(grid)) * grid.cell_volume(); }

BoxRelation Region::relate(const Box& box) const { return relate_node(*node_, box); }

std::optional<double> Region::boundary_distance(const Point& p, int dim) const {
    return distance_node(*node_, p, dim);
}

std::string Region::describe() const { return describe_node(*node_, 3); }

bool Region::grid_defined() const { return grid_defined_node(*node_); }

Region unmasked(const ScalarField& field) {
    if (!field.mask()) return Region::all();
    return Region::all().minus(Region::ball(field.mask()->center, field.mask()->radius));
}

}  // namespace kslab
