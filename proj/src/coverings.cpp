#include "kslab/coverings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kslab/envelope.hpp"

namespace kslab {

namespace {

using i128 = __int128;

std::string to_string128(i128 v) {
    if (v == 0) return "0";
    const bool neg = v < 0;
    if (neg) v = -v;
    std::string s;
    while (v > 0) {
        s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    if (neg) s.push_back('-');
    std::reverse(s.begin(), s.end());
    return s;
}

void check_depth(int dim, int max_depth) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
    if (max_depth < 0) throw std::invalid_argument("max_depth must be non-negative");
    if (dim * (max_depth + 1) > 62 || max_depth + 1 > 20)
        throw std::invalid_argument("max_depth exceeds the exact arithmetic range");
}

std::uint64_t cells_below(int dim, int generation, int finest) {
    return std::uint64_t{1} << (dim * (finest - generation));
}

std::vector<DyadicIndex> children(int dim, const DyadicIndex& q) {
    std::vector<DyadicIndex> out;
    for (int mask = 0; mask < (1 << dim); ++mask) {
        DyadicIndex c;
        c.generation = q.generation + 1;
        for (int d = 0; d < dim; ++d) c.coords[d] = 2 * q.coords[d] + ((mask >> d) & 1);
        out.push_back(c);
    }
    return out;
}

Point box_center(const Box& b) {
    Point c{0.0, 0.0, 0.0};
    for (int d = 0; d < b.dim; ++d) c[d] = 0.5 * (b.lo[d] + b.hi[d]);
    return c;
}

// Depth-first search for a point of `box` outside E, preferring sub-boxes classified Outside.
std::optional<Point> find_outside(const Region& E, const Box& box, int dim, int depth, int& budget) {
    if (--budget < 0) return std::nullopt;
    const auto rel = E.relate(box);
    if (rel == BoxRelation::Inside) return std::nullopt;
    const Point c = box_center(box);
    if (rel == BoxRelation::Outside || !E.contains(c, dim)) return c;
    for (int mask = 0; mask < (1 << dim); ++mask) {
        Point p{0.0, 0.0, 0.0};
        for (int d = 0; d < dim; ++d) p[d] = ((mask >> d) & 1) ? box.hi[d] : box.lo[d];
        if (!E.contains(p, dim)) return p;
    }
    if (depth == 0) return std::nullopt;
    std::vector<Box> subs;
    for (int mask = 0; mask < (1 << dim); ++mask) {
        Box s = box;
        for (int d = 0; d < dim; ++d) {
            if ((mask >> d) & 1) s.lo[d] = c[d];
            else s.hi[d] = c[d];
        }
        if (E.relate(s) == BoxRelation::Outside) return box_center(s);
        subs.push_back(s);
    }
    for (const Box& s : subs)
        if (auto w = find_outside(E, s, dim, depth - 1, budget)) return w;
    return std::nullopt;
}

}  // namespace

double DyadicCube::side() const { return std::ldexp(1.0, -index.generation); }

Point DyadicCube::center(int dim) const { return box_center(dyadic_box(dim, index)); }

Box DyadicCube::box(int dim) const { return dyadic_box(dim, index); }

bool dyadic_contains(const DyadicIndex& a, const DyadicIndex& b) {
    if (a.generation > b.generation) return false;
    const int shift = b.generation - a.generation;
    for (int d = 0; d < 3; ++d)
        if ((b.coords[d] >> shift) != a.coords[d]) return false;
    return true;
}

bool dyadic_interiors_disjoint(const DyadicIndex& a, const DyadicIndex& b) {
    return !dyadic_contains(a, b) && !dyadic_contains(b, a);
}

DyadicIndex dyadic_parent(const DyadicIndex& q) {
    if (q.generation == 0) throw std::invalid_argument("the root cube has no parent");
    DyadicIndex p = q;
    p.generation -= 1;
    for (auto& c : p.coords) c >>= 1;
    return p;
}

double Decomposition::cell_measure() const { return std::ldexp(1.0, -dim * finest_generation); }

Decomposition dyadic_decomposition(int dim, const Region& E, int max_depth) {
    check_depth(dim, max_depth);
    Decomposition dec;
    dec.dim = dim;
    dec.max_depth = max_depth;
    dec.finest_generation = max_depth + 1;
    const int G = dec.finest_generation;
    dec.total_cells = cells_below(dim, 0, G);
    if (E.grid_defined()) dec.notes.push_back("grid-defined set treated as the union of its closed cells");

    std::vector<DyadicIndex> stack{DyadicIndex{}};
    while (!stack.empty()) {
        const DyadicIndex q = stack.back();
        stack.pop_back();
        const auto rel = E.relate(dyadic_box(dim, q));
        if (rel == BoxRelation::Inside) {
            DyadicCube cube{q, std::nullopt};
            if (q.generation > 0) {
                int budget = 20000;
                cube.witness = find_outside(E, dyadic_box(dim, dyadic_parent(q)), dim, 12, budget);
                if (!cube.witness) ++dec.missing_witnesses;
            }
            dec.cubes.push_back(cube);
            dec.selected_cells += cells_below(dim, q.generation, G);
        } else if (rel == BoxRelation::Outside) {
            dec.discarded_cells += cells_below(dim, q.generation, G);
        } else if (q.generation < G) {
            auto ch = children(dim, q);
            // reversed so that the lexicographically first child is processed first
            stack.insert(stack.end(), ch.rbegin(), ch.rend());
        } else {
            dec.residual_cells += 1;
        }
    }
    dec.residual_measure = static_cast<double>(dec.residual_cells) * dec.cell_measure();
    if (dec.missing_witnesses) dec.notes.push_back("progenitor witness search exhausted for some cubes");
    return dec;
}

CzSelection cz_selection(int dim, const Region& F, double eta, int max_depth) {
    check_depth(dim, max_depth);
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0,1)");
    const int G = max_depth + 1;

    // counts of finest cells (by center) of F inside each cube
    std::map<std::pair<int, std::array<std::int64_t, 3>>, std::uint64_t> memo;
    auto count = [&](auto&& self, const DyadicIndex& q) -> std::uint64_t {
        const auto key = std::make_pair(q.generation, q.coords);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::uint64_t c = 0;
        const Box b = dyadic_box(dim, q);
        const auto rel = F.relate(b);
        if (rel == BoxRelation::Inside) c = cells_below(dim, q.generation, G);
        else if (rel == BoxRelation::Outside) c = 0;
        else if (q.generation == G) c = F.contains(box_center(b), dim) ? 1 : 0;
        else
            for (const auto& ch : children(dim, q)) c += self(self, ch);
        memo.emplace(key, c);
        return c;
    };

    CzSelection out;
    Decomposition& dec = out.decomposition;
    dec.dim = dim;
    dec.max_depth = max_depth;
    dec.finest_generation = G;
    dec.total_cells = cells_below(dim, 0, G);
    const DyadicIndex root{};
    out.F_cells = count(count, root);
    const auto dense = [&](std::uint64_t c, int gen) {
        return static_cast<long double>(c) > (1.0L - eta) * static_cast<long double>(cells_below(dim, gen, G));
    };
    if (dense(out.F_cells, 0)) throw std::runtime_error("root too dense");

    std::vector<std::pair<DyadicIndex, double>> stack{{root, 0.0}};
    while (!stack.empty()) {
        const auto [q, parent_density] = stack.back();
        stack.pop_back();
        const std::uint64_t c = count(count, q);
        if (c == 0) {
            dec.discarded_cells += cells_below(dim, q.generation, G);
            continue;
        }
        const double density = static_cast<double>(c) / static_cast<double>(cells_below(dim, q.generation, G));
        if (dense(c, q.generation)) {
            dec.cubes.push_back({q, std::nullopt});
            out.densities.push_back(density);
            out.parent_densities.push_back(parent_density);
            dec.selected_cells += cells_below(dim, q.generation, G);
        } else if (q.generation < G) {
            auto ch = children(dim, q);
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back({*it, density});
        } else {
            dec.residual_cells += 1;
        }
    }
    std::uint64_t covered = 0;
    for (const auto& cube : dec.cubes) covered += count(count, cube.index);
    out.uncovered_cells = out.F_cells - covered;
    dec.residual_measure = static_cast<double>(out.uncovered_cells) * dec.cell_measure();
    return out;
}

VitaliSelection vitali_select(int dim, const std::vector<Ball>& balls) {
    for (const auto& b : balls)
        if (!(b.radius > 0.0)) throw std::invalid_argument("radii must be positive");
    std::vector<std::size_t> order(balls.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return balls[a].radius > balls[b].radius; });
    VitaliSelection sel;
    sel.covered_by.assign(balls.size(), 0);
    for (std::size_t i : order) {
        bool free = true;
        for (std::size_t j : sel.selected) {
            const double s = balls[i].radius + balls[j].radius;
            if (dist2(balls[i].center, balls[j].center, dim) < s * s) {
                free = false;
                sel.covered_by[i] = j;
                break;
            }
        }
        if (free) {
            sel.selected.push_back(i);
            sel.covered_by[i] = i;
        }
    }
    for (std::size_t a = 0; a < sel.selected.size(); ++a)
        for (std::size_t b = a + 1; b < sel.selected.size(); ++b) {
            const auto& A = balls[sel.selected[a]];
            const auto& B = balls[sel.selected[b]];
            const double s = A.radius + B.radius;
            if (dist2(A.center, B.center, dim) < s * s) sel.disjoint = false;
        }
    for (std::size_t i = 0; i < balls.size(); ++i) {
        const auto& B = balls[sel.covered_by[i]];
        const double slack = 5.0 * B.radius - balls[i].radius;
        if (slack < 0.0 || dist2(balls[i].center, B.center, dim) > slack * slack) sel.five_cover = false;
    }
    return sel;
}

InkSpotsResult ink_spots_check(const Region& E, const Region& F, double eta, const Grid& g) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0,1)");
    constexpr double rho0 = 1.0 / 6.0, rho1 = 1.0 / 7.0;
    const int n = g.dim();
    const double h = g.h();
    const Point o{0.0, 0.0, 0.0};
    const auto inE = E.membership(g);
    const auto inF = F.membership(g);
    bool meets = false;
    std::size_t f_not_in_e = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!inF[i]) continue;
        if (!inE[i]) ++f_not_in_e;
        if (norm(g.point(i), n) <= rho1 + 1e-12) meets = true;
    }
    if (!meets) throw std::invalid_argument("hypothesis: F must meet the closed ball of radius rho1");
    const auto dF = distance_to_set(g, inF);

    std::size_t samples = 0, active = 0, violations = 0;
    double min_density = 1.0;
    std::map<int, std::vector<Index3>> offsets;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x0 = g.point(i);
        const double nx = norm(x0, n);
        if (nx >= 1.0) continue;
        for (int j = 0;; ++j) {
            const double r = std::ldexp(1.0, -j);
            if (rho0 * r < h) break;
            if (nx + r > 1.0) continue;
            ++samples;
            if (dF[i] > r / 2.0) continue;
            ++active;
            auto& off = offsets[j];
            if (off.empty()) off = ball_offsets(n, h, rho0 * r);
            const Index3 k = g.multi_index(i);
            std::size_t tot = 0, hit = 0;
            for (const auto& d : off) {
                const Index3 m{k[0] + d[0], k[1] + d[1], k[2] + d[2]};
                if (!g.in_range(m)) continue;
                ++tot;
                hit += inE[g.index(m)];
            }
            const double dens = tot ? static_cast<double>(hit) / static_cast<double>(tot) : 1.0;
            min_density = std::min(min_density, dens);
            if (dens < eta) ++violations;
        }
    }

    InkSpotsResult res;
    std::size_t lhs_nodes = 0, rhs_nodes = 0, uncontained = 0;
    for (std::size_t i : Region::ball(o, rho1).nodes(g)) {
        if (inF[i]) continue;
        ++rhs_nodes;
        if (inE[i]) ++lhs_nodes;
        MidpointBall mb;
        mb.x0 = g.point(i);
        mb.r = 2.0 * dF[i];
        const double nx = norm(mb.x0, n);
        mb.x1 = o;
        if (nx > 0.0)
            for (int d = 0; d < n; ++d) mb.x1[d] = mb.x0[d] - 0.5 * mb.r * mb.x0[d] / nx;
        for (int d = 0; d < n; ++d) mb.x2[d] = 0.5 * (mb.x0[d] + mb.x1[d]);
        const double q = mb.r / 4.0;
        mb.contained = dist(mb.x2, mb.x0, n) + q <= mb.r / 2.0 + 1e-12 && norm(mb.x2, n) + q <= rho1 + 1e-12;
        if (!mb.contained) ++uncontained;
        res.midpoints.push_back(mb);
    }
    const double cell = g.cell_volume();
    CheckReport& r = res.report;
    r.name = "ink_spots";
    r.h = h;
    r.dim = n;
    r.lhs = std::pow(5.0, -n) * eta * static_cast<double>(rhs_nodes) * cell;
    r.rhs = static_cast<double>(lhs_nodes) * cell;
    r.constants.eta = eta;
    r.constants.rho = rho1;
    r.constants.extra["rho0"] = rho0;
    r.measured["sampled_balls"] = static_cast<double>(samples);
    r.measured["hypothesis_active_balls"] = static_cast<double>(active);
    r.measured["hypothesis_violations"] = static_cast<double>(violations);
    r.measured["min_sampled_density"] = min_density;
    r.measured["midpoint_balls"] = static_cast<double>(res.midpoints.size());
    r.measured["midpoint_balls_not_contained"] = static_cast<double>(uncontained);
    r.measured["F_nodes_outside_E"] = static_cast<double>(f_not_in_e);
    r.finalize();
    if (violations) {
        r.pass = true;
        r.notes.push_back("hypothesis fails on the ball sample; conclusion not asserted");
    }
    if (uncontained) r.fail("midpoint ball construction left B_{r/2}(x0) or B_{rho1}");
    return res;
}

CheckReport stacking(int dim, const std::vector<Cylinder>& cylinders, std::int64_t m_num, std::int64_t m_den) {
    if (m_den <= 0 || m_num < m_den) throw std::invalid_argument("m must be at least 1");
    int K = 0;
    for (const auto& c : cylinders) {
        const int k = c.Q.generation;
        if (k < 0 || k > 10) throw std::invalid_argument("non-dyadic cylinder");
        for (int d = 0; d < 3; ++d)
            if (c.Q.coords[d] < 0 || c.Q.coords[d] >= (d < dim ? (std::int64_t{1} << k) : 1))
                throw std::invalid_argument("non-dyadic cylinder");
        if (c.time_index < 0 || c.time_index >= (std::int64_t{1} << (2 * k)))
            throw std::invalid_argument("non-dyadic cylinder");
        K = std::max(K, k);
    }
    if (dim * K > 30) throw std::invalid_argument("cylinder generation too deep for exact arithmetic");
    // time unit: 4^-K / m_den; spatial unit: 2^-(dim K)
    using Interval = std::pair<i128, i128>;
    std::map<std::array<std::int64_t, 3>, std::vector<std::pair<Interval, Interval>>> columns;
    for (const auto& c : cylinders) {
        const int k = c.Q.generation;
        const i128 r = (i128{1} << (2 * (K - k))) * m_den;
        const i128 t = (i128{1} << (2 * K)) * m_den * -1 + (c.time_index + 1) * r;
        const Interval Z{t - r, t};
        const Interval Zm{t, t + r * m_num / m_den};
        const int shift = K - k;
        const std::int64_t span = std::int64_t{1} << shift;
        std::array<std::int64_t, 3> lo{0, 0, 0}, hi{1, 1, 1};
        for (int d = 0; d < dim; ++d) {
            lo[d] = c.Q.coords[d] << shift;
            hi[d] = lo[d] + span;
        }
        for (std::int64_t a = lo[0]; a < hi[0]; ++a)
            for (std::int64_t b = lo[1]; b < hi[1]; ++b)
                for (std::int64_t e = lo[2]; e < hi[2]; ++e) columns[{a, b, e}].push_back({Z, Zm});
    }
    auto union_length = [](std::vector<Interval> iv) {
        std::sort(iv.begin(), iv.end());
        i128 total = 0, cur_lo = 0, cur_hi = 0;
        bool open = false;
        for (const auto& [a, b] : iv) {
            if (!open || a > cur_hi) {
                if (open) total += cur_hi - cur_lo;
                cur_lo = a;
                cur_hi = b;
                open = true;
            } else {
                cur_hi = std::max(cur_hi, b);
            }
        }
        if (open) total += cur_hi - cur_lo;
        return total;
    };
    i128 stack_len = 0, full_len = 0;
    for (const auto& [col, list] : columns) {
        std::vector<Interval> zm, both;
        for (const auto& [Z, Zm] : list) {
            zm.push_back(Zm);
            both.push_back(Zm);
            both.push_back(Z);
        }
        stack_len += union_length(zm);
        full_len += union_length(both);
    }
    // measures share the unit 2^-(dim K) 4^-K / m_den
    const double unit = std::ldexp(1.0, -dim * K - 2 * K) / static_cast<double>(m_den);
    CheckReport r;
    r.name = "stacking";
    r.dim = dim;
    const double m = static_cast<double>(m_num) / static_cast<double>(m_den);
    r.lhs = m / (m + 1.0) * static_cast<double>(full_len) * unit;
    r.rhs = static_cast<double>(stack_len) * unit;
    r.constants.extra["m"] = m;
    r.measured["cylinders"] = static_cast<double>(cylinders.size());
    r.measured["columns"] = static_cast<double>(columns.size());
    r.measured["ratio"] = full_len ? static_cast<double>(stack_len) / static_cast<double>(full_len) : 1.0;
    // exact: stack (m_num + m_den) >= m_num full
    const i128 lhs_exact = full_len * m_num, rhs_exact = stack_len * (m_num + m_den);
    r.margin = r.rhs - r.lhs;
    r.pass = rhs_exact >= lhs_exact;
    r.measured["exact_equality"] = rhs_exact == lhs_exact ? 1.0 : 0.0;
    r.notes.push_back("exact: |U Z^m| = " + to_string128(stack_len) + ", |U (Z^m u Z)| = " + to_string128(full_len) +
                      " in units of 2^-" + std::to_string(dim * K + 2 * K) + "/" + std::to_string(m_den));
    return r;
}

SunRisingResult sun_rising(const ScalarField& u, double m) {
    const Grid& g = u.grid();
    if (g.dim() != 1) throw std::invalid_argument("sun rising needs a 1D field");
    if (!(m > 0.0)) throw std::invalid_argument("m must be positive");
    const std::size_t N = g.size();
    const double h = g.h();
    SunRisingResult res;
    res.shaded.assign(N, 0);
    std::vector<double> v(N);
    for (std::size_t i = 0; i < N; ++i) v[i] = u[i] - m * g.point(i)[0];
    double right_max = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (std::size_t k = N; k-- > 0;) {
        if (v[k] < right_max) {
            res.shaded[k] = 1;
            ++count;
        }
        right_max = std::max(right_max, v[k]);
    }
    res.shaded_measure = static_cast<double>(count) * h;
    double lo = u[0], hi = u[0], pos_var = 0.0;
    std::size_t slope_violations = 0;
    for (std::size_t i = 0; i < N; ++i) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
        if (i + 1 < N) {
            pos_var += std::max(0.0, u[i + 1] - u[i]);
            if ((u[i + 1] - u[i]) / h > m && !res.shaded[i]) ++slope_violations;
        }
    }
    // sunny nodes must dominate their whole right tail
    std::size_t closure_violations = 0;
    right_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = N; k-- > 0;) {
        if (!res.shaded[k] && v[k] < right_max) ++closure_violations;
        right_max = std::max(right_max, v[k]);
    }
    CheckReport& r = res.report;
    r.name = "sun_rising";
    r.h = h;
    r.dim = 1;
    r.lhs = res.shaded_measure;
    r.rhs = (hi - lo) / m;
    r.tolerance = 2.0 * h;
    r.constants.extra["m"] = m;
    r.measured["oscillation"] = hi - lo;
    r.measured["positive_variation_bound"] = pos_var / m;
    r.measured["slope_inclusion_violations"] = static_cast<double>(slope_violations);
    r.measured["closure_violations"] = static_cast<double>(closure_violations);
    r.finalize();
    if (slope_violations) r.fail("forward slope above m outside the shade");
    if (closure_violations) r.fail("sunny node dominated from the right");
    return res;
}

}  // namespace kslab
