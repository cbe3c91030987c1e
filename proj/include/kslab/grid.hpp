#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kslab {

using Point = std::array<double, 3>;
using Index3 = std::array<int, 3>;

double norm(const Point& p, int dim);
double dist(const Point& a, const Point& b, int dim);
double dist2(const Point& a, const Point& b, int dim);

// Volume of the unit ball in dimension n.
double unit_ball_volume(int n);
double ball_volume(int n, double r);

// Uniform lattice over a box. Axes beyond `dim` have count 1.
// Node storage is row-major: the last active axis varies fastest.
class Grid {
public:
    Grid(int dim, double h, Point origin, Index3 counts);

    // Lattice over [c - L, c + L]^dim with spacing h; L/h is rounded to the nearest integer.
    static Grid cube(int dim, double h, double half_width, Point center = {0.0, 0.0, 0.0});

    int dim() const { return dim_; }
    double h() const { return h_; }
    const Point& origin() const { return origin_; }
    const Index3& counts() const { return counts_; }
    std::size_t size() const { return size_; }
    double cell_volume() const;
    Point upper() const;
    double diameter() const;

    std::size_t index(const Index3& i) const {
        return (static_cast<std::size_t>(i[0]) * counts_[1] + i[1]) * counts_[2] + i[2];
    }
    Index3 multi_index(std::size_t idx) const;
    Point point(std::size_t idx) const;
    Point point(const Index3& i) const;
    bool in_range(const Index3& i) const;

    // Node whose coordinates match p to within 1e-9 h, if any.
    std::optional<std::size_t> node_at(const Point& p) const;
    // Nearest node (clamped into range) and whether p lies within the grid box.
    std::size_t nearest_node(const Point& p) const;
    bool contains_point(const Point& p, double slack = 0.0) const;
    // True when node idx has every axis-neighbour inside the grid.
    bool is_interior(std::size_t idx, int margin = 1) const;

    // Grid obtained by removing `margin` nodes from each side of every active axis.
    Grid shrink(int margin) const;

    bool same_as(const Grid& o) const;

private:
    int dim_;
    double h_;
    Point origin_;
    Index3 counts_;
    std::size_t size_;
};

struct ExcludedBall {
    Point center{0.0, 0.0, 0.0};
    double radius = 0.0;
};

class ScalarField {
public:
    ScalarField(Grid grid, std::vector<double> values, std::string name = "");
    static ScalarField from_function(const Grid& grid, const std::function<double(const Point&)>& fn,
                                     std::string name = "");
    static ScalarField constant(const Grid& grid, double c, std::string name = "");

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

    // Singular families keep finite placeholder values inside the excluded ball.
    const std::optional<ExcludedBall>& mask() const { return mask_; }
    void set_mask(std::optional<ExcludedBall> m) { mask_ = m; }
    bool masked(std::size_t idx) const;

    // Multilinear interpolation; throws if p lies outside the grid box.
    double interpolate(const Point& p) const;
    // Largest difference between axis neighbours; bounds the multilinear interpolation error.
    double neighbour_variation() const;

    // Sample this field onto `target`, whose nodes must coincide with nodes of this grid.
    ScalarField restrict_to(const Grid& target) const;

private:
    Grid grid_;
    std::vector<double> values_;
    std::string name_;
    std::optional<ExcludedBall> mask_;
};

struct Box {
    int dim = 1;
    Point lo{0.0, 0.0, 0.0};
    Point hi{0.0, 0.0, 0.0};
};

enum class BoxRelation { Inside, Outside, Partial };

// A dyadic cube of Q1 = [-1/2, 1/2]^n: generation k, integer coordinates in [0, 2^k).
struct DyadicIndex {
    int generation = 0;
    std::array<std::int64_t, 3> coords{0, 0, 0};
};
Box dyadic_box(int dim, const DyadicIndex& q);

class Region {
public:
    struct Node;

    static Region all();
    static Region ball(const Point& center, double r, bool closed = false);
    static Region cube(const Point& center, double side, bool closed = false);
    static Region annulus(const Point& center, double r_in, double r_out);
    // {x : normal . x < offset}
    static Region halfspace(const Point& normal, double offset);
    static Region point(const Point& p);
    // {u <= c}
    static Region sublevel(std::shared_ptr<const ScalarField> field, double c);
    // {u >= c}, or {u > c} when strict
    static Region superlevel(std::shared_ptr<const ScalarField> field, double c, bool strict = false);
    static Region node_set(const Grid& grid, std::vector<std::uint8_t> members);
    // Union of closed dyadic cubes of Q1 (interior-overlap semantics for box queries).
    static Region dyadic_union(int dim, std::vector<DyadicIndex> cubes);

    Region intersect(const Region& other) const;
    Region minus(const Region& other) const;
    Region unite(const Region& other) const;

    bool contains(const Point& p, int dim) const;
    std::vector<std::uint8_t> membership(const Grid& grid) const;
    std::vector<std::size_t> nodes(const Grid& grid) const;
    std::size_t count(const Grid& grid) const;
    double measure(const Grid& grid) const;

    // Exact for Inside/Outside answers; Partial may be conservative for unions.
    BoxRelation relate(const Box& box) const;

    // Distance from p to the boundary when the descriptor has a closed form.
    std::optional<double> boundary_distance(const Point& p, int dim) const;

    std::string describe() const;
    bool grid_defined() const;

private:
    explicit Region(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

// Region covering the unmasked nodes of a field.
Region unmasked(const ScalarField& field);

struct HolderModulus {
    double C = 0.0;
    double alpha = 1.0;
    HolderModulus(double c, double a);
    double operator()(double r) const;
};

struct NormReport {
    std::string norm;
    std::string region;
    double value = 0.0;
    double h = 0.0;
    std::size_t sample_count = 0;
    double measure = 0.0;
    // Node-counting error of the region measure: boundary layer of width h.
    double measure_error_bound = 0.0;
};

double oscillation(const ScalarField& u, const Region& region);
double lp_norm(const ScalarField& u, const Region& region, double p);
NormReport lp_norm_report(const ScalarField& u, const Region& region, double p);
double holder_seminorm(const ScalarField& u, const Region& region, double alpha);
double holder_seminorm_nodes(const ScalarField& u, const std::vector<std::size_t>& nodes, double alpha);
double weighted_seminorm(const ScalarField& u, const Region& domain, double alpha, double beta);

// u_r(x) = r^{-alpha} u(center + r x) on the lattice [-1,1]^n of spacing out_h (defaults to u's spacing).
ScalarField rescale(const ScalarField& u, double alpha, double r, const Point& center = {0.0, 0.0, 0.0},
                    std::optional<double> out_h = std::nullopt);
// Interpolation tolerance attached to rescale: r^{-alpha} times the neighbour variation of u.
double rescale_tolerance(const ScalarField& u, double alpha, double r);

ScalarField hardy_littlewood_maximal(const ScalarField& u, std::optional<double> power = std::nullopt);

// Lattice offsets k with |k| h < r (open) or <= r (closed).
std::vector<Index3> ball_offsets(int dim, double h, double r, bool closed = false);
// Nodes of the ball B_r(c) intersected with the grid.
std::vector<std::size_t> ball_nodes(const Grid& g, const Point& c, double r, bool closed = false);

}  // namespace kslab
