#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kslab/grid.hpp"
#include "kslab/report.hpp"

namespace kslab {

struct DyadicCube {
    DyadicIndex index;
    // A point of the parent cube outside the set, when one was found.
    std::optional<Point> witness;

    double side() const;
    Point center(int dim) const;
    Box box(int dim) const;
};

// True when cube a contains cube b (a is b or an ancestor of b).
bool dyadic_contains(const DyadicIndex& a, const DyadicIndex& b);
bool dyadic_interiors_disjoint(const DyadicIndex& a, const DyadicIndex& b);
DyadicIndex dyadic_parent(const DyadicIndex& q);

struct Decomposition {
    int dim = 1;
    int max_depth = 0;
    // Partial cubes are refined down to this generation (max_depth + 1).
    int finest_generation = 1;
    std::vector<DyadicCube> cubes;
    // Exact bookkeeping in cells of the finest generation; the four counts
    // selected + residual + discarded = total hold without rounding.
    std::uint64_t selected_cells = 0;
    std::uint64_t residual_cells = 0;
    std::uint64_t discarded_cells = 0;
    std::uint64_t total_cells = 0;
    double residual_measure = 0.0;
    std::size_t missing_witnesses = 0;
    std::vector<std::string> notes;

    double cell_measure() const;
};

// Maximal dyadic cubes of Q1 = [-1/2,1/2]^n contained in E.
Decomposition dyadic_decomposition(int dim, const Region& E, int max_depth);

struct CzSelection {
    Decomposition decomposition;
    std::vector<double> densities;         // density of F in each selected cube
    std::vector<double> parent_densities;  // density of F in each selected cube's parent (root: itself)
    std::uint64_t F_cells = 0;
    std::uint64_t uncovered_cells = 0;  // cells of F outside every selected cube
};

CzSelection cz_selection(int dim, const Region& F, double eta, int max_depth);

struct Ball {
    Point center{0.0, 0.0, 0.0};
    double radius = 0.0;
};

struct VitaliSelection {
    std::vector<std::size_t> selected;
    // For every input ball, a selected ball whose 5x dilation contains it.
    std::vector<std::size_t> covered_by;
    bool disjoint = true;
    bool five_cover = true;
};

VitaliSelection vitali_select(int dim, const std::vector<Ball>& balls);

struct MidpointBall {
    Point x0, x1, x2;
    double r = 0.0;  // r(x0) = 2 dist(x0, F)
    bool contained = false;  // B_{r/4}(x2) inside B_{r/2}(x0) and B_{rho1}
};

struct InkSpotsResult {
    CheckReport report;
    std::vector<MidpointBall> midpoints;
};

// Sample schedule: every grid node x0 of B_1 with dyadic radii r = 2^-j, B_r(x0) inside B_1
// and rho0 r >= h.
InkSpotsResult ink_spots_check(const Region& E, const Region& F, double eta, const Grid& grid);

struct Cylinder {
    DyadicIndex Q;
    // time interval [-1 + j 4^-k, -1 + (j+1) 4^-k] for generation k
    std::int64_t time_index = 0;
};

// |U Z^m| >= m/(m+1) |U (Z^m u Z)| with m = m_num/m_den, in exact integer arithmetic.
CheckReport stacking(int dim, const std::vector<Cylinder>& cylinders, std::int64_t m_num, std::int64_t m_den = 1);

struct SunRisingResult {
    std::vector<std::uint8_t> shaded;
    double shaded_measure = 0.0;
    CheckReport report;
};

SunRisingResult sun_rising(const ScalarField& u, double m);

}  // namespace kslab
