#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kslab/grid.hpp"
#include "kslab/operators.hpp"
#include "kslab/report.hpp"

namespace kslab {

// Dirichlet data: one value per grid node, read only at nodes outside the solve domain.
struct BoundaryData {
    std::vector<double> values;

    static BoundaryData from_function(const Grid& g, const std::function<double(const Point&)>& fn);
    static BoundaryData from_field(const ScalarField& u);
    static BoundaryData constant(const Grid& g, double c);
    // Throws on a size mismatch or non-finite values at the nodes that are read.
    void validate(const Grid& g, const std::vector<std::uint8_t>& unknown) const;
};

enum class SolverMode { Jacobi, GaussSeidelRedBlack, PseudoTime };
std::string to_string(SolverMode m);
SolverMode solver_mode_from_string(const std::string& s);

struct SolverConfig {
    double tolerance = 1e-8;  // max-norm of the equation residual
    long max_iterations = 200000;
    // Pseudo-time step; 0 selects h^2/(4 n Lambda).
    double tau = 0.0;
    SolverMode mode = SolverMode::GaussSeidelRedBlack;
    // Over-relaxation for the red-black sweeps; 0 selects 2/(1 + sin(pi h / width)).
    double omega = 0.0;

    void validate() const;
};

struct SolveResult {
    ScalarField field;
    double residual = 0.0;
    long iterations = 0;
    // {solver, mode, tolerance, residual, iterations, ...} as stored in fld-json.
    nlohmann::ordered_json provenance;
};

// Nodes of `domain` whose axis neighbours all lie in the grid; the rest carry g.
std::vector<std::uint8_t> solve_unknowns(const Grid& g, const Region& domain);

SolveResult solve_poisson(const Grid& grid, const Region& domain, const ScalarField& f, const BoundaryData& g,
                          const SolverConfig& cfg = {});

// P^sign(D_h^2 u) = f in the domain. Jacobi and red-black modes solve the node equation exactly
// given the neighbours (the centred Hessian depends on u(x) only through its diagonal).
SolveResult solve_pucci(const Grid& grid, const Region& domain, PucciSign sign, const ScalarField& f,
                        const BoundaryData& g, const Ellipticity& ell, const SolverConfig& cfg = {});

using LibraryParams = std::map<std::string, double>;

// Closed-form fields evaluated on `grid`. Names: harmonic_saddle, harmonic_cubic, harmonic_exp,
// poisson_kernel, log_counterexample, fundamental_solution, pucci_radial, huber, paraboloid,
// abs_power, cosine.
ScalarField field_library(const std::string& name, const Grid& grid, const LibraryParams& params = {});
std::vector<std::string> field_library_names();

struct WalkConfig {
    std::uint64_t n_samples = 10000;
    std::uint64_t seed = 1;
    double h = 1.0 / 32.0;
    std::uint64_t max_steps = 1000000;

    void validate() const;
};

struct HittingEstimate {
    double probability = 0.0;
    double halfwidth = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t capped = 0;
    std::uint64_t samples = 0;
    bool start_in_target = false;
    double capped_fraction() const;
};

// Nearest-neighbour lattice walks on h Z^n from the node nearest `start`, absorbed in `target`
// or on leaving the open unit ball. Walk i uses its own mt19937_64 stream seeded by (seed, stream, i).
HittingEstimate random_walk_hitting(int dim, const Region& target, const Point& start, const WalkConfig& walk,
                                    std::uint64_t stream = 0);

// Discrete harmonic interpolant: 1 on target nodes, 0 outside B_1, lattice-harmonic between.
SolveResult discrete_hitting_oracle(int dim, const Region& target, double h, const SolverConfig& cfg = {});

// Pinned lower constant for min over the closed B_{1/3} of the hitting probability per unit |A cap B_rho|.
double probabilistic_harnack_constant(int dim);

// Estimates the hitting probability of A cap closed B_rho from a fixed net of starts in the closed B_{1/3}.
CheckReport probabilistic_harnack_check(int dim, double rho, const Region& A, const WalkConfig& walk,
                                        std::optional<double> c_impl = std::nullopt);

// Pinned C with max (v_2h)_- <= C osc over B_{1/2} for second differences of P+ solutions on B_1.
double second_difference_constant(int dim);

// v = (u(x + s e) + u(x - s e) - 2u(x))/s^2 along a lattice direction e; asserts P^-(D^2 v) <= tolerance
// at nodes where v's stencil lies inside the solve region, and max (v)_- <= C osc(u).
struct SecondDifferenceReports {
    CheckReport supersolution;
    CheckReport lower_bound;
};
SecondDifferenceReports second_difference_checks(const ScalarField& u, const Region& solved, const Ellipticity& ell,
                                                 const Point& direction, double solve_residual,
                                                 std::optional<double> C_impl = std::nullopt);

}  // namespace kslab
