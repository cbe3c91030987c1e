#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kslab/grid.hpp"
#include "kslab/operators.hpp"
#include "kslab/report.hpp"

namespace kslab {

ScalarField inf_convolution(const ScalarField& u, double eps);
ScalarField sup_convolution(const ScalarField& u, double eps);
// Gamma_eps = sup_convolution(inf_convolution(u, eps), eps)
ScalarField paraboloid_envelope(const ScalarField& u, double eps);

enum class ParaboloidSign { Concave, Convex };

// phi_y(x) = -(M/2)|x - y|^2 + offset (concave) or +(M/2)|x - y|^2 + offset (convex).
struct ParaboloidFamily {
    double M = 1.0;
    ParaboloidSign sign = ParaboloidSign::Concave;
    Region center_set = Region::all();
    double vertical_offset = 0.0;

    double value(const Point& x, const Point& y, int dim) const;
    double hessian_norm() const { return M; }
    std::string describe() const;
};

// phi_y(x) = C0 C1 (q(|x - y|) - q(1 - rho/2)), q(r) = min(r^-alpha, (rho/2)^-alpha),
// C1 = 1 / (q(1/2 + rho/2) - q(1 - rho/2)).
struct RadialProfileFamily {
    double alpha = 1.0;
    double rho = 0.25;
    double C0 = 1.0;
    Region center_set = Region::all();

    RadialProfileFamily(double alpha, double rho, double C0, Region centers);
    double q(double r) const;
    double C1() const;
    double value(const Point& x, const Point& y, int dim) const;
    Point gradient(const Point& x, const Point& y, int dim) const;
    SymMatrix hessian(const Point& x, const Point& y, int dim) const;
    double sup() const;
    std::string describe() const;
};

using TestFamily = std::variant<ParaboloidFamily, RadialProfileFamily>;

struct ContactEntry {
    std::size_t node = 0;
    Point x0{0.0, 0.0, 0.0};
    Point y0{0.0, 0.0, 0.0};
    // c with phi_y + c touching u from below at x0
    double offset = 0.0;
    Point gradient{0.0, 0.0, 0.0};
    // (u - phi_y)(x0) minus the minimum over the domain
    double gap = 0.0;
    double tau = 0.0;
    bool boundary = false;
};

struct ContactOptions {
    // tau = tau_factor * |D^2 phi|_op * h^2 + 1e-12
    double tau_factor = 0.25;
    std::optional<Region> domain;
};

struct ContactSet {
    Grid grid;
    std::vector<ContactEntry> entries;
    double tolerance = 0.0;
    std::string family;
    std::size_t center_count = 0;

    std::vector<std::size_t> contact_nodes(bool interior_only = false) const;
    Region as_region() const;
};

ContactSet contact_set(const ScalarField& u, const TestFamily& family, const ContactOptions& opts = {});

struct TransportRecord {
    std::vector<std::size_t> entry;  // index into ContactSet::entries
    std::vector<Point> image;
    std::vector<double> jacobian;      // clamped at 0
    std::vector<double> raw_jacobian;  // before clamping
    double clamped_total = 0.0;
};

TransportRecord transport_map(const ContactSet& contact, const ScalarField& u, const TestFamily& family);

// |center_set| <= sum over distinct contact nodes of |det DT| h^n, with the node-counting
// allowance given by the boundary layer of the center set.
CheckReport area_formula_check(const ContactSet& contact, const TransportRecord& transport, const Region& center_set);

CheckReport measure_estimate_check(const ScalarField& u, const Ellipticity& ell, double delta);
CheckReport localization_check(const ScalarField& u, const Ellipticity& ell, double rho, double delta);

// Smallest power of two C0 making P^-(D^2 phi) >= 1 on B_1 minus B_rho for centers in B_{rho/2}.
double localization_C0(int n, const Ellipticity& ell, double rho);

struct AbpOptions {
    int slope_counts = 16;
    std::optional<ScalarField> forcing;
};
CheckReport abp_bound(const ScalarField& u, const Ellipticity& ell, const AbpOptions& opts = {});
double abp_constant(int n, const Ellipticity& ell);

CheckReport aleksandrov_check(const ScalarField& u, const Region& omega, double convexity_tol = 1e-8);
double aleksandrov_constant(int n);

struct HessianContactResult {
    ContactSet contact;
    CheckReport report;
};
HessianContactResult hessian_contact_set(const ScalarField& u, double M, const Region& center_set);

}  // namespace kslab
