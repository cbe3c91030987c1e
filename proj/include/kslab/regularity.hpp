#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "kslab/grid.hpp"
#include "kslab/operators.hpp"
#include "kslab/report.hpp"

namespace kslab {

struct DecayProfile {
    int dim = 1;
    Point center{0.0, 0.0, 0.0};
    double rho = 0.5;
    double r0 = 1.0;
    std::vector<double> radii;  // rho^k r0, k = 0..depth
    std::vector<double> osc;
};

// Oscillation of u over the closed balls B_{rho^k r0}(center).
DecayProfile oscillation_profile(const ScalarField& u, const Point& center, double rho, double r0, int depth);

// Same profile for a closed-form function, sampled per radius on a lattice with
// `nodes_per_radius` spacings across each radius (so every scale is equally resolved).
DecayProfile oscillation_profile(const std::function<double(const Point&)>& fn, int dim, const Point& center,
                                 double rho, double r0, int depth, int nodes_per_radius = 32);

// The profile osc_k = (1 - theta)^k osc0 at radii rho^k r0.
DecayProfile geometric_profile(int dim, double theta, double rho, double r0, int depth, double osc0 = 1.0);

struct HolderFromDecay {
    double alpha;
    double C;
};
HolderFromDecay holder_from_decay(double theta, double rho);

// Requires osc_{k+1} <= (1 - theta) osc_k; throws std::runtime_error naming the first failing k.
// Asserts osc_k <= C rho^{(k+1) alpha} osc_0, the value of the modulus at the left end of the
// radius interval (rho^{k+1}, rho^k] on which osc_k is the governing oscillation.
CheckReport decay_implies_modulus_check(const DecayProfile& profile, double theta);

struct HolderFit {
    double alpha_hat;
    double r_squared;
};
HolderFit fit_holder_exponent(const DecayProfile& profile);

// C_impl with fint_{B_r} u <= u(center) + C_impl r^{2 - n/p} ||(Delta u)_+||_{L^p(B_r)}.
double mean_value_constant(int n, double p);

CheckReport mean_value_check(const ScalarField& u, const Point& center, double r, double p);
CheckReport weak_harnack_laplacian_check(const ScalarField& u, double p);
CheckReport harnack_quotient_check(const ScalarField& u, double r);

// Pinned (eta, M): eps = -ln(1 - eta)/ln M. delta normalises the forcing as in min + ||f||/delta.
struct DistributionParams {
    double eta = 0.25;
    double M = 8.0;
    double delta = 0.5;
    int levels = 64;
};
// (mu, |{u >= mu} cap region|) at `levels` log-spaced levels between the smallest positive
// and the largest value of u on the region.
std::vector<std::pair<double, double>> distribution_curve(const ScalarField& u, const Region& region, int levels = 64);

// sup_mu mu^eps |{u >= mu} cap Q_1| <= C (min_{Q_3} u + ||(P^-(D^2u))_+||_{L^n} / delta)^eps
// with eps = -ln(1 - eta)/ln M and C = M^eps.
CheckReport weak_harnack_ue_check(const ScalarField& u, const Ellipticity& ell, const DistributionParams& params = {});

// Pinned C for sup_{B_1/2} u <= C (inf_{B_1/2} u + ||f||_{L^n(B_1)}) on Pucci-sandwich solutions.
double harnack_ue_constant(int n, const Ellipticity& ell);
// f is taken as the smallest forcing for which u solves both Pucci inequalities on B_1.
CheckReport harnack_ue_check(const ScalarField& u, const Ellipticity& ell, std::optional<double> C = std::nullopt);

struct DiminishParams {
    double delta = 0.5;
    double eta0 = 0.1;
    double M = 2.0;
    int max_depth = -1;  // default: finest cube side about 2h
};
CheckReport diminish_of_distribution_check(const ScalarField& u, const Ellipticity& ell,
                                           const DiminishParams& params = {});

struct LocalMaxParams {
    double p = std::numeric_limits<double>::infinity();
    double eps_exponent = 1.0;
    std::optional<Ellipticity> ell;  // Pucci mode when set
    std::optional<double> C;         // pinned constant override
};
double local_max_constant(int n, const LocalMaxParams& params);
CheckReport local_max_check(const ScalarField& u, const LocalMaxParams& params = {});

struct BallAverageLaplacian {
    double estimate;
    CheckReport report;
};
// Richardson extrapolation of rho^-2 (fint_{B_rho} u - u(point)) with radii rho, rho/2.
BallAverageLaplacian ball_average_laplacian(const ScalarField& u, const Point& point, double rho);

CheckReport mollification_identity_check(const ScalarField& u, double eps);
CheckReport morrey_check(const ScalarField& u, double p);
double morrey_constant(int n, double p);

struct RolleResult {
    Point x2{0.0, 0.0, 0.0};
    std::size_t node = 0;
    CheckReport report;
};
// Slides phi(x) = min u + osc (1 - |x - x1|^2 / R^2) under u on the closed ball B_R(x1).
RolleResult rolle_gradient_point(const ScalarField& u, const Point& x1, double R,
                                 std::optional<double> omega_osc = std::nullopt);

}  // namespace kslab
