#include "kslab/plot.hpp"

#include <cmath>

#include "kslab/io.hpp"

namespace kslab {

void write_decay_csv(std::ostream& os, const DecayProfile& profile) {
    std::optional<HolderFit> fit;
    try {
        fit = fit_holder_exponent(profile);
    } catch (const std::invalid_argument&) {
    }
    os << "r,osc,bound,log_r,log_osc\r\n";
    const double o0 = profile.osc.empty() ? 0.0 : profile.osc.front();
    for (std::size_t k = 0; k < profile.radii.size(); ++k) {
        const double r = profile.radii[k], o = profile.osc[k];
        const double bound = fit ? o0 * std::pow(r / profile.r0, fit->alpha_hat) : o0;
        os << fmt_double(r) << ',' << fmt_double(o) << ',' << fmt_double(bound) << ',' << fmt_double(std::log(r))
           << ',' << (o > 0.0 ? fmt_double(std::log(o)) : std::string()) << "\r\n";
    }
}

void write_contact_csv(std::ostream& os, const ContactSet& contact) {
    const int n = contact.grid.dim();
    static const char* axis[] = {"x", "y", "z"};
    for (int d = 0; d < n; ++d) os << axis[d] << ',';
    for (int d = 0; d < n; ++d) os << "center_" << axis[d] << (d + 1 < n ? "," : "\r\n");
    for (const auto& e : contact.entries) {
        for (int d = 0; d < n; ++d) os << fmt_double(e.x0[d]) << ',';
        for (int d = 0; d < n; ++d) os << fmt_double(e.y0[d]) << (d + 1 < n ? "," : "\r\n");
    }
}

void write_covering_csv(std::ostream& os, const Decomposition& dec) {
    const int n = dec.dim;
    static const char* axis[] = {"cx", "cy", "cz"};
    os << "gen,";
    for (int d = 0; d < n; ++d) os << axis[d] << ',';
    os << "side\r\n";
    for (const auto& q : dec.cubes) {
        const Point c = q.center(n);
        os << q.index.generation << ',';
        for (int d = 0; d < n; ++d) os << fmt_double(c[d]) << ',';
        os << fmt_double(q.side()) << "\r\n";
    }
}

void write_distribution_csv(std::ostream& os, const std::vector<std::pair<double, double>>& curve) {
    os << "mu,measure\r\n";
    for (const auto& [mu, m] : curve) os << fmt_double(mu) << ',' << fmt_double(m) << "\r\n";
}

}  // namespace kslab
