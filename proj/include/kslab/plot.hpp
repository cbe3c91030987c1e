#pragma once

#include <ostream>
#include <utility>
#include <vector>

#include "kslab/contact.hpp"
#include "kslab/coverings.hpp"
#include "kslab/regularity.hpp"

namespace kslab {

// RFC-4180 CSV writers for figure data. Every writer emits a header row first.

// r, osc, bound, log_r, log_osc; bound = osc_0 (r / r_0)^alpha_hat from the least-squares fit.
void write_decay_csv(std::ostream& os, const DecayProfile& profile);
// x, y, center_x, center_y (z columns are added in 3D).
void write_contact_csv(std::ostream& os, const ContactSet& contact);
// gen, cx, cy, side (cz added in 3D; cy omitted in 1D).
void write_covering_csv(std::ostream& os, const Decomposition& dec);
// mu, measure
void write_distribution_csv(std::ostream& os, const std::vector<std::pair<double, double>>& curve);

}  // namespace kslab
