#pragma once

#include <cstddef>
#include <vector>

#include "kslab/grid.hpp"

namespace kslab {

// out[q] = min_p f[p] + w (p - q)^2 over indices of one line, via the lower envelope of
// parabolas. Entries of f equal to +inf are ignored; an all-inf line yields +inf.
void lower_envelope_line(const double* f, std::size_t stride, std::size_t n, double w, double* out,
                         std::size_t out_stride);

// Applies the line envelope along every active axis, last axis first:
// out(y) = min_x f(x) + w |x - y|^2 / h^2 in lattice units.
std::vector<double> separable_lower_envelope(const Grid& g, std::vector<double> f, double w);

// Euclidean distance from every node to the nearest node with members[i] != 0
// (+inf when the set is empty).
std::vector<double> distance_to_set(const Grid& g, const std::vector<std::uint8_t>& members);

}  // namespace kslab
