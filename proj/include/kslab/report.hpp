#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kslab {

struct EstimateConstants {
    std::optional<double> theta, rho, delta, eta, M, epsilon, alpha, C;
    // Measured implementation constants and auxiliary parameters, keyed by name.
    std::map<std::string, double> extra;

    // Throws std::invalid_argument when a set constant leaves its admissible range.
    void validate() const;
};

struct CheckReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    EstimateConstants constants;
    double h = 0.0;
    int dim = 0;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> notes;
    // Named auxiliary measurements (sample counts, intermediate sides of a chain, ...).
    std::map<std::string, double> measured;

    // Sets margin = rhs - lhs and pass = margin >= -tolerance.
    CheckReport& finalize();
    // Marks the report failed without touching the sides.
    CheckReport& fail(const std::string& why);
};

// Raised by checks whose hypotheses do not hold for the supplied field.
class HypothesisError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace kslab
