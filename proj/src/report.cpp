#include "kslab/report.hpp"

#include <stdexcept>

namespace kslab {

namespace {
void in_open_unit(const std::optional<double>& v, const char* name) {
    if (v && !(*v > 0.0 && *v < 1.0)) throw std::invalid_argument(std::string(name) + " must lie in (0,1)");
}
}  // namespace

void EstimateConstants::validate() const {
    in_open_unit(theta, "theta");
    in_open_unit(rho, "rho");
    in_open_unit(delta, "delta");
    in_open_unit(eta, "eta");
    in_open_unit(epsilon, "epsilon");
    if (M && !(*M >= 1.0)) throw std::invalid_argument("M must be at least 1");
    if (C && !(*C >= 1.0)) throw std::invalid_argument("C must be at least 1");
    if (alpha && !(*alpha > 0.0 && *alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
}

CheckReport& CheckReport::finalize() {
    margin = rhs - lhs;
    pass = margin >= -tolerance;
    return *this;
}

CheckReport& CheckReport::fail(const std::string& why) {
    pass = false;
    notes.push_back(why);
    return *this;
}

}  // namespace kslab
