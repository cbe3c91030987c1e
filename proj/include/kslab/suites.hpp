#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kslab/io.hpp"
#include "kslab/report.hpp"

namespace kslab {

struct SuiteSpec {
    std::string name;
    std::optional<double> h;  // default: 1/128 in 2D, 1/24 in 3D
    int dim = 2;
    double lambda = 1.0;
    double Lambda = 2.0;
    std::uint64_t seed = 1;
    // --suite-param key=value overrides; see suite_param_keys().
    std::map<std::string, std::string> params;
};

struct ReportDocument {
    std::string suite;
    std::string timestamp;
    SuiteSpec spec;
    double h = 0.0;
    // Checks in registration order; a check that throws is recorded as a failed report.
    std::vector<CheckReport> checks;

    bool all_pass() const;
    std::size_t passed() const;
};

const std::vector<std::string>& suite_names();
const std::vector<std::string>& suite_param_keys();

// Throws std::invalid_argument for an unknown suite, an unsupported dimension or a malformed parameter.
ReportDocument run_suite(const SuiteSpec& spec);

// Header fields first; "timestamp" is the only non-deterministic field.
json to_json(const ReportDocument& doc);
// Concatenates the checks of several report documents under one header.
json merge_reports(const std::vector<json>& docs);

// Random region built from balls, cubes, annuli and half-spaces with intersections and
// differences only, so that box relations stay exact for Inside answers.
Region random_region(int dim, std::mt19937_64& rng);

}  // namespace kslab
