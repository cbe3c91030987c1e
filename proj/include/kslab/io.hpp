#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "kslab/grid.hpp"
#include "kslab/operators.hpp"
#include "kslab/report.hpp"

namespace kslab {

using json = nlohmann::ordered_json;

struct FieldFile {
    ScalarField field;
    json provenance;  // null when absent
};

json grid_header(const Grid& g);
Grid grid_from_header(const json& header);

// fld-json: header {dim, h, origin, counts, name} plus values, inline or in a sidecar
// file "<path>.bin" of little-endian float64 when binary is set.
void write_field(const std::filesystem::path& path, const ScalarField& u, bool binary = false,
                 const json& provenance = nullptr);
FieldFile read_field(const std::filesystem::path& path);
void write_vector_field(const std::filesystem::path& path, const VectorField& v, const std::string& name,
                        bool binary = false);
void write_matrix_field(const std::filesystem::path& path, const MatrixField& m, const std::string& name,
                        bool binary = false);

json to_json(const EstimateConstants& c);
json to_json(const CheckReport& r);
CheckReport check_report_from_json(const json& j);
json to_json(const NormReport& r);

// RFC-4180 field quoting.
std::string csv_escape(const std::string& s);
// Shortest round-trip decimal form of a double.
std::string fmt_double(double x);

}  // namespace kslab
