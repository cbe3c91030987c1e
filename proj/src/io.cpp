#include "kslab/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace kslab {

namespace fs = std::filesystem;

namespace {

std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
    if (!os) throw std::runtime_error("cannot write " + path.string());
}

void write_binary(const fs::path& path, const std::vector<double>& values) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    for (double v : values) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, 8);
        bits = to_le(bits);
        os.write(reinterpret_cast<const char*>(&bits), 8);
    }
    if (!os) throw std::runtime_error("cannot write " + path.string());
}

std::vector<double> read_binary(const fs::path& path, std::size_t count) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::vector<double> v(count);
    for (auto& x : v) {
        std::uint64_t bits = 0;
        is.read(reinterpret_cast<char*>(&bits), 8);
        bits = to_le(bits);
        std::memcpy(&x, &bits, 8);
    }
    if (!is) throw std::runtime_error("sidecar file too short: " + path.string());
    return v;
}

fs::path sidecar(const fs::path& path) { return fs::path(path.string() + ".bin"); }

void emit(const fs::path& path, json doc, const std::vector<double>& flat, bool binary) {
    if (binary) {
        doc["values_file"] = sidecar(path).filename().string();
        doc["encoding"] = "f64le";
        write_binary(sidecar(path), flat);
    } else {
        doc["values"] = flat;
    }
    write_text(path, doc.dump(1) + "\n");
}

}  // namespace

std::string fmt_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

json grid_header(const Grid& g) {
    json j;
    j["dim"] = g.dim();
    j["h"] = g.h();
    j["origin"] = std::vector<double>(g.origin().begin(), g.origin().begin() + g.dim());
    j["counts"] = std::vector<int>(g.counts().begin(), g.counts().begin() + g.dim());
    return j;
}

Grid grid_from_header(const json& header) {
    const int dim = header.at("dim").get<int>();
    const auto origin = header.at("origin").get<std::vector<double>>();
    const auto counts = header.at("counts").get<std::vector<int>>();
    if (static_cast<int>(origin.size()) != dim || static_cast<int>(counts.size()) != dim)
        throw std::invalid_argument("header origin/counts do not match dim");
    Point o{0.0, 0.0, 0.0};
    Index3 c{1, 1, 1};
    for (int d = 0; d < dim; ++d) {
        o[d] = origin[d];
        c[d] = counts[d];
    }
    return Grid(dim, header.at("h").get<double>(), o, c);
}

void write_field(const fs::path& path, const ScalarField& u, bool binary, const json& provenance) {
    json doc = grid_header(u.grid());
    doc["name"] = u.name();
    if (u.mask()) {
        doc["mask"] = {{"type", "excluded_ball"},
                       {"center", std::vector<double>(u.mask()->center.begin(),
                                                      u.mask()->center.begin() + u.grid().dim())},
                       {"radius", u.mask()->radius}};
    }
    if (!provenance.is_null()) doc["provenance"] = provenance;
    emit(path, std::move(doc), u.values(), binary);
}

FieldFile read_field(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed field file " + path.string() + ": " + e.what());
    }
    const Grid g = grid_from_header(doc);
    if (doc.contains("components")) throw std::invalid_argument("file holds a multi-component field");
    std::vector<double> values;
    if (doc.contains("values_file")) {
        values = read_binary(path.parent_path() / doc["values_file"].get<std::string>(), g.size());
    } else {
        values = doc.at("values").get<std::vector<double>>();
    }
    ScalarField u(g, std::move(values), doc.value("name", std::string()));
    if (doc.contains("mask")) {
        ExcludedBall b;
        const auto c = doc["mask"].at("center").get<std::vector<double>>();
        for (std::size_t d = 0; d < c.size() && d < 3; ++d) b.center[d] = c[d];
        b.radius = doc["mask"].at("radius").get<double>();
        u.set_mask(b);
    }
    return {std::move(u), doc.contains("provenance") ? doc["provenance"] : json(nullptr)};
}

void write_vector_field(const fs::path& path, const VectorField& v, const std::string& name, bool binary) {
    json doc = grid_header(v.grid);
    doc["name"] = name;
    const int n = v.grid.dim();
    std::vector<std::string> comps;
    for (int d = 0; d < n; ++d) comps.push_back("d" + std::to_string(d + 1));
    doc["components"] = comps;
    std::vector<double> flat;
    flat.reserve(v.values.size() * n);
    for (const auto& p : v.values)
        for (int d = 0; d < n; ++d) flat.push_back(p[d]);
    emit(path, std::move(doc), flat, binary);
}

void write_matrix_field(const fs::path& path, const MatrixField& m, const std::string& name, bool binary) {
    json doc = grid_header(m.grid);
    doc["name"] = name;
    const int n = m.grid.dim();
    std::vector<std::string> comps;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) comps.push_back("d" + std::to_string(i + 1) + std::to_string(j + 1));
    doc["components"] = comps;
    std::vector<double> flat;
    for (const auto& a : m.values)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) flat.push_back(a(i, j));
    emit(path, std::move(doc), flat, binary);
}

json to_json(const EstimateConstants& c) {
    json j = json::object();
    auto put = [&](const char* k, const std::optional<double>& v) {
        if (v) j[k] = *v;
    };
    put("theta", c.theta);
    put("rho", c.rho);
    put("delta", c.delta);
    put("eta", c.eta);
    put("M", c.M);
    put("epsilon", c.epsilon);
    put("alpha", c.alpha);
    put("C", c.C);
    for (const auto& [k, v] : c.extra) j[k] = v;
    return j;
}

namespace {
json num(double x) {
    if (std::isfinite(x)) return x;
    return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}
double from_num(const json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
}
}  // namespace

json to_json(const CheckReport& r) {
    json j;
    j["name"] = r.name;
    j["lhs"] = num(r.lhs);
    j["rhs"] = num(r.rhs);
    j["margin"] = num(r.margin);
    j["tolerance"] = r.tolerance;
    j["pass"] = r.pass;
    j["constants"] = to_json(r.constants);
    j["grid"] = {{"h", r.h}, {"dim", r.dim}};
    j["seed"] = r.seed ? json(*r.seed) : json(nullptr);
    j["notes"] = r.notes;
    json m = json::object();
    for (const auto& [k, v] : r.measured) m[k] = num(v);
    j["measured"] = m;
    return j;
}

CheckReport check_report_from_json(const json& j) {
    CheckReport r;
    r.name = j.at("name").get<std::string>();
    r.lhs = from_num(j.at("lhs"));
    r.rhs = from_num(j.at("rhs"));
    r.margin = from_num(j.at("margin"));
    r.tolerance = j.value("tolerance", 0.0);
    r.pass = j.at("pass").get<bool>();
    for (const auto& [k, v] : j.at("constants").items()) {
        const double x = from_num(v);
        if (k == "theta") r.constants.theta = x;
        else if (k == "rho") r.constants.rho = x;
        else if (k == "delta") r.constants.delta = x;
        else if (k == "eta") r.constants.eta = x;
        else if (k == "M") r.constants.M = x;
        else if (k == "epsilon") r.constants.epsilon = x;
        else if (k == "alpha") r.constants.alpha = x;
        else if (k == "C") r.constants.C = x;
        else r.constants.extra[k] = x;
    }
    r.h = j.at("grid").at("h").get<double>();
    r.dim = j.at("grid").at("dim").get<int>();
    if (!j.at("seed").is_null()) r.seed = j["seed"].get<std::uint64_t>();
    r.notes = j.value("notes", std::vector<std::string>{});
    if (j.contains("measured"))
        for (const auto& [k, v] : j["measured"].items()) r.measured[k] = from_num(v);
    return r;
}

json to_json(const NormReport& r) {
    return {{"norm", r.norm},         {"region", r.region},   {"value", r.value},
            {"h", r.h},               {"sample_count", r.sample_count}, {"measure", r.measure},
            {"measure_error_bound", r.measure_error_bound}};
}

}  // namespace kslab
