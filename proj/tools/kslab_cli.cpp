#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kslab/contact.hpp"
#include "kslab/coverings.hpp"
#include "kslab/io.hpp"
#include "kslab/plot.hpp"
#include "kslab/regularity.hpp"
#include "kslab/solvers.hpp"
#include "kslab/suites.hpp"

namespace fs = std::filesystem;
using namespace kslab;

namespace {

constexpr int kPass = 0;
constexpr int kCheckFail = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Accepts decimals and fractions such as 1/128.
double parse_number(const std::string& text) {
    const auto slash = text.find('/');
    try {
        std::size_t used = 0;
        if (slash == std::string::npos) {
            const double v = std::stod(text, &used);
            if (used == text.size()) return v;
        } else {
            const std::string a = text.substr(0, slash), b = text.substr(slash + 1);
            std::size_t ua = 0, ub = 0;
            const double num = std::stod(a, &ua), den = std::stod(b, &ub);
            if (ua == a.size() && ub == b.size() && den != 0.0) return num / den;
        }
    } catch (const std::exception&) {
    }
    throw UsageError("not a number: " + text);
}

std::pair<std::string, std::string> split_pair(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value, got " + kv);
    return {kv.substr(0, eq), kv.substr(eq + 1)};
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
    return out;
}

Point to_point(const std::vector<double>& v, std::size_t from, std::size_t count) {
    Point p{0.0, 0.0, 0.0};
    for (std::size_t d = 0; d < count && d < 3; ++d) p[d] = v.at(from + d);
    return p;
}

// Region expressions: terms joined left to right by '&' (intersection), '-' (difference) or '|' (union).
//   ball(c1,..,cn;r)  cube(c1,..,cn;side)  annulus(c1,..,cn;r_in,r_out)  halfspace(n1,..,nn;offset)
//   point(c1,..,cn)  all
// ball and cube are closed.
Region parse_region(const std::string& text, int dim) {
    std::size_t pos = 0;
    auto term = [&]() -> Region {
        while (pos < text.size() && text[pos] == ' ') ++pos;
        if (text.compare(pos, 3, "all") == 0) {
            pos += 3;
            return Region::all();
        }
        const auto open = text.find('(', pos);
        const std::string name = open == std::string::npos ? text.substr(pos) : text.substr(pos, open - pos);
        const auto close = open == std::string::npos ? std::string::npos : text.find(')', open);
        if (close == std::string::npos) throw UsageError("malformed region near: " + text.substr(pos));
        const std::string body = text.substr(open + 1, close - open - 1);
        pos = close + 1;
        const auto semi = body.find(';');
        const std::vector<double> head = parse_list(body.substr(0, semi));
        const std::vector<double> tail = semi == std::string::npos ? std::vector<double>{} : parse_list(body.substr(semi + 1));
        if (head.size() != static_cast<std::size_t>(dim)) throw UsageError("region " + name + " needs " + std::to_string(dim) + " coordinates");
        const Point c = to_point(head, 0, dim);
        auto need = [&](std::size_t k) {
            if (tail.size() != k) throw UsageError("region " + name + " expects " + std::to_string(k) + " value(s) after ';'");
        };
        if (name == "ball") return need(1), Region::ball(c, tail[0], true);
        if (name == "cube") return need(1), Region::cube(c, tail[0], true);
        if (name == "annulus") return need(2), Region::annulus(c, tail[0], tail[1]);
        if (name == "halfspace") return need(1), Region::halfspace(c, tail[0]);
        if (name == "point") return need(0), Region::point(c);
        throw UsageError("unknown region term: " + name);
    };
    Region r = term();
    while (pos < text.size()) {
        const char op = text[pos++];
        if (op == ' ') continue;
        const Region next = term();
        if (op == '&') r = r.intersect(next);
        else if (op == '-') r = r.minus(next);
        else if (op == '|') r = r.unite(next);
        else throw UsageError(std::string("unknown region operator: ") + op);
    }
    return r;
}

struct Common {
    std::string h;
    int dim = 2;
    double lambda = 1.0;
    double Lambda = 2.0;
    std::uint64_t seed = 1;
    std::string out;
    bool binary = false;
    std::vector<std::string> params;

    std::map<std::string, std::string> param_map() const {
        std::map<std::string, std::string> m;
        for (const auto& kv : params) {
            auto [k, v] = split_pair(kv);
            m[k] = v;
        }
        return m;
    }
    std::optional<double> spacing() const {
        if (h.empty()) return std::nullopt;
        const double v = parse_number(h);
        if (!(v > 0.0)) throw UsageError("--h must be positive");
        return v;
    }
};

void add_common(CLI::App* cmd, Common& c, bool with_params) {
    cmd->add_option("--h", c.h, "grid spacing, e.g. 1/128");
    cmd->add_option("--dim", c.dim, "spatial dimension")->check(CLI::Range(1, 3));
    cmd->add_option("--lambda", c.lambda, "lower ellipticity constant");
    cmd->add_option("--Lambda", c.Lambda, "upper ellipticity constant");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--out", c.out, "output path");
    cmd->add_flag("--binary", c.binary, "write field values to a little-endian float64 sidecar");
    if (with_params) cmd->add_option("--suite-param,--param", c.params, "key=value override (repeatable)");
}

void write_json(const std::string& out, const json& doc) {
    if (out.empty()) {
        std::cout << doc.dump(2) << '\n';
        return;
    }
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    os << doc.dump(2) << '\n';
    if (!os) throw std::runtime_error("cannot write " + out);
}

// ------------------------------------------------------------------ verify

int cmd_verify(const std::string& suite, const Common& c) {
    SuiteSpec spec;
    spec.name = suite;
    spec.h = c.spacing();
    spec.dim = c.dim;
    spec.lambda = c.lambda;
    spec.Lambda = c.Lambda;
    spec.seed = c.seed;
    spec.params = c.param_map();
    ReportDocument doc;
    try {
        doc = run_suite(spec);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    for (const auto& r : doc.checks)
        std::cerr << (r.pass ? "PASS " : "FAIL ") << r.name << "  margin=" << fmt_double(r.margin)
                  << "  tol=" << fmt_double(r.tolerance) << '\n';
    std::cerr << doc.passed() << '/' << doc.checks.size() << " checks passed\n";
    std::string out = c.out;
    if (!out.empty() && (fs::is_directory(out) || out.back() == '/')) {
        fs::create_directories(out);
        out = (fs::path(out) / (suite + ".report.json")).string();
    }
    write_json(out, to_json(doc));
    return doc.all_pass() ? kPass : kCheckFail;
}

// ------------------------------------------------------------------ generate

struct GenerateOpts {
    double half_width = 1.0;
    std::string f = "0";
    std::string g = "0";
    std::string domain;
    std::string sign = "minus";
    std::string mode;
    double tolerance = 0.0;
};

Grid make_grid(const Common& c, double half_width) {
    const double h = c.spacing().value_or(1.0 / 64.0);
    return Grid::cube(c.dim, h, half_width);
}

// A number, a field file on the same grid, or a field-library family name.
ScalarField field_argument(const std::string& text, const Grid& grid, const LibraryParams& params) {
    try {
        return ScalarField::constant(grid, parse_number(text));
    } catch (const UsageError&) {
    }
    if (fs::exists(text)) {
        ScalarField u = read_field(text).field;
        if (!u.grid().same_as(grid)) throw UsageError("field " + text + " is not on the requested grid");
        return u;
    }
    return field_library(text, grid, params);
}

int cmd_generate(const std::string& family, const Common& c, const GenerateOpts& o) {
    if (c.out.empty()) throw UsageError("generate needs --out");
    LibraryParams params;
    for (const auto& [k, v] : c.param_map()) params[k] = parse_number(v);
    const Grid grid = make_grid(c, o.half_width);
    if (family == "poisson" || family == "pucci") {
        SolverConfig cfg;
        if (o.tolerance > 0.0) cfg.tolerance = o.tolerance;
        if (!o.mode.empty()) cfg.mode = solver_mode_from_string(o.mode);
        const Region domain = o.domain.empty() ? Region::ball({0.0, 0.0, 0.0}, 1.0) : parse_region(o.domain, c.dim);
        const ScalarField f = field_argument(o.f, grid, params);
        const BoundaryData g = BoundaryData::from_field(field_argument(o.g, grid, params));
        SolveResult res = [&] {
            if (family == "poisson") return solve_poisson(grid, domain, f, g, cfg);
            if (o.sign != "minus" && o.sign != "plus") throw UsageError("--sign must be minus or plus");
            return solve_pucci(grid, domain, o.sign == "minus" ? PucciSign::Minus : PucciSign::Plus, f, g,
                               Ellipticity(c.lambda, c.Lambda), cfg);
        }();
        res.field.set_name(family);
        write_field(c.out, res.field, c.binary, res.provenance);
        std::cerr << family << ": residual " << fmt_double(res.residual) << " after " << res.iterations
                  << " iterations\n";
        return kPass;
    }
    const auto names = field_library_names();
    if (std::find(names.begin(), names.end(), family) == names.end())
        throw UsageError("unknown field family: " + family);
    if (family == "pucci_radial") {
        params.emplace("lambda", c.lambda);
        params.emplace("Lambda", c.Lambda);
    }
    write_field(c.out, field_library(family, grid, params), c.binary);
    return kPass;
}

// ------------------------------------------------------------------ plot-data

struct PlotOpts {
    std::string in;
    std::string region;
    std::string center;
    double rho = 0.5;
    double r0 = 0.5;
    int depth = -1;
    double M = 1.0;
    double center_radius = 0.25;
    int levels = 64;
};

std::ofstream open_csv(const std::string& out) {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out);
    return os;
}

int cmd_plot(const std::string& kind, const Common& c, const PlotOpts& o) {
    if (c.out.empty()) throw UsageError("plot-data needs --out");
    auto need_input = [&] {
        if (o.in.empty()) throw UsageError("plot-data " + kind + " needs --in FIELD");
        return read_field(o.in).field;
    };
    if (kind == "decay") {
        const ScalarField u = need_input();
        const int n = u.grid().dim();
        const Point center = o.center.empty() ? Point{0.0, 0.0, 0.0} : to_point(parse_list(o.center), 0, n);
        int depth = o.depth;
        if (depth < 0) depth = static_cast<int>(std::floor(std::log(2.0 * u.grid().h() / o.r0) / std::log(o.rho) + 1e-9));
        if (depth < 1) throw UsageError("grid too coarse for a decay profile");
        auto os = open_csv(c.out);
        write_decay_csv(os, oscillation_profile(u, center, o.rho, o.r0, depth));
    } else if (kind == "contact") {
        const ScalarField u = need_input();
        const ParaboloidFamily fam{o.M, ParaboloidSign::Concave, Region::ball({0.0, 0.0, 0.0}, o.center_radius, true), 0.0};
        ContactOptions opts;
        if (!o.region.empty()) opts.domain = parse_region(o.region, u.grid().dim());
        auto os = open_csv(c.out);
        write_contact_csv(os, contact_set(u, fam, opts));
    } else if (kind == "covering") {
        if (o.region.empty()) throw UsageError("plot-data covering needs --region");
        const int depth = o.depth < 0 ? (c.dim == 3 ? 7 : 10) : o.depth;
        auto os = open_csv(c.out);
        write_covering_csv(os, dyadic_decomposition(c.dim, parse_region(o.region, c.dim), depth));
    } else if (kind == "distribution") {
        const ScalarField u = need_input();
        const Region region = o.region.empty() ? Region::cube({0.0, 0.0, 0.0}, 1.0, true) : parse_region(o.region, u.grid().dim());
        auto os = open_csv(c.out);
        write_distribution_csv(os, distribution_curve(u, region, o.levels));
    } else {
        throw UsageError("unknown plot kind: " + kind + " (decay, contact, covering, distribution)");
    }
    return kPass;
}

// ------------------------------------------------------------------ report merge

int cmd_merge(const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<json> docs;
    for (const auto& p : inputs) {
        std::ifstream is(p);
        if (!is) throw std::runtime_error("cannot read " + p);
        try {
            docs.push_back(json::parse(is));
        } catch (const json::exception& e) {
            throw std::runtime_error("malformed report " + p + ": " + e.what());
        }
    }
    const json merged = merge_reports(docs);
    write_json(out, merged);
    return merged["summary"]["all_pass"].get<bool>() ? kPass : kCheckFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical verification lab for Krylov-Safonov regularity estimates"};
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);
    Common common;

    std::string suite;
    auto* verify = app.add_subcommand("verify", "run a registered verification suite");
    verify->add_option("suite", suite, "suite name")->required();
    add_common(verify, common, true);

    std::string family;
    GenerateOpts gen;
    auto* generate = app.add_subcommand("generate", "write a field from the library or a solver");
    generate->add_option("family", family, "field family, poisson or pucci")->required();
    add_common(generate, common, true);
    generate->add_option("--half-width", gen.half_width, "grid covers [-L, L]^dim");
    generate->add_option("--f", gen.f, "right-hand side: number, field file or family");
    generate->add_option("--g", gen.g, "boundary data: number, field file or family");
    generate->add_option("--domain", gen.domain, "solve region (default: open unit ball)");
    generate->add_option("--sign", gen.sign, "Pucci sign: minus or plus");
    generate->add_option("--mode", gen.mode, "jacobi, gauss-seidel-red-black or pseudo-time");
    generate->add_option("--tolerance", gen.tolerance, "residual tolerance");

    std::string kind;
    PlotOpts plot;
    auto* plot_cmd = app.add_subcommand("plot-data", "write figure data as CSV");
    plot_cmd->add_option("kind", kind, "decay, contact, covering or distribution")->required();
    add_common(plot_cmd, common, false);
    plot_cmd->add_option("--in", plot.in, "input field file");
    plot_cmd->add_option("--region", plot.region, "region expression");
    plot_cmd->add_option("--center", plot.center, "decay centre, comma separated");
    plot_cmd->add_option("--rho", plot.rho, "decay ratio");
    plot_cmd->add_option("--r0", plot.r0, "outer decay radius");
    plot_cmd->add_option("--depth", plot.depth, "profile or dyadic depth");
    plot_cmd->add_option("--M", plot.M, "paraboloid opening for contact sets");
    plot_cmd->add_option("--center-radius", plot.center_radius, "radius of the vertex ball for contact sets");
    plot_cmd->add_option("--levels", plot.levels, "distribution levels");

    std::string action;
    std::vector<std::string> inputs;
    std::string merge_out;
    auto* report = app.add_subcommand("report", "operate on report documents");
    report->add_option("action", action, "merge")->required()->check(CLI::IsMember({"merge"}));
    report->add_option("inputs", inputs, "report files")->required();
    report->add_option("--out", merge_out, "output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        if (*verify) return cmd_verify(suite, common);
        if (*generate) return cmd_generate(family, common, gen);
        if (*plot_cmd) return cmd_plot(kind, common, plot);
        if (*report) return cmd_merge(inputs, merge_out);
    } catch (const std::exception& e) {
        std::cerr << "kslab: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
