#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "kslab/io.hpp"
#include "kslab/plot.hpp"
#include "kslab/solvers.hpp"

using namespace kslab;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "kslab_unit_io";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("fld-json round trip is bitwise, inline and binary") {
    std::mt19937_64 rng(2);
    const Grid g(2, 1.0 / 7.0, {-0.3, 0.1, 0.0}, {5, 9, 1});
    ScalarField u = test::random_field(g, rng, -1e300, 1e300);
    u.set_name("noise");
    for (bool binary : {false, true}) {
        const fs::path p = temp_path(binary ? "noise_bin.json" : "noise.json");
        write_field(p, u, binary);
        const FieldFile back = read_field(p);
        CHECK(back.field.grid().same_as(g));
        CHECK(back.field.name() == "noise");
        CHECK(back.field.values() == u.values());
        CHECK(back.provenance.is_null());
        CHECK(fs::exists(fs::path(p.string() + ".bin")) == binary);
    }
}

TEST_CASE("masked library field round trip") {
    const Grid g = Grid::cube(2, 1.0 / 64.0, 1.0);
    const ScalarField u = field_library("pucci_radial", g);
    REQUIRE(u.mask().has_value());
    const fs::path p = temp_path("radial.json");
    write_field(p, u, true);
    const ScalarField back = read_field(p).field;
    REQUIRE(back.mask().has_value());
    CHECK(back.mask()->radius == u.mask()->radius);
    CHECK(back.values() == u.values());
}

TEST_CASE("provenance survives the round trip") {
    const Grid g = Grid::cube(2, 1.0 / 16.0, 1.0);
    const auto s = solve_poisson(g, Region::ball(test::kO, 1.0), ScalarField::constant(g, 0.0),
                                 BoundaryData::from_function(g, [](const Point& x) { return x[0]; }));
    const fs::path p = temp_path("poisson.json");
    write_field(p, s.field, false, s.provenance);
    const FieldFile back = read_field(p);
    CHECK(back.provenance.at("solver") == "poisson");
    CHECK(back.provenance.at("residual").get<double>() <= 1e-8);
}

TEST_CASE("malformed files are rejected") {
    const fs::path p = temp_path("bad.json");
    std::ofstream(p) << "{\"dim\": 2";
    CHECK_THROWS(read_field(p));
    std::ofstream(p) << R"({"dim":2,"h":0.5,"origin":[0,0],"counts":[3,3],"values":[1,2,3]})";
    CHECK_THROWS(read_field(p));
    CHECK_THROWS(read_field(temp_path("missing.json")));
}

TEST_CASE("check reports serialize and parse back") {
    CheckReport r;
    r.name = "x";
    r.lhs = 1.0;
    r.rhs = 2.0;
    r.tolerance = 0.1;
    r.constants.C = 3.0;
    r.constants.extra["c_impl"] = 0.5;
    r.seed = 9;
    r.notes = {"a", "b"};
    r.measured["k"] = 4.0;
    r.finalize();
    const json j = to_json(r);
    CHECK(j.at("margin").get<double>() == 1.0);
    const CheckReport back = check_report_from_json(j);
    CHECK(back.name == "x");
    CHECK(back.pass);
    CHECK(back.constants.C == 3.0);
    CHECK(back.constants.extra.at("c_impl") == 0.5);
    CHECK(*back.seed == 9);
    CHECK(back.notes == r.notes);
    CHECK(back.measured.at("k") == 4.0);
}

TEST_CASE("report pass rule") {
    CheckReport r;
    r.lhs = 1.05;
    r.rhs = 1.0;
    r.tolerance = 0.1;
    CHECK(r.finalize().pass);
    r.tolerance = 0.01;
    CHECK_FALSE(r.finalize().pass);
    r.tolerance = 1.0;
    r.finalize().fail("forced");
    CHECK_FALSE(r.pass);
}

TEST_CASE("estimate constants validation") {
    EstimateConstants c;
    c.theta = 0.5;
    c.alpha = 1.0;
    CHECK_NOTHROW(c.validate());
    c.theta = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("CSV helpers") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(std::stod(fmt_double(0.1)) == 0.1);
    CHECK(std::stod(fmt_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("covering CSV for the half interval matches the hand enumeration") {
    const Region E = Region::halfspace({-1.0, 0.0, 0.0}, 0.0).intersect(Region::cube(test::kO, 1.0, true));
    std::ostringstream os;
    write_covering_csv(os, dyadic_decomposition(1, E, 3));
    CHECK(os.str() == "gen,cx,side\r\n4,0.09375,0.0625\r\n3,0.1875,0.125\r\n2,0.375,0.25\r\n");
}

TEST_CASE("contact CSV for the zero field lists centres as points") {
    const Grid g = Grid::cube(2, 1.0 / 16.0, 1.0);
    const ParaboloidFamily fam{1.0, ParaboloidSign::Concave, Region::ball(test::kO, 0.25, true), 0.0};
    std::ostringstream os;
    write_contact_csv(os, contact_set(ScalarField::constant(g, 0.0), fam));
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "x,y,center_x,center_y\r");
    int rows = 0;
    while (std::getline(is, line)) {
        double v[4];
        CHECK(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3]) == 4);
        CHECK(v[0] == v[2]);
        CHECK(v[1] == v[3]);
        ++rows;
    }
    CHECK(rows == static_cast<int>(Region::ball(test::kO, 0.25, true).count(g)));
}

TEST_CASE("decay CSV slope matches the fitted exponent") {
    const Grid g = Grid::cube(2, 1.0 / 128.0, 1.0);
    const DecayProfile prof =
        oscillation_profile(field_library("abs_power", g, {{"alpha", 0.5}}), test::kO, 0.5, 0.5, 5);
    std::ostringstream os;
    write_decay_csv(os, prof);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "r,osc,bound,log_r,log_osc\r");
    std::vector<std::pair<double, double>> pts;
    while (std::getline(is, line)) {
        double r, o, b, lr, lo;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &r, &o, &b, &lr, &lo) == 5);
        pts.emplace_back(lr, lo);
    }
    const double slope = (pts.back().second - pts.front().second) / (pts.back().first - pts.front().first);
    CHECK(slope == doctest::Approx(fit_holder_exponent(prof).alpha_hat).epsilon(1e-9));
}

TEST_CASE("distribution CSV") {
    std::ostringstream os;
    write_distribution_csv(os, {{0.5, 1.0}, {1.0, 0.25}});
    CHECK(os.str() == "mu,measure\r\n0.5,1\r\n1,0.25\r\n");
}

}  // TEST_SUITE
