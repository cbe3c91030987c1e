#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "kslab/io.hpp"
#include "kslab/suites.hpp"

using namespace kslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "kslab_unit_cli";
    fs::create_directories(dir);
    return dir / name;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + KSLAB_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json load(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

json without_timestamp(json j) {
    j.erase("timestamp");
    return j;
}

}  // namespace

TEST_SUITE("suites") {

TEST_CASE("registry") {
    const auto& names = suite_names();
    CHECK(names.back() == "full");
    for (const char* s : {"laplacian-core", "uniformly-elliptic-core", "contact-geometry", "coverings", "fractional",
                          "probabilistic", "hessian-estimates"})
        CHECK(std::find(names.begin(), names.end(), s) != names.end());
}

TEST_CASE("suite spec validation") {
    SuiteSpec s;
    s.name = "nope";
    CHECK_THROWS_AS(run_suite(s), std::invalid_argument);
    s.name = "fractional";
    s.dim = 4;
    CHECK_THROWS_AS(run_suite(s), std::invalid_argument);
    s.dim = 2;
    s.params["bogus"] = "1";
    CHECK_THROWS_AS(run_suite(s), std::invalid_argument);
    s.params = {{"tolerance", "abc"}};
    CHECK_THROWS_AS(run_suite(s), std::invalid_argument);
    s.params.clear();
    s.h = 0.5;
    CHECK_THROWS_AS(run_suite(s), std::invalid_argument);
}

TEST_CASE("fractional suite passes and serializes") {
    SuiteSpec s;
    s.name = "fractional";
    const ReportDocument doc = run_suite(s);
    CHECK(doc.all_pass());
    CHECK(doc.passed() == doc.checks.size());
    const json j = to_json(doc);
    CHECK(j.begin().key() == "timestamp");
    CHECK(j.at("suite") == "fractional");
    CHECK(j.at("checks").size() == doc.checks.size());
    for (const auto& c : j.at("checks")) CHECK_NOTHROW(check_report_from_json(c));
}

TEST_CASE("coverings suite is deterministic for a fixed seed") {
    SuiteSpec s;
    s.name = "coverings";
    s.params = {{"regions", "10"}, {"depth", "6"}};
    s.seed = 5;
    const json a = without_timestamp(to_json(run_suite(s)));
    const json b = without_timestamp(to_json(run_suite(s)));
    CHECK(a == b);
}

TEST_CASE("a zero tolerance override turns approximate checks into failures") {
    SuiteSpec s;
    s.name = "laplacian-core";
    s.h = 1.0 / 32.0;
    CHECK(run_suite(s).all_pass());
    s.params = {{"tolerance", "0"}};
    CHECK_FALSE(run_suite(s).all_pass());
}

TEST_CASE("merged reports collect every check") {
    SuiteSpec s;
    s.name = "fractional";
    const json a = to_json(run_suite(s));
    const json merged = merge_reports({a, a});
    CHECK(merged.at("checks").size() == 2 * a.at("checks").size());
    json broken = a;
    broken["checks"][0].erase("lhs");
    CHECK_THROWS(merge_reports({a, broken}));
}

TEST_CASE("random regions are well formed") {
    std::mt19937_64 rng(3);
    for (int n : {1, 2, 3})
        for (int t = 0; t < 20; ++t) CHECK_FALSE(random_region(n, rng).describe().empty());
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("verify exit codes") {
    const fs::path out = scratch("frac.json");
    CHECK(run_cli("verify fractional --out " + out.string()) == 0);
    CHECK(load(out).at("suite") == "fractional");
    CHECK(run_cli("verify laplacian-core --h 1/32 --suite-param tolerance=0 --out " + scratch("lap.json").string()) == 1);
    CHECK(run_cli("verify no-such-suite") == 2);
    CHECK(run_cli("verify fractional --dim 7") == 2);
    CHECK(run_cli("verify fractional --suite-param nonsense=1") == 2);
    CHECK(run_cli("") == 2);
}

TEST_CASE("verify output is deterministic apart from the timestamp") {
    const fs::path a = scratch("cov_a.json"), b = scratch("cov_b.json");
    const std::string args = "verify coverings --seed 9 --suite-param regions=5 --out ";
    run_cli(args + a.string());
    run_cli(args + b.string());
    CHECK(without_timestamp(load(a)) == without_timestamp(load(b)));
}

TEST_CASE("directory output names the report after the suite") {
    const fs::path dir = scratch("reports");
    fs::create_directories(dir);
    CHECK(run_cli("verify fractional --out " + dir.string() + "/") == 0);
    CHECK(fs::exists(dir / "fractional.report.json"));
}

TEST_CASE("generate writes fields with provenance") {
    const fs::path p = scratch("saddle.json");
    CHECK(run_cli("generate harmonic_saddle --h 1/16 --out " + p.string()) == 0);
    const FieldFile f = read_field(p);
    CHECK(f.field.grid().size() == 33u * 33u);
    const fs::path q = scratch("poisson.json");
    CHECK(run_cli("generate poisson --h 1/16 --f 0 --g harmonic_saddle --out " + q.string()) == 0);
    CHECK(read_field(q).provenance.at("solver") == "poisson");
    CHECK(run_cli("generate no_such_family --out " + scratch("x.json").string()) == 2);
    CHECK(run_cli("generate poisson --f missing_file.json --out " + scratch("y.json").string()) == 2);
}

TEST_CASE("plot-data and report merge") {
    const fs::path csv = scratch("cover.csv");
    CHECK(run_cli("plot-data covering --dim 1 --region \"halfspace(-1;0)\" --depth 3 --out " + csv.string()) == 0);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "gen,cx,side\r");
    const fs::path a = scratch("m1.json"), m = scratch("merged.json");
    run_cli("verify fractional --out " + a.string());
    CHECK(run_cli("report merge " + a.string() + " " + a.string() + " --out " + m.string()) == 0);
    CHECK(load(m).at("checks").size() == 2 * load(a).at("checks").size());
    CHECK(run_cli("report merge " + scratch("absent.json").string() + " --out " + m.string()) == 2);
}

}  // TEST_SUITE
