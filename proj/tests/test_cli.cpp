#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sqm/cli.hpp"
#include "sqm/spectral.hpp"

using namespace sqm;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "sqm");
    std::ostringstream out, err;
    const int code = cli::main_entry(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "sqm_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("parse a kernel request") {
    std::ostringstream out, err;
    const auto parsed = cli::parse({"sqm", "kernel", "--model", "oscillator", "--x0", "1", "--tau", "0.7", "--grid",
                                    "-6:6:241", "--terms", "60", "--out", "k.csv"},
                                   out, err);
    REQUIRE(parsed.request);
    const auto& r = *parsed.request;
    CHECK(r.subcommand == cli::Subcommand::kernel);
    CHECK(r.model == cli::Model::oscillator);
    CHECK(r.x0 == 1.0);
    CHECK(r.tau == 0.7);
    CHECK(r.grid.min == -6.0);
    CHECK(r.grid.max == 6.0);
    CHECK(r.grid.nodes == 241);
    CHECK(r.terms == 60);
    CHECK(r.out == std::optional<std::string>("k.csv"));
    CHECK(err.str().empty());
}

TEST_CASE("usage errors name the flag") {
    const Outcome tau = invoke({"kernel", "--tau", "-1"});
    CHECK(tau.code == cli::kExitUsage);
    CHECK(tau.err.find("--tau") != std::string::npos);
    const Outcome paths = invoke({"simulate", "--paths", "0"});
    CHECK(paths.code == cli::kExitUsage);
    CHECK(paths.err.find("--paths") != std::string::npos);
    const Outcome grid = invoke({"kernel", "--grid", "6:-6:241"});
    CHECK(grid.code == cli::kExitUsage);
    CHECK(grid.err.find("--grid") != std::string::npos);
    const Outcome terms = invoke({"kernel", "--terms", "0"});
    CHECK(terms.err.find("--terms") != std::string::npos);
    CHECK(invoke({"kernel", "--bogus", "1"}).code == cli::kExitUsage);
    CHECK(invoke({"kernel", "--tau", "abc"}).code == cli::kExitUsage);
    CHECK(invoke({"teleport"}).code == cli::kExitUsage);
    CHECK(invoke({}).code == cli::kExitUsage);
    CHECK(invoke({"verify", "--suite", "nope"}).err.find("--suite") != std::string::npos);
    CHECK(invoke({"kernel", "--format", "xml"}).code == cli::kExitUsage);
}

TEST_CASE("help renders usage without computing") {
    const Outcome top = invoke({"--help"});
    CHECK(top.code == cli::kExitOk);
    CHECK(top.out.find("simulate") != std::string::npos);
    const Outcome sub = invoke({"kernel", "--help"});
    CHECK(sub.code == cli::kExitOk);
    CHECK(sub.out.find("--grid") != std::string::npos);
}

TEST_CASE("grid and region syntax") {
    const auto g = cli::parse_grid("-8:8:513");
    CHECK(g.min == -8.0);
    CHECK(g.nodes == 513);
    CHECK_THROWS(cli::parse_grid("-8:8"));
    CHECK_THROWS(cli::parse_grid("-8:8:10"));
    CHECK_THROWS(cli::parse_grid("-8:8:x"));
    CHECK_THROWS(cli::parse_grid("-inf:8:100"));
    const auto r = cli::parse_region("-inf:0");
    CHECK(std::isinf(r.a));
    CHECK(r.a < 0.0);
    CHECK(r.b == 0.0);
    CHECK(std::isinf(cli::parse_region("1:inf").b));
    CHECK_THROWS(cli::parse_region("2:1"));
    CHECK_THROWS(cli::parse_region("1"));
}

TEST_CASE("kernel at tau 20 is the stationary density") {
    const Outcome o = invoke({"kernel", "--x0", "1", "--tau", "20", "--grid", "-6:6:241"});
    REQUIRE(o.code == 0);
    const auto rows = csv_rows(o.out);
    REQUIRE(rows.size() == 242);
    CHECK(rows[0] == std::vector<std::string>{"x", "x0", "tau", "p"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double x = std::stod(rows[i][0]);
        CHECK(std::abs(std::stod(rows[i][3]) - stationary_density(x)) <= 1e-8);
    }
}

TEST_CASE("kernel methods agree and physical units rescale") {
    const Outcome s = invoke({"kernel", "--x0", "0.5", "--tau", "1", "--grid", "-4:4:33", "--method", "series"});
    const Outcome c = invoke({"kernel", "--x0", "0.5", "--tau", "1", "--grid", "-4:4:33", "--method", "closed"});
    const auto rs = csv_rows(s.out), rc = csv_rows(c.out);
    REQUIRE(rs.size() == rc.size());
    for (std::size_t i = 1; i < rs.size(); ++i) CHECK(std::stod(rs[i][3]) == doctest::Approx(std::stod(rc[i][3])).epsilon(1e-10));

    const auto cfg = scratch("physical.cfg");
    std::ofstream(cfg) << "m=1\nk=1\nh=6.283185307179586\nmode=physical\n";
    const Outcome p = invoke({"kernel", "--config", cfg.string(), "--x0", "0.5", "--tau", "1", "--grid", "-4:4:33"});
    REQUIRE(p.code == 0);
    const auto rp = csv_rows(p.out);
    for (std::size_t i = 1; i < rp.size(); ++i) CHECK(std::stod(rp[i][3]) == doctest::Approx(std::stod(rc[i][3])).epsilon(1e-12));

    const auto bad = scratch("bad.cfg");
    std::ofstream(bad) << "mass=1\n";
    const Outcome b = invoke({"kernel", "--config", bad.string(), "--tau", "1"});
    CHECK(b.code == cli::kExitUsage);
    CHECK(b.err.find("mass") != std::string::npos);
}

TEST_CASE("wiener kernel is the heat kernel") {
    const Outcome o = invoke({"kernel", "--model", "wiener", "--x0", "1", "--tau", "2", "--grid", "-4:4:17"});
    REQUIRE(o.code == 0);
    const auto rows = csv_rows(o.out);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::stod(rows[i][3]) == doctest::Approx(heat_kernel(std::stod(rows[i][0]), 1.0, 2.0, 0.5)));
    }
}

TEST_CASE("measure after a re-anchoring") {
    const Outcome o = invoke({"measure", "--x0", "0", "--t0", "0", "--then", "2,1.0", "--predict", "1.2", "--region", "-inf:0"});
    REQUIRE(o.code == 0);
    const auto rows = csv_rows(o.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].back() == "probability");
    CHECK(std::stod(rows[1].back()) < 0.05);

    CHECK(invoke({"measure", "--x0", "0", "--then", "2,1.0", "--then", "1,0.5", "--predict", "2", "--region", "0:1"}).code ==
          cli::kExitUsage);
    CHECK(invoke({"measure", "--x0", "0", "--then", "2,1.0", "--predict", "0.5", "--region", "0:1"}).code == cli::kExitUsage);
    CHECK(invoke({"measure", "--x0", "0", "--predict", "1"}).err.find("--region") != std::string::npos);
}

TEST_CASE("simulate output is determined by the seed") {
    const std::vector<std::string> args{"simulate", "--x0", "1", "--tau", "0.05", "--dt", "0.001", "--seed", "7"};
    const Outcome a = invoke(args);
    const Outcome b = invoke(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto rows = csv_rows(a.out);
    CHECK(rows[0] == std::vector<std::string>{"t", "x"});
    CHECK(rows.size() == 52);
    CHECK(rows[1] == std::vector<std::string>{"0", "1"});

    ::setenv("SQM_SEED", "7", 1);
    const Outcome env = invoke({"simulate", "--x0", "1", "--tau", "0.05", "--dt", "0.001"});
    const Outcome over = invoke({"simulate", "--x0", "1", "--tau", "0.05", "--dt", "0.001", "--seed", "8"});
    ::unsetenv("SQM_SEED");
    CHECK(env.out == a.out);
    CHECK(over.out != a.out);

    const Outcome many = invoke({"simulate", "--tau", "0.01", "--dt", "0.001", "--paths", "3", "--threads", "2"});
    const auto mrows = csv_rows(many.out);
    CHECK(mrows[0] == std::vector<std::string>{"path", "t", "x"});
    CHECK(mrows.size() == 1 + 3 * 11);
    CHECK(mrows.back()[0] == "2");
}

TEST_CASE("backward simulation runs toward earlier times") {
    const Outcome o = invoke({"simulate", "--t0", "1", "--tau", "0.01", "--dt", "0.001", "--direction", "backward"});
    REQUIRE(o.code == 0);
    const auto rows = csv_rows(o.out);
    CHECK(std::stod(rows.back()[0]) == doctest::Approx(0.99));
}

TEST_CASE("json records use the csv field names") {
    const Outcome o = invoke({"simulate", "--tau", "0.002", "--dt", "0.001", "--paths", "2", "--format", "json"});
    REQUIRE(o.code == 0);
    const auto j = nlohmann::json::parse(o.out);
    REQUIRE(j.size() == 6);
    CHECK(j[0].contains("path"));
    CHECK(j[0].contains("t"));
    CHECK(j[0].contains("x"));
    CHECK(j[5]["path"] == 1);
}

TEST_CASE("pde writes snapshots and diagnostics") {
    const auto csv = scratch("pde.csv");
    const auto diag = scratch("pde.json");
    std::filesystem::remove(csv);
    const Outcome o = invoke({"pde", "--x0", "1", "--tau", "0.1", "--grid", "-8:8:513", "--snapshots", "0,0.05", "--out",
                              csv.string(), "--diagnostics", diag.string()});
    REQUIRE(o.code == 0);
    const auto rows = csv_rows(slurp(csv));
    CHECK(rows[0] == std::vector<std::string>{"t", "x", "p"});
    CHECK(rows.size() == 1 + 3 * 513);
    const auto j = nlohmann::json::parse(slurp(diag));
    CHECK(j["scheme"] == "crank-nicolson");
    CHECK(j["steps"] == 100);
    CHECK(j["mass_drift_max"].get<double>() <= 1e-8);
    CHECK(invoke({"pde", "--x0", "7.9", "--tau", "0.1", "--grid", "-8:8:513"}).err.find("--x0") != std::string::npos);
}

TEST_CASE("verify writes a JSON report") {
    const auto path = scratch("report.json");
    const Outcome o = invoke({"verify", "--suite", "nelson", "--seed", "42", "--out", path.string()});
    CHECK(o.code == 0);
    const auto j = nlohmann::json::parse(slurp(path));
    REQUIRE(j.is_array());
    CHECK(j.size() == 4);
    for (const auto& r : j) {
        CHECK(r.contains("check"));
        CHECK(r.contains("metric"));
        CHECK(r.contains("tolerance"));
        CHECK(r["passed"] == true);
        CHECK(r.contains("details"));
    }
}

TEST_CASE("numerical failures exit 2 with a JSON error and no file") {
    const auto path = scratch("blowup.csv");
    std::filesystem::remove(path);
    const Outcome o = invoke({"simulate", "--x0", "1", "--tau", "300", "--dt", "3", "--out", path.string()});
    CHECK(o.code == cli::kExitNumerical);
    const auto j = nlohmann::json::parse(o.err);
    CHECK(j["error"] == "NonFinitePath");
    CHECK(j.contains("message"));
    CHECK_FALSE(std::filesystem::exists(path));
}

TEST_CASE("I/O failures exit 3") {
    const Outcome o = invoke({"kernel", "--tau", "1", "--grid", "-4:4:33", "--out", "/nonexistent_dir/k.csv"});
    CHECK(o.code == cli::kExitIo);
    CHECK(nlohmann::json::parse(o.err)["error"] == "IoError");
}

}
