#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "thinobs/cli.hpp"
#include "thinobs/field.hpp"
#include "thinobs/frequency.hpp"

using namespace thinobs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome cli(const std::vector<std::string>& args)
{
    std::vector<const char*> argv{"thinobs"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch()
{
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "thinobs-test-cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string at(const std::string& name) { return (scratch() / name).string(); }

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// data rows of a CSV with '#' header lines and one column-name line
std::vector<std::vector<std::string>> rows_of(const std::string& text, std::string* columns = nullptr)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    bool named = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (!named) {
            named = true;
            if (columns) {
                *columns = line;
            }
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("solve writes a field with a header block")
{
    const auto r = cli({"solve", "--dim", "2", "--n", "256", "--s", "0.5", "--bc", "profile:regular:m=1", "--out",
                        at("u.fbx1"), "--report", at("solve.json")});
    REQUIRE(r.code == kExitOk);
    const ScalarField u = load_field(at("u.fbx1"));
    CHECK(u.spec().n == 256);
    CHECK(u.spec().dim == 2);
    const auto report = nlohmann::json::parse(slurp(at("solve.json")));
    CHECK(report.contains("config"));
    CHECK(report["results"].is_array());
    CHECK(report.contains("timing"));
    CHECK(report["results"][0]["converged"] == true);
    CHECK(report["results"][0]["min_plane_value"].get<double>() >= 0.0);
    const auto comments = load_field_comments(at("u.fbx1"));
    REQUIRE(comments.size() == 3);
    CHECK(comments[0] == std::string("thinobs ") + THINOBS_VERSION);
    CHECK(comments[2] == "config " + report["config"]["hash"].get<std::string>());
}

TEST_CASE("frequency below the reliable radius is a validation error")
{
    REQUIRE(cli({"solve", "--n", "64", "--bc", "profile:regular:m=1", "--out", at("coarse.fbx1")}).code == kExitOk);
    const auto r = cli({"frequency", "--in", at("coarse.fbx1"), "--center", "0,0", "--r", "0.05"});
    CHECK(r.code == kExitInvalid);
    CHECK(r.err.find("radius below reliable minimum") != std::string::npos);
    CHECK(cli({"frequency", "--in", at("coarse.fbx1"), "--center", "0,0,0", "--r", "0.5"}).code == kExitInvalid);
    CHECK(cli({"frequency", "--in", at("coarse.fbx1"), "--center", "0,0"}).code == kExitInvalid);
}

TEST_CASE("frequency CSV of the 3/2 profile")
{
    REQUIRE(cli({"solve", "--n", "128", "--bc", "profile:regular:m=1", "--out", at("p128.fbx1")}).code == kExitOk);
    const auto r = cli({"frequency", "--in", at("p128.fbx1"), "--center", "0,0", "--r", "0.25,0.5"});
    REQUIRE(r.code == kExitOk);
    std::string columns;
    const auto rows = rows_of(r.out, &columns);
    CHECK(columns == "r,D,H,N,monotonicity_flag");
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(rows[0][0]) == 0.5);
    for (const auto& row : rows) {
        CHECK(std::abs(std::stod(row[3]) - 1.5) < 1e-2);
        // N = r D / H
        CHECK(std::stod(row[3]) == doctest::Approx(std::stod(row[0]) * std::stod(row[1]) / std::stod(row[2])));
        CHECK(row[4] == "0");
    }
}

TEST_CASE("monotonicity flags mark decreasing frequency")
{
    // x1 |x|^2 / (|x|^2 + 0.01) goes from degree 3 to degree 1 as r grows
    const GridSpec g = make_grid(2, 128, 2.0, 0.5);
    const auto u = ScalarField::sample(g, [](std::span<const double> x) {
        const double q = x[0] * x[0] + x[1] * x[1];
        return x[0] * q / (q + 0.01);
    });
    save_field(u, at("bump.fbx1"));
    const auto r = cli({"frequency", "--in", at("bump.fbx1"), "--center", "0,0", "--r-lo", "0.08", "--r-hi", "0.6",
                        "--count", "8", "--tau", "0.001"});
    REQUIRE(r.code == kExitOk);
    const auto rows = rows_of(r.out);
    REQUIRE(rows.size() == 8);
    int flags = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const bool expect = i + 1 < rows.size() && std::stod(rows[i][3]) < std::stod(rows[i + 1][3]) - 0.001;
        CHECK((rows[i][4] == "1") == expect);
        flags += rows[i][4] == "1" ? 1 : 0;
    }
    CHECK(flags == 7);
}

TEST_CASE("exit codes")
{
    CHECK(cli({}).code == kExitInvalid);
    CHECK(cli({"solve", "--n", "64"}).code == kExitInvalid);
    CHECK(cli({"solve", "--n", "12", "--bc", "constant", "--out", at("x.fbx1")}).code == kExitInvalid);
    CHECK(cli({"solve", "--n", "16", "--bc", "nonsense", "--out", at("x.fbx1")}).code == kExitInvalid);
    CHECK(cli({"solve", "--n", "16", "--s", "1.5", "--bc", "constant", "--out", at("x.fbx1")}).code == kExitInvalid);
    CHECK(cli({"frequency", "--in", at("missing.fbx1"), "--center", "0,0", "--r", "0.5"}).code == kExitIo);
    CHECK(cli({"solve", "--n", "16", "--bc", "constant", "--out", at("no/such/dir/x.fbx1")}).code == kExitIo);
    const auto stalled = cli({"solve", "--n", "64", "--bc", "coordinate", "--max-sweeps", "1", "--no-nested", "--out",
                              at("stalled.fbx1")});
    CHECK(stalled.code == kExitNumerical);
    CHECK_FALSE(fs::exists(at("stalled.fbx1")));
    {
        std::ofstream bad(at("bad.fbx1"), std::ios::binary);
        bad << "FBX1\ndim 2\nn 8\nside_length 2\ns 0.5\norigin -1 -1\n" << std::string(16, '\0');
    }
    const auto truncated = cli({"report", "--in", at("bad.fbx1")});
    CHECK(truncated.code == kExitIo);
    CHECK(cli({"check", "--suite", "everything"}).code == kExitInvalid);
    CHECK(cli({"report", "--make-fixture", "nothing", "--out", at("n.csv")}).code == kExitInvalid);
    CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("reruns are byte identical")
{
    const std::vector<std::string> solve = {"solve", "--n", "64", "--bc", "instance:regular", "--out", at("d.fbx1"),
                                            "--csv", at("d.csv")};
    REQUIRE(cli(solve).code == kExitOk);
    const std::string field = slurp(at("d.fbx1"));
    const std::string table = slurp(at("d.csv"));
    REQUIRE(cli(solve).code == kExitOk);
    CHECK(slurp(at("d.fbx1")) == field);
    CHECK(slurp(at("d.csv")) == table);
    const std::vector<std::string> classify = {"classify", "--in", at("d.fbx1"), "--out", at("k.csv")};
    REQUIRE(cli(classify).code == kExitOk);
    const std::string labels = slurp(at("k.csv"));
    REQUIRE(cli(classify).code == kExitOk);
    CHECK(slurp(at("k.csv")) == labels);
    for (const auto& entry : fs::directory_iterator(scratch())) {
        CHECK(entry.path().extension() != ".tmp");
    }
}

TEST_CASE("config file supplies defaults and flags win")
{
    {
        std::ofstream cfg(at("run.toml"));
        cfg << "[solve]\nn = 32\nbc = \"constant:c=2\"\nout = \"" << at("cfg.fbx1") << "\"\n";
    }
    REQUIRE(cli({"--config", at("run.toml"), "solve"}).code == kExitOk);
    const ScalarField a = load_field(at("cfg.fbx1"));
    CHECK(a.spec().n == 32);
    CHECK(a.values()[0] == 2.0);
    REQUIRE(cli({"--config", at("run.toml"), "solve", "--n", "16"}).code == kExitOk);
    CHECK(load_field(at("cfg.fbx1")).spec().n == 16);
}

TEST_CASE("boundary data from a file reproduces the solve")
{
    REQUIRE(cli({"solve", "--n", "64", "--bc", "instance:regular", "--out", at("src.fbx1")}).code == kExitOk);
    REQUIRE(cli({"solve", "--n", "64", "--bc", "file:" + at("src.fbx1"), "--out", at("copy.fbx1")}).code == kExitOk);
    const ScalarField a = load_field(at("src.fbx1"));
    const ScalarField b = load_field(at("copy.fbx1"));
    double diff = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) {
        diff = std::max(diff, std::abs(a.values()[k] - b.values()[k]));
    }
    CHECK(diff < 1e-12);
}

TEST_CASE("classify labels the regular point")
{
    REQUIRE(cli({"solve", "--n", "128", "--bc", "instance:regular", "--out", at("reg.fbx1")}).code == kExitOk);
    const auto r = cli({"classify", "--in", at("reg.fbx1")});
    REQUIRE(r.code == kExitOk);
    std::string columns;
    const auto rows = rows_of(r.out, &columns);
    CHECK(columns == "x1,x2,status,lambda_hat,intercept,lambda,class,m,residual,t1,t2,anisotropy");
    REQUIRE(rows.size() == 1);
    CHECK(std::abs(std::stod(rows[0][0])) < 1e-12);
    CHECK(rows[0][2] == "snapped");
    CHECK(std::stod(rows[0][5]) == 1.5);
    CHECK(rows[0][7] == "1");
    CHECK(std::stod(rows[0][8]) < 0.1);
}

TEST_CASE("profiles table at s = 1/2")
{
    const auto r = cli({"profiles", "--s", "0.5", "--hi", "3.2", "--phi", at("phi.csv"), "--samples", "5"});
    REQUIRE(r.code == kExitOk);
    const auto rows = rows_of(r.out);
    REQUIRE(rows.size() == 3);
    const double expect[] = {1.5, 2.0, 3.0};
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(std::stod(rows[i][0]) - expect[i]) < 1e-6);
        CHECK(std::stod(rows[i][6]) < 1e-6);
    }
    const auto phi = rows_of(slurp(at("phi.csv")));
    REQUIRE(phi.size() == 5);
    CHECK(phi[0].size() == 4);
    // -sin 3 theta at theta = pi/2 is 1
    CHECK(std::stod(phi[2][3]) == doctest::Approx(1.0));

    REQUIRE(cli({"profiles", "--hi", "1.6", "--field", at("prof.fbx1"), "--class", "fullcontact", "--n", "32"}).code ==
            kExitOk);
    const ScalarField f = load_field(at("prof.fbx1"));
    const double x[2] = {0.0, 0.5};
    CHECK(interpolate(f, x) == doctest::Approx(0.125));
}

TEST_CASE("blowup report")
{
    REQUIRE(cli({"solve", "--n", "128", "--bc", "profile:fullcontact:m=1", "--out", at("fc.fbx1")}).code == kExitOk);
    const auto r = cli({"blowup", "--in", at("fc.fbx1"), "--center", "0,0", "--r0", "0.5", "--levels", "2",
                        "--ref-profile", "fullcontact:m=1", "--csv", at("b.csv"), "--report", at("b.json")});
    REQUIRE(r.code == kExitOk);
    const auto report = nlohmann::json::parse(slurp(at("b.json")));
    const auto& res = report["results"][0];
    CHECK(res["radii"].size() == 3);
    CHECK(res["pairwise_dist"].size() == 2);
    CHECK(res["cauchy_defect"].get<double>() < 1e-2);
    for (const auto& p : res["ref_products"]) {
        CHECK(p.get<double>() == doctest::Approx(1.0).epsilon(1e-3));
    }
    std::string columns;
    CHECK(rows_of(slurp(at("b.csv")), &columns).size() == 3);
    CHECK(columns == "level,r,distance_to_previous,ref_product");
    CHECK(cli({"blowup", "--in", at("fc.fbx1"), "--center", "0,0", "--r0", "0.05", "--levels", "3"}).code ==
          kExitInvalid);
}

TEST_CASE("fixtures are deterministic in the seed")
{
    const std::vector<std::string> line = {"report", "--make-fixture", "jittered-line", "--count", "50", "--seed", "7",
                                           "--out", at("line.csv")};
    REQUIRE(cli(line).code == kExitOk);
    const std::string first = slurp(at("line.csv"));
    REQUIRE(cli(line).code == kExitOk);
    CHECK(slurp(at("line.csv")) == first);
    CHECK(rows_of(first).size() == 50);
    REQUIRE(cli({"report", "--make-fixture", "isotropic-cloud", "--count", "30", "--out", at("cloud.csv")}).code ==
            kExitOk);
    for (const auto& row : rows_of(slurp(at("cloud.csv")))) {
        CHECK(std::hypot(std::stod(row[0]), std::stod(row[1])) <= 0.5);
    }
    REQUIRE(cli({"report", "--make-fixture", "band-mixed", "--n", "64", "--out", at("mixed.fbx1")}).code == kExitOk);
    CHECK(load_field(at("mixed.fbx1")).spec().n == 64);
}

TEST_CASE("check suite report")
{
    const auto r = cli({"check", "--suite", "profiles", "--report", at("check.json")});
    const auto report = nlohmann::json::parse(slurp(at("check.json")));
    CHECK(report["config"]["params"]["suite"] == "profiles");
    bool all = true;
    std::vector<int> ids;
    for (const auto& c : report["results"]) {
        ids.push_back(c["criterion"].get<int>());
        bool every = true;
        for (const auto& k : c["checks"]) {
            CHECK(k.contains("name"));
            CHECK(k.contains("value"));
            CHECK(k.contains("tolerance"));
            every = every && k["pass"].get<bool>();
        }
        CHECK(c["pass"].get<bool>() == every);
        all = all && every;
    }
    CHECK(ids == std::vector<int>{5, 6, 10});
    CHECK(r.code == (all ? kExitOk : kExitChecksFailed));
    CHECK(r.out.find("criterion  5") != std::string::npos);
}
