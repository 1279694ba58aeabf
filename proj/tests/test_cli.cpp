#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kahan/cli.hpp"
#include "kahan/experiments.hpp"

using namespace kahan;
using nlohmann::json;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "kahan-geom");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = cli::run_main(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    TempDir() : path(std::filesystem::temp_directory_path() / "kahan_cli_test") {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("parse_method") {
    CHECK(cli::parse_method("kahan", 0.0).kind == MethodKind::Kahan);
    CHECK(cli::parse_method("simpson", 0.0).family_parameter() == 1.0 / 6.0);
    CHECK(cli::parse_method("family:0.25", 0.0).family_parameter() == 0.25);
    CHECK(cli::parse_method("family", 0.1).family_parameter() == 0.1);
    CHECK(cli::parse_method("suzuki", 0.0).kind == MethodKind::SuzukiKahan);
    CHECK_THROWS_AS(cli::parse_method("rk4", 0.0), std::invalid_argument);
    CHECK(cli::parse_list("-0.5,0,0.25") == std::vector<double>{-0.5, 0.0, 0.25});
    CHECK_THROWS_AS(cli::parse_list("1,x"), std::invalid_argument);
}

TEST_CASE("verify is deterministic and passes on henon_heiles") {
    const auto a = run({"verify", "--system", "henon_heiles", "--h", "0.3333", "--seed", "1"});
    REQUIRE(a.code == cli::kOk);
    const auto b = run({"verify", "--system", "henon_heiles", "--h", "0.3333", "--seed", "1"});
    CHECK(a.out == b.out);
    const json j = json::parse(a.out);
    CHECK(j.at("pass").get<bool>());
    CHECK(j.at("system") == "henon_heiles");
    std::vector<std::string> names;
    for (const auto& c : j.at("checks")) names.push_back(c.at("name"));
    CHECK(names == std::vector<std::string>{"equivalence", "symmetry", "order", "conservation_htilde",
                                            "conservation_casimir", "evenness", "measure", "degree_bounds"});
}

TEST_CASE("verify passes on the other bounded catalog systems") {
    for (const char* name : {"nonsym", "volterra", "dressing"}) {
        INFO(name);
        const auto r = run({"verify", "--system", name, "--h", "0.1", "--seed", "7"});
        CHECK(r.code == cli::kOk);
        CHECK(json::parse(r.out).at("pass").get<bool>());
    }
}

TEST_CASE("levelset htilde masks a circle of radius about 1.58") {
    const auto r = run({"levelset", "--system", "henon_heiles", "--quantity", "htilde", "--h", "0.6667", "--bbox", "-2",
                        "2", "-2", "2", "--res", "400"});
    REQUIRE(r.code == cli::kOk);
    const auto rows = read_csv(r.out);
    REQUIRE(rows.size() == 400u * 400u + 1u);
    CHECK(rows[0] == std::vector<std::string>{"x", "y", "value", "mask"});
    const double radius = std::sqrt(0.25 + 1.0 / (0.6667 * 0.6667));
    int masked = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][3] != "1") continue;
        ++masked;
        CHECK(rows[i][2] == "nan");
        CHECK(std::abs(std::hypot(std::stod(rows[i][0]), std::stod(rows[i][1])) - radius) <= 4.0 / 399);
    }
    CHECK(masked > 500);
    CHECK(std::round(radius * 100) == 158);
}

TEST_CASE("levelset accepts a 2n-float bbox slice") {
    const auto r = run({"levelset", "--system", "volterra", "--quantity", "h", "--h", "0.1", "--bbox", "-1", "1", "0.5",
                        "0.5", "-1", "1", "--res", "3"});
    REQUIRE(r.code == cli::kOk);
    const auto rows = read_csv(r.out);
    REQUIRE(rows.size() == 10u);
    CHECK(std::stod(rows[1][2]) == Catch::Approx(0.5));  // x1 = -1, x2 = 0.5, x3 = -1
    const auto bad = run({"levelset", "--system", "volterra", "--h", "0.1", "--bbox", "-1", "1", "-1", "1", "-1", "1"});
    CHECK(bad.code == cli::kValidation);
    const auto odd = run({"levelset", "--system", "henon_heiles", "--h", "0.1", "--bbox", "-1", "1", "-1", "1", "0"});
    CHECK(odd.code == cli::kValidation);
}

TEST_CASE("integrate: Simpson keeps H on nonsym") {
    TempDir dir;
    const auto csv = dir.path / "traj.csv";
    const auto r = run({"integrate", "--system", "nonsym", "--method", "simpson", "--h", "0.3", "--steps", "1000",
                        "--out", csv.string()});
    REQUIRE(r.code == cli::kOk);
    const json report = json::parse(r.out);
    CHECK(report.at("steps_completed") == 1000);
    CHECK(report.at("truncation") == "none");
    CHECK(json::parse(slurp(dir.path / "traj.csv.report.json")) == report);
    const auto rows = read_csv(slurp(csv));
    REQUIRE(rows.size() == 1002u);
    CHECK(rows[0][0] == "step");
    CHECK(rows[0][4] == "H");
    const double h0 = std::stod(rows[1][4]);
    double worst = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) worst = std::max(worst, std::abs(std::stod(rows[i][4]) - h0));
    CHECK(worst <= 1e-12);
}

TEST_CASE("integrate writes CSV to stdout without --out") {
    const auto r = run({"integrate", "--system", "henon_heiles", "--h", "0.1", "--steps", "4", "--method", "kahan",
                        "--x0", "0.2,0.1"});
    REQUIRE(r.code == cli::kOk);
    const auto rows = read_csv(r.out);
    REQUIRE(rows.size() == 6u);
    CHECK(rows[1][2] == "0.20000000000000001");
}

TEST_CASE("catalog --dump round-trips to identical trajectories") {
    TempDir dir;
    const auto spec = dir.path / "hh.json";
    REQUIRE(run({"catalog", "--system", "henon_heiles", "--dump", "--out", spec.string()}).code == cli::kOk);
    const auto a = run({"integrate", "--system", "henon_heiles", "--h", "0.3333", "--steps", "500", "--x0", "0.1,0.1"});
    const auto b = run({"integrate", "--file", spec.string(), "--h", "0.3333", "--steps", "500", "--x0", "0.1,0.1"});
    REQUIRE(a.code == cli::kOk);
    REQUIRE(b.code == cli::kOk);
    CHECK(a.out == b.out);
    const json listing = json::parse(run({"catalog"}).out);
    CHECK(listing.size() == catalog().size());
}

TEST_CASE("drift, portrait and singular subcommands") {
    const auto d = run({"drift", "--system", "nonsym", "--h", "0.2", "--steps", "1000", "--a", "-0.5,0"});
    REQUIRE(d.code == cli::kOk);
    const auto rows = read_csv(d.out);
    REQUIRE(rows.size() == 3u);
    CHECK(rows[0] == std::vector<std::string>{"a", "slope", "flag"});
    CHECK(std::abs(std::stod(rows[1][1])) <= 1e-13);
    CHECK(rows[2][2] == "ok");

    const auto p = run({"portrait", "--system", "henon_heiles", "--h", "0.3333", "--steps", "10", "--stride", "5"});
    REQUIRE(p.code == cli::kOk);
    CHECK(read_csv(p.out).size() == 1u + 5u * 3u);

    const auto s = run({"singular", "--system", "henon_heiles", "--h", "0.6667", "--bbox", "-2", "2", "-2", "2", "--res",
                        "100"});
    REQUIRE(s.code == cli::kOk);
    const auto pts = read_csv(s.out);
    REQUIRE(pts.size() > 1u);
    for (std::size_t i = 1; i < pts.size(); ++i)
        CHECK(std::abs(std::hypot(std::stod(pts[i][0]), std::stod(pts[i][1])) - 1.581) <= 0.01);
}

TEST_CASE("exit codes") {
    CHECK(run({"integrate", "--system", "nosuch", "--h", "0.1"}).code == cli::kValidation);
    CHECK(run({"integrate", "--system", "nonsym"}).code == cli::kValidation);
    CHECK(run({"integrate", "--system", "nonsym", "--h", "0.1", "--bogus"}).code == cli::kValidation);
    CHECK(run({"integrate", "--system", "nonsym", "--h", "0.1", "--method", "rk4"}).code == cli::kValidation);
    CHECK(run({"integrate", "--system", "nonsym", "--h", "0.1", "--x0", "1,2,3"}).code == cli::kValidation);
    CHECK(run({"integrate", "--system", "nonsym", "--h", "0.1", "--steps", "-1"}).code == cli::kValidation);
    CHECK(run({}).code == cli::kValidation);
    CHECK(run({"--help"}).code == cli::kOk);
    CHECK(run({"integrate", "--system", "nonsym", "--h", "0.1", "--out", "/nonexistent/dir/x.csv"}).code == cli::kIo);
    CHECK(run({"integrate", "--file", "/nonexistent/spec.json", "--h", "0.1"}).code == cli::kIo);

    TempDir dir;
    const auto bad = dir.path / "bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK(run({"integrate", "--file", bad.string(), "--h", "0.1"}).code == cli::kValidation);
    const auto wrong = dir.path / "wrong.json";
    std::ofstream(wrong) << R"({"n": 2, "poisson": [[0, 1], [1, 0]]})";
    CHECK(run({"integrate", "--file", wrong.string(), "--h", "0.1"}).code == cli::kValidation);
}

TEST_CASE("the installed binary behaves like run_main") {
    const std::string bin = KAHAN_GEOM_BINARY;
    TempDir dir;
    const auto out = dir.path / "verify.json";
    const std::string cmd =
        bin + " verify --system henon_heiles --h 0.3333 --seed 1 > " + out.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(slurp(out) == run({"verify", "--system", "henon_heiles", "--h", "0.3333", "--seed", "1"}).out);
    const int bad = std::system((bin + " integrate --system nosuch --h 0.1 >/dev/null 2>&1").c_str());
    REQUIRE(WIFEXITED(bad));
    CHECK(WEXITSTATUS(bad) == 2);
}
