#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "rmm/cli.hpp"
#include "rmm/io.hpp"
#include "rmm/lending.hpp"
#include "rmm/vault.hpp"

namespace fs = std::filesystem;
using rmm::io::parse_decimal;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome lab(std::vector<std::string> args) {
    args.insert(args.begin(), "rmm_lab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = rmm::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

// "name,value" lines into a map; stops at the first blank line.
std::map<std::string, std::string> fields(const std::string& text) {
    std::map<std::string, std::string> m;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line) && !line.empty()) {
        const auto c = line.find(',');
        m[line.substr(0, c)] = line.substr(c + 1);
    }
    return m;
}

// Table after the first blank line.
rmm::io::CsvTable trailing_table(const std::string& text) {
    const auto at = text.find("\n\n");
    std::istringstream in(text.substr(at + 2));
    return rmm::io::read_csv(in);
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> v;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) v.push_back(line);
    return v;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("rmm_lab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

double D(oracle::real x) { return static_cast<double>(x); }

}  // namespace

TEST_CASE("price") {
    const auto r = lab({"price", "--S", "2000", "--K", "2000", "--sigma", "0.85", "--tau", "0.6667",
                        "--k", "0"});
    REQUIRE(r.code == 0);
    const auto f = fields(r.out);
    const auto o = oracle::black_scholes(2000.0L, 2000.0L, 0.85L, 0.6667L);
    CHECK(std::abs(parse_decimal(f.at("covered_call")) - D(o.covered_call)) < 1e-9);
    CHECK(std::abs(parse_decimal(f.at("lpt_value")) - D(o.covered_call)) < 1e-9);
    CHECK(std::abs(parse_decimal(f.at("put_cash")) - D(o.put)) < 1e-9);
    CHECK(std::abs(parse_decimal(f.at("call_cash")) - D(o.call)) < 1e-9);
    CHECK(std::abs(parse_decimal(f.at("call_risky")) - D(o.call / 2000.0L)) < 1e-12);
    CHECK(std::abs(parse_decimal(f.at("conc")) - D(o.conc)) < 1e-12);
    CHECK(std::abs(parse_decimal(f.at("aonp_cash")) - D(o.aonp)) < 1e-9);
    CHECK(std::abs(parse_decimal(f.at("d1")) - D(o.d1)) < 1e-12);

    const auto lifted = fields(lab({"price", "--S", "2000", "--K", "2000", "--sigma", "0.85",
                                    "--tau", "0.6667", "--k", "5"})
                                   .out);
    CHECK(parse_decimal(lifted.at("lpt_value")) ==
          doctest::Approx(parse_decimal(f.at("covered_call")) + 5.0).epsilon(1e-15));

    const auto t0 = lab({"price", "--tau", "0", "--S", "2500", "--K", "2000"});
    REQUIRE(t0.code == 0);
    CHECK(fields(t0.out).at("covered_call") == "2000");
    CHECK(fields(t0.out).count("d1") == 0);
}

TEST_CASE("exit codes") {
    const auto missing = lab({"price", "--S", "2000", "--sigma", "0.85", "--tau", "1"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("--K") != std::string::npos);
    CHECK(lab({"price", "--S", "abc", "--K", "1", "--tau", "0"}).code == 2);
    CHECK(lab({"price", "--S", "-1", "--K", "1", "--tau", "0"}).code == 2);
    CHECK(lab({}).code == 2);
    CHECK(lab({"bogus"}).code == 2);
    CHECK(lab({"construct", "butterfly", "--K", "1", "--sigma", "1", "--tau", "1"}).code == 2);
    CHECK(lab({"price", "--nope", "1"}).code == 2);
    CHECK(lab({"--help"}).code == 0);
    // runtime failure: output path is a regular file
    const auto dir = scratch("exit");
    std::ofstream(dir / "file") << "x";
    const auto blocked = lab({"price", "--S", "1", "--K", "1", "--tau", "0", "--out",
                              (dir / "file" / "sub").string()});
    CHECK(blocked.code == 1);
}

TEST_CASE("config file, flags win, unknown keys rejected") {
    const auto dir = scratch("config");
    {
        std::ofstream c(dir / "price.json");
        c << R"({"S": 2500, "K": 2000, "sigma": 0.85, "tau": "0"})";
    }
    const auto a = lab({"--config", (dir / "price.json").string(), "price"});
    REQUIRE(a.code == 0);
    CHECK(fields(a.out).at("covered_call") == "2000");
    const auto b = lab({"--config", (dir / "price.json").string(), "price", "--S", "1500"});
    REQUIRE(b.code == 0);
    CHECK(fields(b.out).at("covered_call") == "1500");

    {
        std::ofstream c(dir / "bad.json");
        c << R"({"S": 1, "K": 1, "tau": 0, "colour": "red"})";
    }
    const auto bad = lab({"--config", (dir / "bad.json").string(), "price"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("colour") != std::string::npos);
    CHECK(lab({"--config", (dir / "nope.json").string(), "price"}).code == 2);
}

TEST_CASE("construct future and straddle") {
    const std::vector<std::string> pool{"--K", "2000", "--sigma", "0.85", "--tau", "0.6667",
                                        "--S", "2100"};
    auto args = std::vector<std::string>{"construct", "future"};
    args.insert(args.end(), pool.begin(), pool.end());
    const auto fut = lab(args);
    REQUIRE(fut.code == 0);
    CHECK(std::abs(parse_decimal(fields(fut.out).at("net_cost_risky")) - 1.0) < 1e-12);

    args = {"construct", "straddle", "--x", "10", "--grid-points", "21"};
    args.insert(args.end(), pool.begin(), pool.end());
    const auto st = lab(args);
    REQUIRE(st.code == 0);
    const auto f = fields(st.out);
    const double S = parse_decimal(f.at("spot"));
    const auto o = oracle::black_scholes(S, 2000.0L, 0.85L, 0.6667L);
    const double v = D(o.covered_call);
    const double m = 10.0 / (1.0 - v / S + (2000.0 - v) / S);
    CHECK(std::abs(parse_decimal(f.at("m_call")) - m) < 1e-8 * m);
    CHECK(parse_decimal(f.at("m_put")) == parse_decimal(f.at("m_call")));

    const auto table = trailing_table(st.out);
    REQUIRE(table.rows.size() == 21);
    // V-shaped, minimum at K = 2000 (row 10 of the default grid 1000..3000)
    CHECK(table.rows[10][0] == 2000.0);
    CHECK(table.rows[10][1] == doctest::Approx(0.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 10; ++i) CHECK(table.rows[i][1] > table.rows[i + 1][1]);
    for (std::size_t i = 10; i < 20; ++i) CHECK(table.rows[i][1] < table.rows[i + 1][1]);
    CHECK(table.rows[20][1] == doctest::Approx(m * 1000.0));

    args = {"construct", "straddle"};
    args.insert(args.end(), pool.begin(), pool.end());
    CHECK(lab(args).code == 2);
}

TEST_CASE("construct long-call payoff grid") {
    const auto dir = scratch("construct");
    const auto r = lab({"construct", "long-call", "--K", "2000", "--sigma", "0.85", "--tau", "0.6667",
                        "--grid-lo", "500", "--grid-hi", "4000", "--grid-points", "36", "--out",
                        dir.string()});
    REQUIRE(r.code == 0);
    const auto f = fields(r.out);
    CHECK(f.at("side") == "long-call");
    CHECK(f.at("collateral_denomination") == "risky");
    const auto table = trailing_table(r.out);
    REQUIRE(table.rows.size() == 36);
    for (const auto& row : table.rows) {
        const double st = row[0];
        CHECK(std::abs(row[1] - std::max(st - 2000.0, 0.0) / st) < 1e-12);
    }
    CHECK(fs::exists(dir / "construct_long-call.csv"));
    std::ifstream ledger(dir / "construct_long-call.jsonl");
    std::string line;
    REQUIRE(std::getline(ledger, line));
    CHECK(line.find("\"side\"") != std::string::npos);

    for (const char* name : {"long-put", "split-binaries", "short-binary"}) {
        CHECK(lab({"construct", name, "--K", "2000", "--sigma", "0.85", "--tau", "0.6667"}).code == 0);
    }
}

TEST_CASE("hedge-surface") {
    const auto dir = scratch("surface");
    const auto r = lab({"hedge-surface", "--out", dir.string(), "--points", "100"});
    REQUIRE(r.code == 0);
    for (const char* name : {"alpha_curve.csv", "alpha_surface.csv", "alpha_requirements.csv",
                             "beta_curve.csv", "beta_surface.csv", "beta_requirements.csv"}) {
        CHECK(fs::exists(dir / name));
    }

    std::ifstream in(dir / "alpha_curve.csv");
    const auto curve = rmm::io::read_csv(in);
    CHECK(curve.header == std::vector<std::string>{"price", "strike", "quantity_ratio"});
    REQUIRE(curve.rows.size() == 100);
    for (std::size_t i = 1; i < curve.rows.size(); ++i) {
        CHECK(curve.rows[i][2] <= curve.rows[i - 1][2]);
    }
    CHECK(curve.rows.front()[2] > 0.99);
    // alpha vanishes as P reaches P0 from below
    CHECK(curve.rows.back()[2] == 0.0);
    CHECK(curve.rows[98][2] > 0.0);
    CHECK(curve.rows[98][2] < 0.1);

    // bitwise equal to the in-memory surface
    auto grid = rmm::lending::default_grid(rmm::lending::HedgeKind::Put, 1.0,
                                           {0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3}, 0.85, 8.0 / 12.0);
    grid.price_points = 100;
    const auto mem = rmm::lending::strike_adjusted_requirement(rmm::lending::HedgeKind::Put, grid);
    std::ifstream sin(dir / "alpha_surface.csv");
    const auto disk = rmm::io::read_csv(sin);
    REQUIRE(disk.rows.size() == mem.points.size());
    for (std::size_t i = 0; i < disk.rows.size(); ++i) {
        CHECK(disk.rows[i][0] == mem.points[i].price);
        CHECK(disk.rows[i][1] == mem.points[i].strike);
        CHECK(disk.rows[i][2] == mem.points[i].quantity_ratio);
    }

    // OTM puts peak inside the price range
    std::ifstream rin(dir / "alpha_requirements.csv");
    const auto req = rmm::io::read_csv(rin);
    for (const auto& row : req.rows) {
        if (row[0] <= 0.9 * (1.0 + 1e-12)) {
            CHECK(row[1] > 0.05);
            CHECK(row[1] < 0.95);
        }
    }
    CHECK(lab({"hedge-surface", "--out", dir.string(), "--points", "1"}).code == 2);
}

TEST_CASE("simulate-vault") {
    const std::vector<std::string> base{"simulate-vault", "--K", "2000", "--sigma", "0.85", "--T",
                                        "0.6667", "--steps", "64", "--seeds", "3,4,5"};
    const auto a = lab(base);
    REQUIRE(a.code == 0);
    const auto lines = lines_of(a.out);
    REQUIRE(lines.size() == 4);
    const auto first = rmm::vault::report_from_json(lines[0]);
    CHECK(first.seed == 3);
    CHECK(rmm::vault::report_from_json(lines[2]).seed == 5);
    CHECK(lines[3].find("\"summary\":true") != std::string::npos);
    CHECK(lines[3].find("mean_fees") != std::string::npos);
    CHECK(lines[3].find("swap_exceeds_mispricing_from") != std::string::npos);
    CHECK(lines[3].find("\"rollover_seeds\"") != std::string::npos);

    auto threaded = base;
    threaded.insert(threaded.end(), {"--threads", "3"});
    CHECK(lab(threaded).out == a.out);

    const auto free = lab({"simulate-vault", "--K", "2000", "--sigma", "0.85", "--T", "0.6667",
                           "--steps", "64", "--gamma", "1", "--seed", "9"});
    REQUIRE(free.code == 0);
    CHECK(rmm::vault::report_from_json(lines_of(free.out)[0]).terminal_k <= 0.0);

    const auto dir = scratch("vault");
    auto saved = base;
    saved.insert(saved.end(), {"--out", dir.string()});
    REQUIRE(lab(saved).code == 0);
    CHECK(slurp(dir / "vault_report.jsonl") == a.out);

    auto conflict = base;
    conflict.insert(conflict.end(), {"--horizon", "1.0"});
    CHECK(lab(conflict).code == 2);
}
