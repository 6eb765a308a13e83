#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "doctest.h"
#include "simruin/brm_closed.hpp"

using nlohmann::json;
using simruin::cli::run_cli;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "simruin");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

json record(const std::vector<std::string>& args) {
    const Run r = run(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return json::parse(r.out);
}

// Rebuilds argv from a record's command and echoed params.
std::vector<std::string> replay_args(const json& rec) {
    std::vector<std::string> args;
    std::istringstream words(rec["command"].get<std::string>());
    for (std::string w; words >> w;) args.push_back(w);
    for (const auto& [key, v] : rec["params"].items()) {
        args.push_back("--" + key);
        if (v.is_string()) {
            args.push_back(v.get<std::string>());
        } else if (v.is_number_integer() || v.is_number_unsigned()) {
            args.push_back(v.dump());
        } else {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
            args.push_back(buf);
        }
    }
    return args;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            row.push_back(field);
            field.clear();
        } else if (ch == '\n') {
            row.push_back(field);
            field.clear();
            rows.push_back(row);
            row.clear();
        } else {
            field += ch;
        }
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    FAIL("missing column " << name);
    return 0;
}

}  // namespace

TEST_CASE("documented examples") {
    const json one = record({"brm1", "--c", "1", "--sigma", "1", "--u", "1", "--T", "1"});
    CHECK(one["value"].get<double>() == doctest::Approx(0.0904178).epsilon(1e-6));

    const json b = record({"brm2", "bounds", "--c1", "0", "--c2", "0", "--rho", "0", "--u", "0", "--v", "0"});
    CHECK(b["bounds"][0].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(b["bounds"][1].get<double>() == doctest::Approx(1.0).epsilon(1e-12));

    const json cdf = record({"brm2", "ruintime-cdf", "--a", "1", "--rho", "0", "--x", "0"});
    CHECK(cdf["value"].get<double>() == 0.0);
}

TEST_CASE("record layout") {
    const json rec = record({"mc", "psi1d", "--paths", "2000", "--steps", "32", "--seed", "9"});
    // nlohmann::json sorts keys, so order is checked on the raw text.
    const std::string raw = run({"mc", "psi1d", "--paths", "2000", "--steps", "32", "--seed", "9"}).out;
    const std::vector<std::string> order{"command", "params", "value", "stderr", "ci", "bounds", "method", "seed", "tool_version", "elapsed_ms"};
    std::size_t last = 0;
    for (const auto& k : order) {
        const auto pos = raw.find("\"" + k + "\":", last);
        REQUIRE_MESSAGE(pos != std::string::npos, k);
        last = pos;
    }
    CHECK(rec["seed"].get<std::uint64_t>() == 9);
    CHECK(rec["tool_version"] == simruin::cli::kToolVersion);
    CHECK(rec["bounds"].is_null());
    CHECK(rec["stderr"].get<double>() > 0.0);
    CHECK(rec["params"]["workers"].get<int>() == 1);
    CHECK(rec["params"]["sigma"].get<double>() == 1.0);
}

TEST_CASE("defaults are materialized in the echo") {
    const json rec = record({"mc", "psi2d", "--u", "1.5", "--paths", "2000"});
    CHECK(rec["params"]["steps"].get<int>() == 576);
    CHECK(rec["params"]["is"] == "auto");
    const json b = record({"brm2", "bounds", "--u", "2", "--a", "0.5"});
    CHECK(b["params"]["v"].get<double>() == 1.0);
}

TEST_CASE("replaying the echoed record is bit exact") {
    const std::vector<std::vector<std::string>> cases{
        {"brm1", "--c", "0.3", "--u", "0.7"},
        {"brm2", "bounds", "--rho", "0.3", "--u", "1.1"},
        {"brm2", "asym", "--a", "0.2", "--rho", "0.6", "--u", "3"},
        {"brm2", "crude", "--c1", "0.5", "--u", "1"},
        {"brm2", "early-bound", "--u", "4"},
        {"levy", "--model", "brownian", "--x", "0.5", "--y", "1"},
        {"mc", "psi1d", "--paths", "3000", "--steps", "64", "--seed", "17"},
        {"mc", "psi2d", "--u", "1", "--paths", "3000", "--seed", "3", "--workers", "2"},
        {"mc", "levy", "--paths", "3000", "--steps", "256", "--seed", "4"},
        {"mc", "ruintime", "--u", "1.5", "--paths", "20000", "--seed", "5"},
        {"constant", "--T", "2", "--paths", "500", "--steps", "32", "--seed", "6"},
    };
    for (const auto& args : cases) {
        const json first = record(args);
        const json again = record(replay_args(first));
        CAPTURE(first.dump());
        CHECK(again["params"] == first["params"]);
        CHECK(again["value"].dump() == first["value"].dump());
        CHECK(again["stderr"].dump() == first["stderr"].dump());
        CHECK(again["extra"] == first["extra"]);
    }
}

TEST_CASE("csv and json carry the same numbers") {
    const std::vector<std::string> args{"mc", "levy", "--paths", "3000", "--steps", "256", "--seed", "2"};
    const json rec = record(args);
    auto csv_args = args;
    csv_args.insert(csv_args.begin(), {"--format", "csv"});
    const Run r = run(csv_args);
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 2);
    const auto& h = rows[0];
    const auto& v = rows[1];
    CHECK(std::stod(v[column(h, "value")]) == rec["value"].get<double>());
    CHECK(std::stod(v[column(h, "stderr")]) == rec["stderr"].get<double>());
    CHECK(std::stod(v[column(h, "ci_low")]) == rec["ci"][0].get<double>());
    CHECK(std::stod(v[column(h, "ci_high")]) == rec["ci"][1].get<double>());
    for (const auto& [k, val] : rec["extra"].items()) CHECK(std::stod(v[column(h, k)]) == val.get<double>());
    for (const auto& [k, val] : rec["params"].items()) {
        if (val.is_string()) CHECK(v[column(h, k)] == val.get<std::string>());
        else CHECK(std::stod(v[column(h, k)]) == val.get<double>());
    }
}

TEST_CASE("--out writes the same bytes") {
    const std::string path = "test_cli_out.json";
    std::remove(path.c_str());
    const Run r = run({"--out", path, "brm1", "--c", "1"});
    REQUIRE(r.code == 0);
    std::ifstream in(path, std::ios::binary);
    std::stringstream file;
    file << in.rdbuf();
    CHECK(file.str() == r.out);
    std::remove(path.c_str());
}

TEST_CASE("exit codes") {
    CHECK(run({"brm1", "--sigma", "-1"}).code == simruin::cli::kInputError);
    CHECK(run({"brm1", "--u", "abc"}).code == simruin::cli::kInputError);
    CHECK(run({"brm2", "asym", "--a", "1", "--rho", "0", "--u", "3"}).code == simruin::cli::kInputError);
    CHECK(run({"levy", "--c1", "1", "--c2", "1"}).code == simruin::cli::kInputError);
    CHECK(run({"levy", "--model", "cauchy"}).code == simruin::cli::kInputError);
    // Tilted sample too small for the effective-size floor.
    CHECK(run({"mc", "psi2d", "--u", "3", "--paths", "200"}).code == simruin::cli::kNumericalError);

    const Run usage = run({"brm3"});
    CHECK(usage.code == simruin::cli::kUsage);
    CHECK(usage.err.find("brm2") != std::string::npos);
    CHECK(usage.out.empty());
    CHECK(run({"brm1", "--nope", "1"}).code == simruin::cli::kUsage);
    CHECK(run({"--format", "xml", "brm1"}).code == simruin::cli::kUsage);
    CHECK(run({"brm2"}).code == simruin::cli::kUsage);
    CHECK(run({}).code == simruin::cli::kUsage);

    const Run help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("sweep") != std::string::npos);
}

TEST_CASE("sweep") {
    SUBCASE("one point equals a single run") {
        const std::vector<std::string> point{"brm2", "early-bound", "--u", "3", "--rho", "0.25"};
        auto single = point;
        single.insert(single.begin(), {"--format", "csv"});
        auto swept = point;
        swept.insert(swept.begin(), "sweep");
        const auto a = csv_rows(run(single).out);
        const auto b = csv_rows(run(swept).out);
        REQUIRE(a.size() == 2);
        REQUIRE(b.size() == 2);
        for (const char* col : {"value", "u", "rho", "u_min", "valid", "method"})
            CHECK(a[1][column(a[0], col)] == b[1][column(b[0], col)]);
        CHECK(b[1][column(b[0], "error")].empty());
    }
    SUBCASE("row order and errors") {
        const Run r = run({"sweep", "brm1", "--c", "0,1", "--u", "1,-1,2"});
        CHECK(r.code == 0);
        const auto rows = csv_rows(r.out);
        REQUIRE(rows.size() == 7);
        const auto& h = rows[0];
        const std::vector<std::pair<std::string, std::string>> expect{{"0", "1"}, {"0", "-1"}, {"0", "2"}, {"1", "1"}, {"1", "-1"}, {"1", "2"}};
        for (std::size_t i = 0; i < expect.size(); ++i) {
            CHECK(rows[i + 1][column(h, "c")] == expect[i].first);
            CHECK(rows[i + 1][column(h, "u")] == expect[i].second);
            const bool bad = expect[i].second == "-1";
            CHECK(rows[i + 1][column(h, "error")].empty() == !bad);
            CHECK(rows[i + 1][column(h, "value")].empty() == bad);
        }
        simruin::brm::SinglePortfolio p;
        p.c = 1.0;
        p.u = 2.0;
        CHECK(std::stod(rows[6][column(h, "value")]) == simruin::brm::ruin_finite(p));
    }
    SUBCASE("asym decreases in u") {
        const auto rows = csv_rows(run({"sweep", "brm2", "asym", "--a", "0", "--rho", "0.5", "--u", "1,1.5,2,3,4,6"}).out);
        REQUIRE(rows.size() == 7);
        const std::size_t col = column(rows[0], "value");
        for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::stod(rows[i][col]) < std::stod(rows[i - 1][col]));
    }
    SUBCASE("I(T) is non-decreasing in T on common paths") {
        const auto rows = csv_rows(run({"sweep", "constant", "--T", "0.5,1,2,4", "--paths", "2000", "--steps", "64"}).out);
        REQUIRE(rows.size() == 5);
        const std::size_t col = column(rows[0], "value");
        for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::stod(rows[i][col]) >= std::stod(rows[i - 1][col]));
    }
}

TEST_CASE("workers do not change MC output") {
    for (const char* cmd : {"psi2d", "levy", "psi1d"}) {
        const json one = record({"mc", cmd, "--paths", "5000", "--steps", "128", "--seed", "11", "--workers", "1"});
        const json four = record({"mc", cmd, "--paths", "5000", "--steps", "128", "--seed", "11", "--workers", "4"});
        CAPTURE(cmd);
        CHECK(one["value"].dump() == four["value"].dump());
        CHECK(one["stderr"].dump() == four["stderr"].dump());
    }
}
