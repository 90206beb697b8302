#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() / ("qttagg_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return dir / name;
    }
};

int run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + QTTAGG_CLI_PATH + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF records.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows(1);
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            rows.back().push_back(field);
            field.clear();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            rows.back().push_back(field);
            field.clear();
            rows.emplace_back();
            ++i;
        } else {
            field += c;
        }
    }
    if (!field.empty() || !rows.back().empty()) rows.back().push_back(field);
    if (rows.back().empty()) rows.pop_back();
    return rows;
}

const char* kBinomial = R"({"components":[{"type":"bernoulli","p":0.5},{"type":"bernoulli","p":0.5},
  {"type":"bernoulli","p":0.5}],"normalize_weights":true})";

std::string wpb8() {
    json m;
    const double p[8] = {0.1, 0.2, 0.3, 0.15, 0.25, 0.05, 0.12, 0.22};
    const double w[8] = {0.13, 0.07, 0.21, 0.11, 0.17, 0.09, 0.14, 0.08};
    for (int d = 0; d < 8; ++d) {
        m["components"].push_back({{"type", "bernoulli"}, {"p", p[d]}});
        m["weights"].push_back(w[d]);
    }
    return m.dump();
}

}  // namespace

TEST_CASE("cli validate") {
    Scratch s;
    CHECK(run_cli("validate " + s.write("m.json", kBinomial).string()) == 0);
    CHECK(run_cli("validate " + s.write("bad.json", R"({"components":[{"type":"categorical","values":[0,1],"probs":[0.5,0.6]}]})").string()) == 2);
    CHECK(run_cli("validate " + (s.dir / "missing.json").string()) == 2);
    CHECK(run_cli("validate " + s.write("junk.json", "{not json").string()) == 2);
    CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("cli run with the dense method") {
    Scratch s;
    s.write("model.json", kBinomial);
    const auto cfg = s.write("run.json", R"({"model":"model.json","method":"dense","n":8,"L":1.5,"origin":-0.25,
        "filter":"exp","alpha":[0.5,0.9],"output":"out","density":true})");
    REQUIRE(run_cli("run " + cfg.string()) == 0);
    const auto rows = parse_csv(slurp(s.dir / "out" / "cdf.csv"));
    REQUIRE(rows.size() == 257);
    CHECK(rows[0] == std::vector<std::string>{"x", "F"});
    CHECK(std::stod(rows[1][0]) == -0.25);
    // F is near 1 once the top atom at x = 1 has been passed
    CHECK(std::abs(std::stod(rows.back()[1]) - 1.0) < 1e-3);
    CHECK(parse_csv(slurp(s.dir / "out" / "density.csv")).size() == 257);
    const json risk = json::parse(slurp(s.dir / "out" / "risk.json"));
    REQUIRE(risk.size() == 2);
    CHECK(risk[1]["var"].get<double>() >= risk[0]["var"].get<double>());
    const json diag = json::parse(slurp(s.dir / "out" / "diagnostics.json"));
    CHECK(diag["method"] == "dense");
    CHECK(diag.contains("cdf"));
    CHECK_FALSE(fs::exists(s.dir / "out" / "cdf.csv.tmp"));

    // the risk command writes risk and diagnostics only
    const auto rc = s.write("risk.json", R"({"model":"model.json","method":"rc","n":8,"L":1.5,"alpha":0.9,"output":"r"})");
    REQUIRE(run_cli("risk " + rc.string()) == 0);
    CHECK(fs::exists(s.dir / "r" / "risk.json"));
    CHECK_FALSE(fs::exists(s.dir / "r" / "cdf.csv"));
    CHECK(json::parse(slurp(s.dir / "r" / "risk.json"))[0]["var"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("cli configuration errors") {
    Scratch s;
    s.write("model.json", kBinomial);
    CHECK(run_cli("run " + s.write("a.json", R"({"model":"model.json","n":8})").string()) == 2);  // no L
    CHECK(run_cli("run " + s.write("b.json", R"({"model":"model.json","n":8,"L":1,"method":"svd"})").string()) == 2);
    CHECK(run_cli("run " + s.write("c.json", R"({"model":"model.json","n":8,"L":1,"alpha":1.5})").string()) == 2);
    CHECK(run_cli("run " + s.write("d.json", R"({"model":"model.json","n":8,"L":1,"method":"mc","density":true})").string()) == 2);
    // dense above its cap is a resource limit
    CHECK(run_cli("run " + s.write("e.json", R"({"model":"model.json","n":12,"L":1,"dense_cap":10})").string()) == 3);
}

TEST_CASE("cli bond cap exit code and failing step") {
    Scratch s;
    json cfg = {{"model", json::parse(wpb8())}, {"method", "qtt"}, {"n", 16}, {"L", 1.0}, {"filter", "none"},
                {"eps", 1e-10}, {"output", "o"}};
    const auto path = s.write("run.json", cfg.dump());
    CHECK(run_cli("run " + path.string(), "QTTAGG_BOND_CAP=4") == 3);
    const json diag = json::parse(slurp(s.dir / "o" / "diagnostics.json"));
    REQUIRE(diag.contains("failed_step"));
    const int step = diag["failed_step"].get<int>();
    CHECK(step >= 0);
    CHECK(step < 8);
    CHECK(diag["bond"].get<long>() > 4);
    // without the cap the same configuration succeeds
    CHECK(run_cli("run " + path.string()) == 0);
}

TEST_CASE("cli bench") {
    Scratch s;
    CHECK(run_cli("bench " + s.write("empty.json", R"({"instances":[],"methods":["dense"],"n":[8]})").string()) == 2);
    CHECK(run_cli("bench " + s.write("nomethods.json", R"({"instances":[{"family":"wpb","D":4}],"methods":[],"n":[8]})").string()) == 2);

    const auto sweep = s.write("sweep.json", R"({"instances":[{"family":"wpb","D":6,"seeds":2},
        {"family":"lognormal","mu":0,"sigma":0.5}],"methods":["dense","qtt","mc","rc"],"n":[9],
        "eps":[1e-6],"filters":["exp","none"],"samples":5000,"output":"bench/out.csv"})");
    REQUIRE(run_cli("bench " + sweep.string()) == 0);
    const auto rows = parse_csv(slurp(s.dir / "bench" / "out.csv"));
    REQUIRE(rows.size() > 1);
    const auto& head = rows[0];
    const auto col = [&](const std::string& name) {
        const auto it = std::find(head.begin(), head.end(), name);
        REQUIRE(it != head.end());
        return static_cast<size_t>(it - head.begin());
    };
    // 2 WPB seeds x (dense 2 filters + qtt 2 filters + mc + rc) + lognormal (4 spectral + mc + rc)
    CHECK(rows.size() == 1 + 12 + 6);
    size_t failed = 0;
    for (size_t r = 1; r < rows.size(); ++r) {
        REQUIRE(rows[r].size() == head.size());
        CHECK(rows[r][col("schema")] == "qttagg-bench-1");
        if (rows[r][col("status")] != "ok") {
            ++failed;
            CHECK_FALSE(rows[r][col("message")].empty());
            continue;
        }
        if (rows[r][col("method")] == "rc") CHECK(std::stod(rows[r][col("error_linf")]) == 0.0);
        if (rows[r][col("method")] == "qtt") CHECK(std::stol(rows[r][col("final_max_bond")]) > 0);
    }
    CHECK(failed == 1);  // rc on the lognormal instance
    const auto summary = parse_csv(slurp(s.dir / "bench" / "out_summary.csv"));
    CHECK(summary.size() > 1);
    CHECK(std::find(summary[0].begin(), summary[0].end(), "error_l1_std") != summary[0].end());
}

TEST_CASE("csv reader handles quoting") {
    const auto rows = parse_csv("a,\"b,c\",\"d\"\"e\"\r\n1,2,3\r\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][1] == "b,c");
    CHECK(rows[0][2] == "d\"e");
}
