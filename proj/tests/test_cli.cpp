#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "risklab/cli.hpp"

using namespace risklab;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = RISKLAB_CONFIG_DIR;
const std::string kTool = RISKLAB_TOOL;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("risklab_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string body(const std::string& csv) { return csv.substr(csv.find('\n') + 1); }

std::vector<std::vector<std::string>> rows(const std::string& csv) {
    std::vector<std::vector<std::string>> out;
    std::stringstream ss(body(csv));
    std::string line;
    while (std::getline(ss, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        out.push_back(f);
    }
    return out;
}

int run_config(const std::string& text, const fs::path& dir, std::string* err = nullptr) {
    const fs::path cfg = dir / "config.json";
    std::ofstream(cfg) << text;
    std::ostringstream o, e;
    cli::RunFlags f;
    f.out_dir = dir.string();
    const int rc = cli::run(cfg.string(), f, o, e);
    if (err) *err = e.str();
    return rc;
}

int shell(const std::string& cmd) {
    const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("the two-agent VaR fixture reproduces 1 against 0") {
    const fs::path dir = scratch("eval");
    cli::RunFlags f;
    f.out_dir = dir.string();
    std::ostringstream o, e;
    REQUIRE(cli::run(kConfigs + "/eval_two_agent_var.json", f, o, e) == 0);
    const auto r = rows(slurp(dir / "eval.csv"));
    REQUIRE(r.size() == 5);
    CHECK(r[0][3] == "measure");
    CHECK((r[2][3] == "var(0.25)" && r[2][5] == "0"));
    CHECK((r[4][3] == "convolution" && r[4][5] == "1"));
    CHECK(fs::exists(dir / "eval.json"));
}

TEST_CASE("VaR at the atom mass is reported degenerate") {
    const fs::path dir = scratch("degeneracy");
    REQUIRE(run_config(R"({"experiment": "degeneracy", "space": {"uniform": 2},
                          "specs": [{"kind": "var", "beta": 0.5}, {"kind": "esssup"}]})",
                       dir) == 0);
    const auto r = rows(slurp(dir / "degeneracy.csv"));
    CHECK(r[1][4] == "degenerate");
    CHECK(r[2][4] == "non-degenerate");
}

TEST_CASE("malformed configs exit 1 with a location") {
    const fs::path dir = scratch("bad");
    std::string err;
    CHECK(run_config("{\n  \"experiment\": \"eval\",\n  \"space\": {\"uniform\": 2,}\n}", dir, &err) == 1);
    CHECK(err.find("line 3") != std::string::npos);
    CHECK(run_config(R"({"experiment": "eval", "space": {"uniform": 2}, "colour": 1})", dir, &err) == 1);
    CHECK(err.find("/colour") != std::string::npos);
    CHECK(err.find("unknown key") != std::string::npos);
    CHECK(run_config(R"({"experiment": "eval", "space": {"uniform": 2},
                         "specs": [{"kind": "var", "beta": 1.5}], "payoffs": [[1, 2]]})",
                     dir, &err) == 1);
    CHECK(err.find("/specs/0") != std::string::npos);
    CHECK(run_config(R"({"experiment": "eval", "space": {"uniform": 2},
                         "specs": [{"kind": "es", "beta": 0.5}], "payoffs": [[1, 2, 3]]})",
                     dir, &err) == 1);
    CHECK(err.find("/payoffs/0") != std::string::npos);
    CHECK(run_config(R"({"experiment": "dance", "space": {"uniform": 2}})", dir, &err) == 1);
    CHECK(run_config(R"({"experiment": "infconv", "space": {"uniform": 2}, "payoffs": [[1, 2]],
                         "population": {"agents": [{"weight": 1, "spec": {"kind": "esssup"}}]}})",
                     dir, &err) == 1);
    CHECK(err.find("seed") != std::string::npos);
    CHECK(run_config(R"({"experiment": "eval", "space": {"uniform": 2}, "specs": [{"kind": "esssup"}]})", dir,
                     &err) == 1);
    std::ostringstream o, e;
    CHECK(cli::run((dir / "missing.json").string(), {}, o, e) == 1);
}

TEST_CASE("budget failures exit 2") {
    const fs::path dir = scratch("budget");
    CHECK(run_config(R"({"experiment": "infconv", "seed": 1, "space": {"uniform": 2}, "payoffs": [[1, 2]],
                         "solver": {"exact": true},
                         "population": {"mode": "unweighted", "agents": [
                           {"spec": {"kind": "esssup"}}, {"spec": {"kind": "esssup"}},
                           {"spec": {"kind": "esssup"}}, {"spec": {"kind": "esssup"}}]}})",
                     dir) == 2);
}

TEST_CASE("every shipped config runs and is deterministic") {
    for (const auto& entry : fs::directory_iterator(kConfigs)) {
        const fs::path a = scratch("det_a"), b = scratch("det_b");
        cli::RunFlags fa, fb;
        fa.out_dir = a.string();
        fb.out_dir = b.string();
        fa.timestamp = "T1";
        fb.timestamp = "T2";
        std::ostringstream o, e;
        INFO(entry.path().string());
        REQUIRE(cli::run(entry.path().string(), fa, o, e) == 0);
        REQUIRE(cli::run(entry.path().string(), fb, o, e) == 0);
        const auto cfg = cli::load_config(entry.path().string());
        const std::string csv_a = slurp(a / (cfg.stem + ".csv")), csv_b = slurp(b / (cfg.stem + ".csv"));
        CHECK(csv_a.rfind("# risklab ", 0) == 0);
        CHECK(csv_a != csv_b);
        CHECK(body(csv_a) == body(csv_b));
        const auto r = rows(csv_a);
        REQUIRE(r.size() >= 2);
        CHECK(r[0][0] == "experiment");
        CHECK(r[0][1] == "config_hash");
        CHECK(r[0][2] == "seed");
        for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i][0] == cfg.experiment);
        const auto meta = nlohmann::json::parse(slurp(a / (cfg.stem + ".json")));
        CHECK(meta["experiment"] == cfg.experiment);
        CHECK(meta["rows"] == r.size() - 1);
    }
}

TEST_CASE("seed override changes the hash and the seed column") {
    const fs::path a = scratch("seed_a"), b = scratch("seed_b");
    cli::RunFlags fa, fb;
    fa.out_dir = a.string();
    fb.out_dir = b.string();
    fb.seed = 77;
    std::ostringstream o, e;
    REQUIRE(cli::run(kConfigs + "/identity_var.json", fa, o, e) == 0);
    REQUIRE(cli::run(kConfigs + "/identity_var.json", fb, o, e) == 0);
    const auto ra = rows(slurp(a / "identity-var.csv")), rb = rows(slurp(b / "identity-var.csv"));
    CHECK(ra[1][2] == "1");
    CHECK(rb[1][2] == "77");
    CHECK(ra[1][1] != rb[1][1]);
    CHECK(ra[1][6] == "false");  // the identity fails at an atom indicator
}

TEST_CASE("hashing") {
    CHECK(cli::fnv1a("") == 14695981039346656037ULL);
    CHECK(cli::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("listing") {
    const auto& e = cli::experiments();
    CHECK(e.size() == 10);
    const auto j = nlohmann::json::parse(cli::list_experiments(true));
    CHECK(j.size() == 10);
    CHECK(j[0]["name"] == "eval");
    std::size_t lines = 0;
    for (char ch : cli::list_experiments(false)) lines += ch == '\n';
    CHECK(lines == 10);
}

TEST_CASE("command line flags") {
    CHECK(shell(kTool + " list") == 0);
    CHECK(shell(kTool + " list --json") == 0);
    CHECK(shell(kTool + " list --bogus") == 1);
    CHECK(shell(kTool) == 1);
    CHECK(shell(kTool + " run") == 1);
    const fs::path dir = scratch("flags");
    CHECK(shell(kTool + " run " + kConfigs + "/degeneracy_var.json --out-dir " + dir.string() + " --threads 2") == 0);
    CHECK(fs::exists(dir / "degeneracy.csv"));
    CHECK(shell(kTool + " run " + kConfigs + "/degeneracy_var.json --threads 0") == 1);
}
