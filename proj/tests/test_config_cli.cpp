#include "support.hpp"

#include "delayscale/config.hpp"
#include "delayscale/errors.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace delayscale;
using namespace testing_support;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("delayscale_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

json base_config() { return read_config_json(std::string(DELAYSCALE_CONFIGS) + "/equilibrium.json"); }

std::string write(const fs::path& dir, const json& j, const std::string& name = "cfg.json") {
    const auto p = (dir / name).string();
    std::ofstream(p) << j.dump(2);
    return p;
}

int run(const std::string& args, const fs::path& dir) {
    const std::string cmd =
        std::string(DELAYSCALE_CLI) + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("bundled configs parse") {
    for (const char* name : {"benchmark.json", "benchmark_sinusoidal.json", "equilibrium.json"}) {
        CAPTURE(name);
        const auto cfg = load_config(std::string(DELAYSCALE_CONFIGS) + "/" + name);
        CHECK(cfg.sigma == 0.75);
        CHECK(cfg.example.Delta_bar == 0.1);
        CHECK(cfg.sim.x0.size() == 4);
    }
    const auto sin = load_config(std::string(DELAYSCALE_CONFIGS) + "/benchmark_sinusoidal.json");
    CHECK(sin.example.delay.kind == "sinusoidal");
}

TEST_CASE("missing sigma is a config error") {
    auto j = base_config();
    j["example"]["bounds"].erase("sigma");
    CHECK_THROWS_AS((void)parse_config(j), ConfigError);
    const auto dir = scratch("nosigma");
    CHECK(run("check --config " + write(dir, j) + " --out " + dir.string(), dir) == 1);
    CHECK(slurp(dir / "log.txt").find("sigma") != std::string::npos);
}

TEST_CASE("malformed JSON names the line") {
    const auto dir = scratch("malformed");
    const auto p = (dir / "bad.json").string();
    std::ofstream(p) << "{\n  \"seed\": 1,\n  \"sim\": {,\n}\n";
    try {
        (void)load_config(p);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK(run("simulate --config " + p, dir) == 1);
}

TEST_CASE("usage errors exit 1") {
    const auto dir = scratch("usage");
    CHECK(run("simulate", dir) == 1);
    CHECK(run("frobnicate --config x.json", dir) == 1);
    CHECK(run("simulate --config " + (dir / "absent.json").string(), dir) == 1);
}

TEST_CASE("zero gains are refused with exit 2") {
    auto j = base_config();
    j["synthesis"]["gain_scale"] = 0.0;
    const auto dir = scratch("zerogain");
    CHECK(run("simulate --config " + write(dir, j) + " --out " + dir.string(), dir) == 2);
    CHECK_FALSE(fs::exists(dir / "trajectory.csv"));
}

TEST_CASE("check passes with a sound envelope and fails with a misdeclared sigma") {
    auto j = base_config();
    j["example"]["bounds"]["k_psi_bar"] = 40.0;
    j["assumptions"]["samples"] = 2000;
    const auto dir = scratch("check");
    CHECK(run("check --config " + write(dir, j) + " --out " + dir.string(), dir) == 0);
    const auto verdict = json::parse(slurp(dir / "check.json"));
    CHECK(verdict["assumptions"]["passed"] == true);
    j["example"]["bounds"]["sigma"] = 2.0;
    CHECK(run("check --config " + write(dir, j) + " --out " + dir.string(), dir) == 4);
}

TEST_CASE("simulate, monitor and byte-identical reruns") {
    auto j = base_config();
    j["sim"]["T"] = 0.5;
    j["sim"]["decimation"] = 10;
    const auto dir = scratch("simulate");
    const auto cfg = write(dir, j);
    const auto a = dir / "a", b = dir / "b";
    CHECK(run("simulate --config " + cfg + " --out " + a.string(), dir) == 0);
    CHECK(run("simulate --config " + cfg + " --out " + b.string(), dir) == 0);
    const auto csv = slurp(a / "trajectory.csv");
    CHECK_FALSE(csv.empty());
    CHECK(csv == slurp(b / "trajectory.csv"));
    const auto summary = json::parse(slurp(a / "summary.json"));
    CHECK(summary["blew_up"] == false);
    CHECK(summary["steps"] == 500);

    j["trajectory"] = (a / "trajectory.csv").string();
    const auto mcfg = write(dir, j, "monitor.json");
    CHECK(run("monitor --config " + mcfg + " --out " + a.string(), dir) == 0);
    const auto verdict = json::parse(slurp(a / "verdict.json"));
    CHECK(verdict["passed"] == true);
}

TEST_CASE("gains artifact round trip") {
    const auto dir = scratch("gains");
    auto j = base_config();
    const auto cfg = write(dir, j);
    CHECK(run("synthesize --config " + cfg + " --out " + dir.string(), dir) == 0);
    const auto g = read_gains((dir / "gains.json").string());
    const auto& f = benchmark();
    CHECK((g.g_tilde - f.gains.g_tilde).norm() == 0.0);
    CHECK((g.P_c - f.gains.P_c).norm() == 0.0);
    CHECK(g.nu_c == f.gains.nu_c);
    const auto margins = json::parse(slurp(dir / "gains.json"))["margins"];
    CHECK(margins["certified"] == true);

    const auto back = gains_from_json(gains_to_json(f.gains));
    CHECK((back.P_o - f.gains.P_o).norm() == 0.0);
    CHECK(back.g_bar == f.gains.g_bar);

    j["gains"] = "gains.json";
    j["sim"]["T"] = 0.05;
    CHECK(run("simulate --config " + write(dir, j, "with_gains.json") + " --out " + (dir / "sim").string(), dir) == 0);

    auto bad = gains_to_json(f.gains);
    bad["g_tilde"] = {1.0, 2.0};
    CHECK_THROWS_AS((void)gains_from_json(bad), ConfigError);
}

TEST_CASE("parameter sweep writes one directory per value") {
    auto j = base_config();
    j["sim"]["T"] = 0.05;
    const auto dir = scratch("sweep");
    CHECK(run("simulate --config " + write(dir, j) + " --out " + dir.string() + " --sweep sim.h:0.001:0.002:3", dir) ==
          0);
    for (const char* d : {"sweep_000", "sweep_001", "sweep_002"}) {
        CAPTURE(d);
        CHECK(fs::exists(dir / d / "summary.json"));
    }
    CHECK(run("simulate --config " + write(dir, j) + " --out " + dir.string() + " --sweep sim.h:0.001", dir) == 1);
}

TEST_CASE("relative paths resolve against the config directory") {
    auto j = base_config();
    j["output"]["dir"] = "nested/out";
    const auto cfg = parse_config(j, "/tmp/base");
    CHECK(cfg.out_dir == "/tmp/base/nested/out");
    j["gains"] = "missing.json";
    CHECK_THROWS_AS((void)parse_config(j, "/tmp/base"), ConfigError);
}
