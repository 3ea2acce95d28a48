// delayscale synthesize|simulate|check|monitor --config <path> [--out <dir>] [--sweep name:start:stop:count]
//
// Exit codes: 0 ok, 1 config error, 2 synthesis failure, 3 blow-up,
// 4 verification failure.

#include "delayscale/errors.hpp"
#include "delayscale/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

using namespace delayscale;
using nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kSynthesis = 2, kBlowUp = 3, kVerify = 4 };

std::string out_dir_for(const RunConfig& cfg, const std::string& cli_out) {
    const std::string dir = cli_out.empty() ? cfg.out_dir : cli_out;
    std::filesystem::create_directories(dir);
    return dir;
}

std::string join(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

int cmd_synthesize(const RunConfig& cfg, const std::string& out) {
    const ExampleSystem sys = build_system(cfg);
    GainSet g;
    try {
        g = resolve_gains(cfg, sys);
    } catch (const SynthesisFailure& e) {
        fmt::print(stderr, "synthesis failed: {} (worst rho {})\n", e.what(), fmt::join(e.worst_rho(), ", "));
        return kSynthesis;
    }
    const auto m = verify_coupled_lyapunov(g, sys.model, cfg.verify.x1_lo, cfg.verify.x1_hi, cfg.verify.grid);
    const std::string dir = out_dir_for(cfg, out);
    write_gains(g, m, join(dir, "gains.json"));
    fmt::print("margins: observer {:.6g}/{:.6g}, controller {:.6g}/{:.6g}\n", m.observer_lyapunov,
               m.observer_coupling, m.controller_lyapunov, m.controller_coupling);
    if (!m.passed()) {
        fmt::print(stderr, "gains do not certify the coupled inequalities on x1 in [{}, {}]\n", cfg.verify.x1_lo,
                   cfg.verify.x1_hi);
        return kSynthesis;
    }
    return kOk;
}

int run_simulation(const RunConfig& cfg, const std::string& dir, bool quiet) {
    std::unique_ptr<Pipeline> p;
    try {
        p = build_pipeline(cfg);
    } catch (const SynthesisFailure& e) {
        fmt::print(stderr, "synthesis failed: {}\n", e.what());
        return kSynthesis;
    }
    if (!p->margins.passed()) {
        fmt::print(stderr, "gains are not certified; refusing to simulate\n");
        return kSynthesis;
    }
    const SimConfig sc = sim_config_for(cfg, p->sys.model);
    const SimResult res = simulate(p->sys.model, *p->ctrl, sc);
    write_csv(res, join(dir, "trajectory.csv"));

    const auto metrics = convergence_metrics(res);
    json events = json::array();
    for (const auto& e : res.events) {
        events.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
    }
    json summary{{"steps", res.steps},
                 {"rows", res.rows.size()},
                 {"wall_seconds", res.wall_seconds},
                 {"blew_up", res.blew_up},
                 {"terminal_x_norm", res.terminal_x_norm},
                 {"terminal_psi_norm", res.terminal_psi_norm},
                 {"terminal_xhat_norm", res.terminal_xhat_norm},
                 {"events", events},
                 {"metrics", metrics_to_json(metrics)},
                 {"controller", params_to_json(p->params)},
                 {"margins", margins_to_json(p->margins)}};
    write_json(summary, join(dir, "summary.json"));
    if (!quiet) {
        fmt::print("{} steps in {:.2f} s, terminal |x|+|psi| = {:.3e}{}\n", res.steps, res.wall_seconds,
                   res.terminal_x_norm + res.terminal_psi_norm, res.blew_up ? " (blow-up)" : "");
    }
    return res.blew_up ? kBlowUp : kOk;
}

struct SweepSpec {
    std::vector<std::string> path;
    double start = 0.0, stop = 0.0;
    int count = 1;
};

SweepSpec parse_sweep(const std::string& s) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    for (std::size_t colon; (colon = s.find(':', pos)) != std::string::npos; pos = colon + 1) {
        parts.push_back(s.substr(pos, colon - pos));
    }
    parts.push_back(s.substr(pos));
    if (parts.size() != 4) {
        throw ConfigError("--sweep: expected name:start:stop:count");
    }
    SweepSpec sw;
    for (std::size_t dot, p = 0;; p = dot + 1) {
        dot = parts[0].find('.', p);
        sw.path.push_back(parts[0].substr(p, dot == std::string::npos ? std::string::npos : dot - p));
        if (dot == std::string::npos) {
            break;
        }
    }
    try {
        sw.start = std::stod(parts[1]);
        sw.stop = std::stod(parts[2]);
        sw.count = std::stoi(parts[3]);
    } catch (const std::exception&) {
        throw ConfigError("--sweep: start, stop and count must be numbers");
    }
    if (sw.count < 1) {
        throw ConfigError("--sweep: count must be positive");
    }
    return sw;
}

unsigned sweep_threads(int runs) {
    unsigned cap = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DELAYSCALE_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) {
            cap = static_cast<unsigned>(v);
        }
    }
    return std::min(cap, static_cast<unsigned>(runs));
}

int cmd_simulate(const std::string& config, const std::string& out, const std::string& sweep) {
    if (sweep.empty()) {
        const RunConfig cfg = load_config(config);
        return run_simulation(cfg, out_dir_for(cfg, out), false);
    }
    const json base = read_config_json(config);
    const SweepSpec sw = parse_sweep(sweep);
    std::vector<RunConfig> runs;
    std::vector<double> values;
    for (int k = 0; k < sw.count; ++k) {
        const double v = sw.count == 1 ? sw.start : sw.start + (sw.stop - sw.start) * k / (sw.count - 1);
        json j = base;
        json* node = &j;
        for (const auto& key : sw.path) {
            node = &(*node)[key];
        }
        *node = v;
        runs.push_back(parse_config(j, config_dir(config)));
        values.push_back(v);
    }
    const std::string root = out_dir_for(runs.front(), out);
    std::vector<int> codes(runs.size(), kOk);
    std::atomic<std::size_t> next{0};
    std::mutex print;
    const auto worker = [&] {
        for (std::size_t k; (k = next++) < runs.size();) {
            const std::string dir = join(root, fmt::format("sweep_{:03d}", k));
            std::filesystem::create_directories(dir);
            try {
                codes[k] = run_simulation(runs[k], dir, true);
            } catch (const Error& e) {
                codes[k] = kConfig;
                const std::lock_guard lock(print);
                fmt::print(stderr, "run {}: {}\n", k, e.what());
            }
            const std::lock_guard lock(print);
            fmt::print("run {} ({} = {:g}): exit {}\n", k, fmt::join(sw.path, "."), values[k], codes[k]);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < sweep_threads(sw.count); ++i) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    return *std::max_element(codes.begin(), codes.end());
}

struct TrajectoryVerdict {
    json j;
    bool passed = false;
};

TrajectoryVerdict verify_trajectory(const RunConfig& cfg, const Pipeline& p, const std::string& path) {
    const auto& model = p.sys.model;
    const auto rows = read_csv(path, model.n, model.n_psi);
    SimResult res;
    res.n = model.n;
    res.n_psi = model.n_psi;
    res.rows = rows;
    res.h = rows.size() > 1 ? rows[1].t - rows[0].t : 0.0;
    res.history = history_from_rows(rows, model.n, model.n_psi, model.delay.max_delay());
    const LyapunovMonitor mon(model, p.sys.envelope, *p.ctrl);
    const auto snaps = mon.snapshots(res.history, model.delay, cfg.monitor_stride);
    const auto dec = check_decrease(snaps, cfg.monitor_tol);
    bool nonneg = true;
    for (const auto& s : snaps) {
        for (double v : {s.V_o, s.V_c, s.V_x, s.V_u, s.V_psi_scaled, s.V_delay, s.V_adapt}) {
            nonneg = nonneg && v >= 0.0;
        }
    }
    const auto metrics = convergence_metrics(res);
    const bool monotone = metrics.r.nondecreasing && metrics.r_u.nondecreasing && metrics.theta_hat.nondecreasing;
    TrajectoryVerdict v;
    v.passed = dec.passed() && nonneg && monotone;
    v.j = json{{"trajectory", path},
               {"decrease", decrease_to_json(dec)},
               {"snapshots_nonnegative", nonneg},
               {"scaling_monotone", monotone},
               {"metrics", metrics_to_json(metrics)},
               {"passed", v.passed}};
    return v;
}

int cmd_check(const std::string& config, const std::string& out) {
    const RunConfig cfg = load_config(config);
    const ExampleSystem sys = build_system(cfg);
    const auto report = check_assumptions(sys.model, sys.envelope, cfg.sampler);
    json verdict{{"assumptions", report_to_json(report)}, {"seed", cfg.sampler.seed}};
    bool ok = report.passed();
    for (const auto* f : report.failures()) {
        fmt::print("{} {} failed: margin {:.3e}\n", f->assumption, f->name, f->margin);
    }
    if (cfg.trajectory) {
        const auto p = build_pipeline(cfg);
        const auto tv = verify_trajectory(cfg, *p, *cfg.trajectory);
        verdict["lyapunov"] = tv.j;
        ok = ok && tv.passed;
        fmt::print("lyapunov verdict: {}\n", tv.passed ? "pass" : "fail");
    }
    verdict["passed"] = ok;
    write_json(verdict, join(out_dir_for(cfg, out), "check.json"));
    fmt::print("check: {}\n", ok ? "pass" : "fail");
    return ok ? kOk : kVerify;
}

int cmd_monitor(const std::string& config, const std::string& out) {
    const RunConfig cfg = load_config(config);
    if (!cfg.trajectory) {
        throw ConfigError("trajectory: missing (monitor needs a trajectory CSV)");
    }
    const auto p = build_pipeline(cfg);
    const auto tv = verify_trajectory(cfg, *p, *cfg.trajectory);
    write_json(tv.j, join(out_dir_for(cfg, out), "verdict.json"));
    fmt::print("monitor: {}\n", tv.passed ? "pass" : "fail");
    return tv.passed ? kOk : kVerify;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Delay-independent adaptive output-feedback control: synthesis, simulation, verification"};
    app.require_subcommand(1);
    std::string config, out, sweep;
    const auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "run configuration (JSON)")->required();
        sub->add_option("--out", out, "output directory (overrides output.dir)");
        return sub;
    };
    auto* syn = add("synthesize", "synthesize and certify gains, write gains.json");
    auto* sim = add("simulate", "simulate the closed loop, write trajectory.csv and summary.json");
    sim->add_option("--sweep", sweep, "name:start:stop:count over a dotted config field");
    auto* chk = add("check", "check the assumptions and, if configured, a trajectory");
    auto* mon = add("monitor", "Lyapunov verdict for a recorded trajectory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    try {
        if (*syn) {
            return cmd_synthesize(load_config(config), out);
        }
        if (*sim) {
            return cmd_simulate(config, out, sweep);
        }
        if (*chk) {
            return cmd_check(config, out);
        }
        if (*mon) {
            return cmd_monitor(config, out);
        }
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    } catch (const InvalidSpec& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    } catch (const SynthesisFailure& e) {
        fmt::print(stderr, "synthesis failed: {}\n", e.what());
        return kSynthesis;
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kVerify;
    }
    return kConfig;
}
