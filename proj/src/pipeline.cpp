#include "delayscale/pipeline.hpp"

#include "delayscale/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

namespace delayscale {

using nlohmann::json;

namespace {

// JSON has no inf/nan; they are written as strings so verdicts stay parseable.
json num(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

} // namespace

GainSet resolve_gains(const RunConfig& cfg, const ExampleSystem& sys) {
    GainSet g;
    if (cfg.gains_path) {
        g = read_gains(*cfg.gains_path);
    } else if (cfg.gains_inline) {
        g = gains_from_json(*cfg.gains_inline);
    } else {
        g = synthesize_gains(sys.envelope, sys.model.n, cfg.synthesis);
    }
    if (g.n != sys.model.n) {
        throw ConfigError("gains: n = " + std::to_string(g.n) + " does not match the plant");
    }
    return cfg.gain_scale == 1.0 ? g : g.scaled(cfg.gain_scale);
}

std::unique_ptr<Pipeline> build_pipeline(const RunConfig& cfg) {
    auto p = std::make_unique<Pipeline>();
    p->sys = build_system(cfg);
    p->gains = resolve_gains(cfg, p->sys);
    p->margins = verify_coupled_lyapunov(p->gains, p->sys.model, cfg.verify.x1_lo, cfg.verify.x1_hi, cfg.verify.grid);
    p->params = make_controller_params(p->gains, p->sys.envelope, p->sys.model.true_theta, cfg.controller);
    p->ctrl = std::make_unique<Controller>(p->sys.model, p->sys.envelope, p->gains, p->params);
    return p;
}

SimConfig sim_config_for(const RunConfig& cfg, const PlantModel& model) {
    SimConfig sc = cfg.sim;
    if (sc.x0.size() != model.n || sc.psi0.size() != model.n_psi) {
        throw ConfigError("sim: x0 needs " + std::to_string(model.n) + " entries and psi0 " +
                          std::to_string(model.n_psi));
    }
    sc.validate(model, cfg.controller);
    return sc;
}

json margins_to_json(const CoupledMargins& m) {
    return json{{"observer_lyapunov", num(m.observer_lyapunov)},
                {"observer_coupling", num(m.observer_coupling)},
                {"controller_lyapunov", num(m.controller_lyapunov)},
                {"controller_coupling", num(m.controller_coupling)},
                {"gain_bound", num(m.gain_bound)},
                {"worst_x1_observer", m.worst_x1_observer},
                {"worst_x1_controller", m.worst_x1_controller},
                {"passed", m.passed()}};
}

json report_to_json(const AssumptionReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"assumption", c.assumption},
                          {"name", c.name},
                          {"margin", num(c.margin)},
                          {"value", num(c.value)},
                          {"worst", c.worst},
                          {"partial", c.partial},
                          {"passed", c.margin >= -r.tolerance}});
    }
    return json{{"passed", r.passed()}, {"tolerance", r.tolerance}, {"checks", checks}};
}

json metrics_to_json(const ConvergenceMetrics& m) {
    json sup;
    for (const auto& [k, v] : m.sup_norms) {
        sup[k] = num(v);
    }
    json cross;
    for (const auto& [f, t] : m.crossing) {
        cross[fmt::format("{:g}", f)] = t < 0 ? json(nullptr) : json(t);
    }
    const auto plateau = [](const PlateauStat& p) {
        return json{{"terminal", num(p.terminal)},
                    {"last_decile_variation", num(p.last_decile_variation)},
                    {"nondecreasing", p.nondecreasing},
                    {"plateaued", p.plateaued()}};
    };
    return json{{"sup_norms", sup},
                {"terminal_x", num(m.terminal_x)},
                {"terminal_psi", num(m.terminal_psi)},
                {"terminal_xhat", num(m.terminal_xhat)},
                {"initial_norm", num(m.initial_norm)},
                {"crossing", cross},
                {"r", plateau(m.r)},
                {"r_u", plateau(m.r_u)},
                {"theta_hat", plateau(m.theta_hat)},
                {"blew_up", m.blew_up},
                {"converged", m.converged()}};
}

json decrease_to_json(const DecreaseReport& d) {
    json worst = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(d.violations.size(), 20); ++i) {
        const auto& v = d.violations[i];
        worst.push_back({{"index", v.index}, {"t", v.t}, {"excess", num(v.excess)}});
    }
    return json{{"samples", d.samples},
                {"violations", d.violations.size()},
                {"first_violations", worst},
                {"worst_excess", num(d.worst_excess)},
                {"instantaneous_fraction", d.instantaneous_fraction()},
                {"worst_instantaneous", num(d.worst_instantaneous)},
                {"passed", d.passed()}};
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path);
    }
    out << j.dump(2) << "\n";
}

} // namespace delayscale
