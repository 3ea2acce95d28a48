#include "delayscale/config.hpp"

#include "delayscale/errors.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace delayscale {

using nlohmann::json;

namespace {

double number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) {
        throw ConfigError(where + "." + key + ": missing");
    }
    if (!j.at(key).is_number()) {
        throw ConfigError(where + "." + key + ": expected a number");
    }
    return j.at(key).get<double>();
}

double number_or(const json& j, const std::string& key, const std::string& where, double fallback) {
    return j.contains(key) ? number(j, key, where) : fallback;
}

std::vector<double> numbers(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_array()) {
        throw ConfigError(where + "." + key + ": expected an array of numbers");
    }
    std::vector<double> v;
    for (std::size_t i = 0; i < j.at(key).size(); ++i) {
        const auto& e = j.at(key)[i];
        if (!e.is_number()) {
            throw ConfigError(where + "." + key + "[" + std::to_string(i) + "]: expected a number");
        }
        v.push_back(e.get<double>());
    }
    return v;
}

template <std::size_t N>
std::array<double, N> fixed(const json& j, const std::string& key, const std::string& where) {
    const auto v = numbers(j, key, where);
    if (v.size() != N) {
        throw ConfigError(where + "." + key + ": expected " + std::to_string(N) + " entries");
    }
    std::array<double, N> a{};
    std::copy(v.begin(), v.end(), a.begin());
    return a;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

json matrix_json(const Mat& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            row.push_back(M(i, j));
        }
        rows.push_back(row);
    }
    return rows;
}

Mat matrix_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) {
        throw ConfigError(where + ": expected a nonempty matrix");
    }
    const auto m = static_cast<Eigen::Index>(j.size());
    Mat M(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
            throw ConfigError(where + ": expected a square matrix");
        }
        for (Eigen::Index k = 0; k < m; ++k) {
            M(i, k) = row[static_cast<std::size_t>(k)].get<double>();
        }
    }
    return M;
}

json vec_json(const Vec& v) { return std::vector<double>(v.begin(), v.end()); }

std::vector<double> json_doubles(const json& j, const std::string& where) {
    if (!j.is_array()) {
        throw ConfigError(where + ": expected an array of numbers");
    }
    std::vector<double> v;
    for (const auto& e : j) {
        if (!e.is_number()) {
            throw ConfigError(where + ": expected an array of numbers");
        }
        v.push_back(e.get<double>());
    }
    return v;
}

} // namespace

json read_config_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path);
    }
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
        throw ConfigError(path + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
    }
}

std::string config_dir(const std::string& path) {
    const auto dir = std::filesystem::path(path).parent_path().string();
    return dir.empty() ? "." : dir;
}

RunConfig load_config(const std::string& path) { return parse_config(read_config_json(path), config_dir(path)); }

RunConfig parse_config(const json& j, const std::string& base_dir) {
    if (!j.is_object()) {
        throw ConfigError("config: top level must be an object");
    }
    RunConfig cfg;
    const auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? p : (std::filesystem::path(base_dir) / fp).string();
    };
    try {
        if (!j.contains("example")) {
            throw ConfigError("example: missing (the example plant is the only plant source)");
        }
        const auto& ex = j.at("example");
        auto& p = cfg.example;
        p.theta = fixed<3>(ex, "theta", "example");
        p.b = fixed<7>(ex, "b", "example");
        p.a = fixed<2>(ex, "a", "example");
        if (!ex.contains("bounds")) {
            throw ConfigError("example.bounds: missing");
        }
        const auto& b = ex.at("bounds");
        p.a_upper = fixed<2>(b, "a_upper", "example.bounds");
        p.a_lower = fixed<2>(b, "a_lower", "example.bounds");
        p.b_upper = fixed<7>(b, "b_upper", "example.bounds");
        cfg.sigma = number(b, "sigma", "example.bounds");
        if (b.contains("ratio_min")) {
            cfg.ratio_min = numbers(b, "ratio_min", "example.bounds");
        }
        if (b.contains("ratio_max")) {
            cfg.ratio_max = numbers(b, "ratio_max", "example.bounds");
        }
        p.k_psi_bar = number_or(b, "k_psi_bar", "example.bounds", p.k_psi_bar);
        if (!ex.contains("delay")) {
            throw ConfigError("example.delay: missing");
        }
        const auto& d = ex.at("delay");
        const std::string kind = d.value("kind", "constant");
        p.Delta_bar = number(d, "delta_bar", "example.delay");
        if (kind == "constant") {
            p.delay = DelayProfile::constant(number(d, "delta0", "example.delay"));
        } else if (kind == "sinusoidal") {
            p.delay = DelayProfile::sinusoidal(number(d, "delta0", "example.delay"), number(d, "amp", "example.delay"),
                                               number(d, "omega", "example.delay"));
        } else {
            throw ConfigError("example.delay.kind: expected 'constant' or 'sinusoidal'");
        }
        p.validate();

        if (j.contains("synthesis")) {
            const auto& s = j.at("synthesis");
            if (s.contains("observer_poles")) {
                cfg.synthesis.observer_poles = numbers(s, "observer_poles", "synthesis");
            }
            if (s.contains("controller_poles")) {
                cfg.synthesis.controller_poles = numbers(s, "controller_poles", "synthesis");
            }
            cfg.synthesis.rho_grid = static_cast<int>(number_or(s, "rho_grid", "synthesis", cfg.synthesis.rho_grid));
            cfg.synthesis.max_retries =
                static_cast<int>(number_or(s, "max_retries", "synthesis", cfg.synthesis.max_retries));
            cfg.gain_scale = number_or(s, "gain_scale", "synthesis", 1.0);
        }
        if (j.contains("gains")) {
            const auto& g = j.at("gains");
            if (g.is_string()) {
                cfg.gains_path = resolve(g.get<std::string>());
                if (!std::filesystem::exists(*cfg.gains_path)) {
                    throw ConfigError("gains: artifact " + *cfg.gains_path + " does not exist");
                }
            } else if (g.is_object()) {
                cfg.gains_inline = g;
            } else {
                throw ConfigError("gains: expected an artifact path or an inline object");
            }
        }
        if (j.contains("controller")) {
            const auto& c = j.at("controller");
            auto& cp = cfg.controller;
            const std::string w = "controller";
            for (auto [key, field] : std::initializer_list<std::pair<const char*, double*>>{
                     {"c_u", &cp.c_u}, {"c_theta", &cp.c_theta}, {"c1", &cp.c1}, {"c2", &cp.c2},
                     {"c3", &cp.c3}, {"c4", &cp.c4}, {"c_psi1", &cp.c_psi1}, {"c_psi2", &cp.c_psi2},
                     {"nu_u", &cp.nu_u}, {"vartheta1_star", &cp.vartheta1_star}, {"a_theta", &cp.a_theta},
                     {"eps_r", &cp.eps_r}, {"R_bar", &cp.R_bar}, {"Omega_bar", &cp.Omega_bar},
                     {"R_u_bar", &cp.R_u_bar}, {"Omega_u_bar", &cp.Omega_u_bar}, {"pi_k", &cp.pi_k},
                     {"c_factor", &cp.c_factor}, {"c_psi_factor", &cp.c_psi_factor},
                     {"u_tilde_sign", &cp.u_tilde_sign}}) {
                *field = number_or(c, key, w, *field);
            }
        }
        if (j.contains("sim")) {
            const auto& s = j.at("sim");
            auto& sc = cfg.sim;
            sc.h = number_or(s, "h", "sim", sc.h);
            sc.T = number_or(s, "T", "sim", sc.T);
            if (s.contains("x0")) {
                sc.x0 = to_vec(numbers(s, "x0", "sim"));
            }
            if (s.contains("psi0")) {
                sc.psi0 = to_vec(numbers(s, "psi0", "sim"));
            }
            if (s.contains("xhat0")) {
                sc.controller0.xhat = to_vec(numbers(s, "xhat0", "sim"));
            }
            sc.controller0.zeta = number_or(s, "zeta0", "sim", 0.0);
            sc.controller0.r = number_or(s, "r0", "sim", 1.0);
            sc.controller0.r_u = number_or(s, "r_u0", "sim", 1.0);
            sc.controller0.theta_hat = number_or(s, "theta_hat0", "sim", cfg.controller.a_theta);
            sc.history_mode = s.value("history", sc.history_mode);
            sc.decimation = static_cast<int>(number_or(s, "decimation", "sim", 1));
            sc.blowup_bound = number_or(s, "blowup_bound", "sim", sc.blowup_bound);
        } else {
            cfg.sim.controller0.theta_hat = cfg.controller.a_theta;
        }
        if (cfg.sim.x0.size() == 0) {
            cfg.sim.x0 = Vec::Zero(4);
        }
        if (cfg.sim.psi0.size() == 0) {
            cfg.sim.psi0 = Vec::Zero(2);
        }
        if (j.contains("assumptions")) {
            const auto& a = j.at("assumptions");
            auto& sp = cfg.sampler;
            sp.samples = static_cast<int>(number_or(a, "samples", "assumptions", sp.samples));
            sp.t_max = number_or(a, "t_max", "assumptions", sp.t_max);
            sp.x_radius = number_or(a, "x_radius", "assumptions", sp.x_radius);
            sp.psi_radius = number_or(a, "psi_radius", "assumptions", sp.psi_radius);
            sp.u_radius = number_or(a, "u_radius", "assumptions", sp.u_radius);
            sp.x1_lo = number_or(a, "x1_lo", "assumptions", sp.x1_lo);
            sp.x1_hi = number_or(a, "x1_hi", "assumptions", sp.x1_hi);
            sp.x1_count = static_cast<int>(number_or(a, "x1_count", "assumptions", sp.x1_count));
            sp.tolerance = number_or(a, "tolerance", "assumptions", sp.tolerance);
            sp.workers = static_cast<int>(number_or(a, "workers", "assumptions", sp.workers));
        }
        if (j.contains("seed")) {
            if (!j.at("seed").is_number_unsigned()) {
                throw ConfigError("seed: expected a nonnegative integer");
            }
            cfg.sampler.seed = j.at("seed").get<std::uint64_t>();
        }
        if (j.contains("verify")) {
            const auto& v = j.at("verify");
            cfg.verify.x1_lo = number_or(v, "x1_lo", "verify", cfg.verify.x1_lo);
            cfg.verify.x1_hi = number_or(v, "x1_hi", "verify", cfg.verify.x1_hi);
            cfg.verify.grid = static_cast<int>(number_or(v, "grid", "verify", cfg.verify.grid));
        }
        if (j.contains("trajectory")) {
            cfg.trajectory = resolve(j.at("trajectory").get<std::string>());
            if (!std::filesystem::exists(*cfg.trajectory)) {
                throw ConfigError("trajectory: " + *cfg.trajectory + " does not exist");
            }
        }
        if (j.contains("monitor")) {
            const auto& m = j.at("monitor");
            cfg.monitor_tol = number_or(m, "tol", "monitor", cfg.monitor_tol);
            cfg.monitor_stride = static_cast<int>(number_or(m, "stride", "monitor", cfg.monitor_stride));
        }
        if (j.contains("output")) {
            cfg.out_dir = resolve(j.at("output").value("dir", std::string(".")));
        }
    } catch (const InvalidSpec& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExampleSystem build_system(const RunConfig& cfg) {
    ExampleSystem sys = build_example(cfg.example);
    sys.envelope.sigma = cfg.sigma;
    sys.envelope.ratio_min = cfg.ratio_min;
    sys.envelope.ratio_max = cfg.ratio_max;
    return sys;
}

json gains_to_json(const GainSet& g) {
    return json{{"n", g.n},
                {"g_tilde", vec_json(g.g_tilde)},
                {"k_tilde", vec_json(g.k_tilde)},
                {"P_o", matrix_json(g.P_o)},
                {"P_c", matrix_json(g.P_c)},
                {"nu_o", g.nu_o},
                {"nu_tilde_o", g.nu_tilde_o},
                {"nu_o_lower", g.nu_o_lower},
                {"nu_o_upper", g.nu_o_upper},
                {"nu_c", g.nu_c},
                {"nu_c_lower", g.nu_c_lower},
                {"nu_c_upper", g.nu_c_upper},
                {"g_bar", g.g_bar}};
}

GainSet gains_from_json(const json& j) {
    GainSet g;
    try {
        g.n = j.at("n").get<int>();
        g.g_tilde = to_vec(json_doubles(j.at("g_tilde"), "gains.g_tilde"));
        g.k_tilde = to_vec(json_doubles(j.at("k_tilde"), "gains.k_tilde"));
        g.P_o = matrix_from(j.at("P_o"), "gains.P_o");
        g.P_c = matrix_from(j.at("P_c"), "gains.P_c");
        g.nu_o = j.at("nu_o").get<double>();
        g.nu_tilde_o = j.at("nu_tilde_o").get<double>();
        g.nu_o_lower = j.at("nu_o_lower").get<double>();
        g.nu_o_upper = j.at("nu_o_upper").get<double>();
        g.nu_c = j.at("nu_c").get<double>();
        g.nu_c_lower = j.at("nu_c_lower").get<double>();
        g.nu_c_upper = j.at("nu_c_upper").get<double>();
        g.g_bar = j.at("g_bar").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("gains: ") + e.what());
    }
    const auto m = g.n - 1;
    if (g.g_tilde.size() != m || g.k_tilde.size() != m || g.P_o.rows() != m || g.P_c.rows() != m) {
        throw ConfigError("gains: dimensions inconsistent with n");
    }
    return g;
}

void write_gains(const GainSet& g, const CoupledMargins& margins, const std::string& path) {
    json j = gains_to_json(g);
    j["margins"] = {{"observer_lyapunov", margins.observer_lyapunov},
                    {"observer_coupling", margins.observer_coupling},
                    {"controller_lyapunov", margins.controller_lyapunov},
                    {"controller_coupling", margins.controller_coupling},
                    {"gain_bound", margins.gain_bound},
                    {"worst_x1_observer", margins.worst_x1_observer},
                    {"worst_x1_controller", margins.worst_x1_controller},
                    {"certified", margins.passed()}};
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path);
    }
    out << j.dump(2) << "\n";
}

GainSet read_gains(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open gains artifact " + path);
    }
    try {
        return gains_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("gains artifact " + path + ": " + e.what());
    }
}

json params_to_json(const ControllerParams& p) {
    return json{{"c_u", p.c_u},
                {"c_theta", p.c_theta},
                {"c1", p.c1},
                {"c2", p.c2},
                {"c3", p.c3},
                {"c4", p.c4},
                {"c_psi1", p.c_psi1},
                {"c_psi2", p.c_psi2},
                {"nu_u", p.nu_u},
                {"vartheta1_star", p.vartheta1_star},
                {"a_theta", p.a_theta},
                {"eps_r", p.eps_r},
                {"R_bar", p.R_bar},
                {"Omega_bar", p.Omega_bar},
                {"R_u_bar", p.R_u_bar},
                {"Omega_u_bar", p.Omega_u_bar},
                {"pi_k", p.pi_k},
                {"c_factor", p.c_factor},
                {"c_psi_factor", p.c_psi_factor},
                {"u_tilde_sign", p.u_tilde_sign},
                {"c", p.c},
                {"c_psi", p.c_psi},
                {"nu_a", p.nu_a},
                {"nu_b", p.nu_b},
                {"Delta_tilde", p.Delta_tilde},
                {"c_psi_tilde", p.c_psi_tilde},
                {"k_psi1", p.k_psi1}};
}

} // namespace delayscale
