#include "delayscale/dde_sim.hpp"

#include "delayscale/errors.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <chrono>
#include <cmath>
#include <cstdio>

namespace delayscale {

DdeOutcome integrate_dde(const DdeRhs& rhs, const Vec& z0, const DdeOptions& opts) {
    if (!(opts.h > 0.0) || opts.steps < 0) {
        throw InvalidSpec("integrate_dde: need h > 0 and a nonnegative step count");
    }
    DdeOutcome out;
    out.history = HistoryBuffer(opts.t0, opts.max_delay, opts.initial);
    auto& hist = out.history;
    const auto initial_at = [&](double tau) -> Vec {
        if (tau < opts.t0 - opts.max_delay - 1e-12 * std::max(1.0, std::abs(tau))) {
            throw HistoryUnderflow("delayed argument before the initial-history window", tau);
        }
        return opts.initial.state ? opts.initial.state(tau) : z0;
    };
    const auto delayed = [&](double ts, const Vec& zs) -> Vec {
        if (!opts.delay) {
            return zs;
        }
        const double d = opts.delay(ts);
        if (!(d > 0.0)) {
            return zs;
        }
        const double tau = ts - d;
        if (tau < opts.t0) {
            return initial_at(tau);
        }
        if (hist.empty()) {
            return zs;
        }
        return tau > hist.t_end() ? hist.extrapolate(tau) : hist.lookup(tau);
    };
    const auto f = [&](double ts, const Vec& zs) { return rhs(ts, zs, delayed(ts, zs)); };

    Vec z = z0;
    const double h = opts.h;
    long k = 0;
    try {
        for (; k < opts.steps; ++k) {
            const double t = opts.t0 + static_cast<double>(k) * h;
            const Vec k1 = f(t, z);
            hist.push(t, z, k1);
            const Vec k2 = f(t + 0.5 * h, z + (0.5 * h) * k1);
            const Vec k3 = f(t + 0.5 * h, z + (0.5 * h) * k2);
            const Vec k4 = f(t + h, z + h * k3);
            z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const double t_next = opts.t0 + static_cast<double>(k + 1) * h;
            for (Eigen::Index i = 0; i < z.size(); ++i) {
                if (!std::isfinite(z[i])) {
                    throw IntegrationBlowUp(fmt::format("non-finite state component {} at t={}", i, t_next),
                                            static_cast<std::size_t>(i));
                }
            }
            if (opts.after_step && !opts.after_step(k + 1, t_next, z)) {
                out.halted = true;
                out.halt_reason = "stopped by step callback";
                ++k;
                break;
            }
        }
    } catch (const IntegrationBlowUp& e) {
        out.halted = true;
        out.halt_reason = e.what();
        out.halt_component = e.component();
    } catch (const NumericFailure& e) {
        out.halted = true;
        out.halt_reason = e.what();
    }
    out.steps_done = k;
    // Close the history with the last accepted state.
    const double t_last = opts.t0 + static_cast<double>(k) * h;
    if (hist.empty() || hist.t_end() < t_last) {
        bool finite = true;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            finite = finite && std::isfinite(z[i]);
        }
        if (finite) {
            Vec d = Vec::Zero(z.size());
            try {
                d = f(t_last, z);
            } catch (const Error&) {
                if (!hist.empty()) {
                    d = (z - hist.state(hist.size() - 1)) / (t_last - hist.t_end());
                }
            }
            hist.push(t_last, z, d);
        }
    }
    return out;
}

Vec StateLayout::pack(const Vec& x, const Vec& psi, const ControllerState& c) const {
    Vec z(size());
    z.segment(this->x(), n) = x;
    if (n_psi > 0) {
        z.segment(this->psi(), n_psi) = psi;
    }
    z.segment(xhat(), n - 1) = c.xhat.size() == n - 1 ? c.xhat : Vec(Vec::Zero(n - 1));
    z[zeta()] = c.zeta;
    z[r()] = c.r;
    z[r_u()] = c.r_u;
    z[theta_hat()] = c.theta_hat;
    return z;
}

ControllerState StateLayout::controller(const Vec& z) const {
    ControllerState c;
    c.xhat = z.segment(xhat(), n - 1);
    c.zeta = z[zeta()];
    c.r = z[r()];
    c.r_u = z[r_u()];
    c.theta_hat = z[theta_hat()];
    return c;
}

void SimConfig::validate(const PlantModel& model, const ControllerParams& params) const {
    if (!(h > 0.0) || !(T > 0.0)) {
        throw InvalidSpec("sim: need h > 0 and T > 0");
    }
    if (x0.size() != model.n || psi0.size() != model.n_psi) {
        throw InvalidSpec("sim: initial state dimensions do not match the plant");
    }
    if (controller0.xhat.size() != 0 && controller0.xhat.size() != model.n - 1) {
        throw InvalidSpec("sim: xhat(0) must have n-1 entries");
    }
    if (!(controller0.r >= 1.0) || !(controller0.r_u >= 1.0) || !(controller0.theta_hat >= params.a_theta)) {
        throw InvalidSpec("sim: need r(0) >= 1, r_u(0) >= 1 and theta_hat(0) >= a_theta");
    }
    if (decimation < 1) {
        throw InvalidSpec("sim: decimation must be at least 1");
    }
    if (history_mode != "constant" && history_mode != "zero") {
        throw InvalidSpec("sim: history mode must be 'constant' or 'zero'");
    }
    if (!(blowup_bound > 0.0)) {
        throw InvalidSpec("sim: blow-up bound must be positive");
    }
}

DdeRhs closed_loop_rhs(const PlantModel& model, const Controller& ctrl) {
    const StateLayout L{model.n, model.n_psi};
    return [&model, &ctrl, L](double t, const Vec& z, const Vec& zd) {
        const int n = L.n;
        const ControllerState s = L.controller(z);
        const Vec x = z.segment(L.x(), n);
        const Vec psi = z.segment(L.psi(), L.n_psi);
        const ControllerDerivs cd = ctrl.step(s, x[0], x[n - 1]);
        DelayedSample past{zd.segment(L.x(), n), zd.segment(L.psi(), L.n_psi), L.u(zd)};
        const PlantDerivative pd = eval_plant_rhs(model, t, x, psi, cd.u, past);
        Vec dz(L.size());
        dz.segment(L.x(), n) = pd.x_dot;
        if (L.n_psi > 0) {
            dz.segment(L.psi(), L.n_psi) = pd.psi_dot;
        }
        dz.segment(L.xhat(), n - 1) = cd.xhat_dot;
        dz[L.zeta()] = cd.zeta_dot;
        dz[L.r()] = cd.r_dot;
        dz[L.r_u()] = cd.r_u_dot;
        dz[L.theta_hat()] = cd.theta_hat_dot;
        return dz;
    };
}

TrajectoryRow make_row(const PlantModel& model, const Controller& ctrl, double t, const Vec& z, double Delta) {
    const StateLayout L{model.n, model.n_psi};
    TrajectoryRow row;
    row.t = t;
    row.x = z.segment(L.x(), L.n);
    row.psi = z.segment(L.psi(), L.n_psi);
    row.xhat = z.segment(L.xhat(), L.n - 1);
    row.zeta = z[L.zeta()];
    row.r = z[L.r()];
    row.r_u = z[L.r_u()];
    row.theta_hat = z[L.theta_hat()];
    row.Delta = Delta;
    const ControllerState s = L.controller(z);
    row.u = L.u(z);
    try {
        const ControllerDerivs cd = ctrl.step(s, row.x[0], row.x[L.n - 1]);
        row.u_tilde = cd.u_tilde;
        row.varpi_norm = cd.varpi.norm();
        row.diag = cd.diag;
        row.u_d = model.mu(t, row.x, row.psi, row.u) - row.u_tilde;
        row.eps_norm = ctrl.scaled_error(s, row.x).norm();
    } catch (const Error&) {
        const double nan = std::nan("");
        row.u_tilde = row.u_d = row.eps_norm = row.varpi_norm = nan;
    }
    return row;
}

SimResult simulate(const PlantModel& model, const Controller& ctrl, const SimConfig& cfg) {
    cfg.validate(model, ctrl.params());
    const auto wall0 = std::chrono::steady_clock::now();
    const StateLayout L{model.n, model.n_psi};
    const DelayProfile delay = cfg.delay.value_or(model.delay);
    const Vec z0 = L.pack(cfg.x0, cfg.psi0, cfg.controller0);

    SimResult res;
    res.n = model.n;
    res.n_psi = model.n_psi;
    res.h = cfg.h;
    res.decimation = cfg.decimation;

    DdeOptions opts;
    opts.h = cfg.h;
    opts.steps = static_cast<long>(std::floor(cfg.T / cfg.h + 1e-9));
    opts.delay = [delay](double t) { return delay.value(t); };
    opts.max_delay = delay.max_delay();
    if (cfg.custom_history) {
        opts.initial = *cfg.custom_history;
    } else if (cfg.history_mode == "zero") {
        Vec zh = z0;
        zh.segment(L.x(), L.n).setZero();
        zh.segment(L.psi(), L.n_psi).setZero();
        zh.segment(L.xhat(), L.n - 1).setZero();
        zh[L.zeta()] = 0.0;
        opts.initial.state = [zh](double) { return zh; };
    } else {
        opts.initial.state = [z0](double) { return z0; };
    }

    int r_case = 0;
    int ru_case = 0;
    const auto record = [&](double t, const Vec& z) {
        TrajectoryRow row = make_row(model, ctrl, t, z, delay.value(t));
        const int rc = row.r >= row.diag.R ? 1 : -1;
        const int uc = row.r_u >= row.diag.R_u ? 1 : -1;
        if (rc != r_case) {
            res.events.push_back({t, "r-case", rc > 0 ? "r >= R" : "r < R"});
            r_case = rc;
        }
        if (uc != ru_case) {
            res.events.push_back({t, "r_u-case", uc > 0 ? "r_u >= R_u" : "r_u < R_u"});
            ru_case = uc;
        }
        res.rows.push_back(std::move(row));
    };
    record(0.0, z0);

    std::string bound_violation;
    opts.after_step = [&](long step, double t, const Vec& z) {
        // Plant, observer and input channels are held to the bound; the scaling
        // and adaptation parameters only need to stay finite.
        const double u = L.u(z);
        const auto check = [&](const char* name, double v) {
            if (v > cfg.blowup_bound && bound_violation.empty()) {
                bound_violation = fmt::format("{} norm {:.3e} exceeds bound at t={}", name, v, t);
            }
        };
        check("x", z.segment(L.x(), L.n).norm());
        check("psi", z.segment(L.psi(), L.n_psi).norm());
        check("xhat", z.segment(L.xhat(), L.n - 1).norm());
        check("zeta", std::abs(z[L.zeta()]));
        check("u", std::abs(u));
        if (step % cfg.decimation == 0 || !bound_violation.empty()) {
            record(t, z);
        }
        return bound_violation.empty();
    };

    DdeOutcome o = integrate_dde(closed_loop_rhs(model, ctrl), z0, opts);
    res.steps = o.steps_done;
    if (o.halted) {
        res.blew_up = true;
        const double t = static_cast<double>(o.steps_done) * cfg.h;
        res.events.push_back({t, "blow-up", bound_violation.empty() ? o.halt_reason : bound_violation});
    }
    res.history = std::move(o.history);
    const auto& last = res.history.state(res.history.size() - 1);
    res.terminal_x_norm = last.segment(L.x(), L.n).norm();
    res.terminal_psi_norm = last.segment(L.psi(), L.n_psi).norm();
    res.terminal_xhat_norm = last.segment(L.xhat(), L.n - 1).norm();
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return res;
}

std::vector<std::string> csv_header(int n, int n_psi) {
    std::vector<std::string> h{"t"};
    for (int i = 1; i <= n; ++i) {
        h.push_back(fmt::format("x{}", i));
    }
    for (int i = 1; i <= n_psi; ++i) {
        h.push_back(fmt::format("psi{}", i));
    }
    for (int i = 2; i <= n; ++i) {
        h.push_back(fmt::format("xhat{}", i));
    }
    for (const char* c : {"zeta", "r", "r_u", "theta_hat", "u", "u_tilde", "u_d", "eps_norm", "varpi_norm", "Delta"}) {
        h.emplace_back(c);
    }
    return h;
}

void write_csv(const SimResult& result, const std::string& path) {
    auto out = fmt::output_file(path);
    const auto header = csv_header(result.n, result.n_psi);
    out.print("{}\n", fmt::join(header, ","));
    for (const auto& row : result.rows) {
        std::vector<double> v{row.t};
        v.insert(v.end(), row.x.begin(), row.x.end());
        v.insert(v.end(), row.psi.begin(), row.psi.end());
        v.insert(v.end(), row.xhat.begin(), row.xhat.end());
        for (double c : {row.zeta, row.r, row.r_u, row.theta_hat, row.u, row.u_tilde, row.u_d, row.eps_norm,
                         row.varpi_norm, row.Delta}) {
            v.push_back(c);
        }
        out.print("{:.17e}\n", fmt::join(v, ","));
    }
}

} // namespace delayscale
