#include "delayscale/monitor.hpp"

#include "delayscale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace delayscale {

namespace {
double sq(double v) { return v * v; }
} // namespace

LyapunovMonitor::LyapunovMonitor(const PlantModel& model, const BoundEnvelope& env, const Controller& ctrl)
    : model_(&model), env_(&env), ctrl_(&ctrl), layout_{model.n, model.n_psi} {}

ClosedLoopSignals LyapunovMonitor::signals(double t, const Vec& z) const {
    ClosedLoopSignals s;
    const auto& L = layout_;
    s.x = z.segment(L.x(), L.n);
    s.psi = z.segment(L.psi(), L.n_psi);
    s.ctrl = L.controller(z);
    s.varpi = ctrl_->compute_varpi(s.ctrl, s.x[0]);
    s.eps = ctrl_->scaled_error(s.ctrl, s.x);
    s.u = L.u(z);
    s.u_tilde = ctrl_->compute_u_tilde(s.ctrl, s.x[0], s.varpi);
    s.u_d = model_->mu(t, s.x, s.psi, s.u) - s.u_tilde;
    return s;
}

double LyapunovMonitor::delay_integrand(double pi, const Vec& z) const {
    const auto& p = ctrl_->params();
    const ClosedLoopSignals s = signals(pi, z);
    const int n = layout_.n;
    const double nd = n;
    const double x1 = s.x[0];
    const double r = s.ctrl.r;
    const double th = s.ctrl.theta_hat;
    const double theta = model_->true_theta;
    const double v1 = ctrl_->compute_vartheta1(x1);
    const double G2 = env_->Gamma2(x1);
    const double gsb = env_->gamma_s_bar(x1);
    const double m1a2 = sq(env_->mu_bar1a(x1));
    const double K2 = sq(ctrl_->gains().k_tilde.norm() * model_->phi23(x1));
    const double w2 = s.varpi.squaredNorm();
    const double e2 = s.eps.squaredNorm();

    const double psi_block = theta * x1 * x1 + 3.0 * (w2 + e2) + 3.0 / std::sqrt(r) * sq(th) * sq(v1) * x1 * x1 +
                             2.0 * std::pow(r, 1.5) * gsb * K2 * w2 +
                             2.0 * gsb / std::pow(r, 2.0 * nd - 1.5) * sq(s.u_d);
    double weighted = 0.0;
    for (int j = 2; j <= n; ++j) {
        weighted += std::pow(r, 2.0 * j - 2.0) * (sq(s.varpi[j - 2]) + sq(s.eps[j - 2]));
    }
    const double mu1psi = layout_.n_psi > 0 ? env_->mu_bar1_psi(s.psi) : 0.0;
    return p.c_psi * G2 * psi_block + p.c_u / r * (p.c3 * theta * theta + p.c2 * sq(th) * sq(v1)) * m1a2 * x1 * x1 +
           p.c_u * p.c1 / std::pow(r, 2.0 * nd - 3.0) * weighted * m1a2 +
           p.c_u * p.c_psi1 / (2.0 * std::pow(r, 2.0 * nd - 1.5)) * sq(mu1psi);
}

double LyapunovMonitor::delay_integral(const HistoryBuffer& hist, double t, double Delta) const {
    if (!(Delta > 0.0)) {
        return 0.0;
    }
    const auto& times = hist.times();
    const double grid = times.size() >= 2 ? times[1] - times[0] : Delta / 2.0;
    auto N = static_cast<long>(std::ceil(Delta / (2.0 * grid) - 1e-9)) * 2;
    N = std::max<long>(N, 2);
    const double a = t - Delta;
    const double step = Delta / static_cast<double>(N);
    double sum = 0.0;
    for (long k = 0; k <= N; ++k) {
        const double tau = k == N ? t : a + step * static_cast<double>(k);
        const double w = (k == 0 || k == N) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        sum += w * delay_integrand(tau, hist.lookup(tau));
    }
    return sum * step / 3.0 / (1.0 - env_->Delta_bar);
}

LyapunovSnapshot LyapunovMonitor::compute_snapshot(const HistoryBuffer& hist, double t, double Delta) const {
    const auto& p = ctrl_->params();
    const auto& g = ctrl_->gains();
    const Vec z = hist.lookup(t);
    const ClosedLoopSignals s = signals(t, z);
    const double r = s.ctrl.r;
    const double nd = layout_.n;
    const double x1 = s.x[0];
    LyapunovSnapshot out;
    out.t = t;
    out.V_o = r * s.eps.dot(g.P_o * s.eps);
    out.V_c = r * s.varpi.dot(g.P_c * s.varpi) + 0.5 * (1.0 + 1.0 / r) * x1 * x1;
    out.V_x = p.c * out.V_o + out.V_c;
    const double log_ud = std::log1p(sq(s.u_d));
    out.V_u = log_ud / (2.0 * std::pow(r, nd) * pi_fn(s.ctrl.r_u, p.pi_k));
    const double Vpsi = layout_.n_psi > 0 ? env_->V_psi(s.psi) : 0.0;
    out.V_psi_scaled = Vpsi / std::pow(r, 2.0 * nd - 1.5);
    out.V_adapt = sq(s.ctrl.theta_hat - p.theta_star) / (2.0 * p.c_theta);
    out.V_delay = delay_integral(hist, t, Delta);
    out.V_total = out.V_x + p.c_psi * out.V_psi_scaled + p.c_u * out.V_u + out.V_adapt + out.V_delay;
    out.decay = r * r * (p.c * g.nu_o / 8.0) * s.eps.squaredNorm() +
                r * r * (g.nu_c / 8.0) * model_->phi23(x1) * s.varpi.squaredNorm() + p.vartheta1_star * x1 * x1 +
                (p.c_psi * env_->V_psi_lower / 2.0) * out.V_psi_scaled + p.nu_u * log_ud;
    return out;
}

std::vector<LyapunovSnapshot> LyapunovMonitor::snapshots(const HistoryBuffer& hist, const DelayProfile& delay,
                                                         int stride) const {
    std::vector<LyapunovSnapshot> out;
    stride = std::max(stride, 1);
    for (std::size_t k = 0; k < hist.size(); k += static_cast<std::size_t>(stride)) {
        const double t = hist.times()[k];
        out.push_back(compute_snapshot(hist, t, delay.value(t)));
    }
    return out;
}

DecreaseReport check_decrease(const std::vector<LyapunovSnapshot>& snaps, double tol) {
    DecreaseReport rep;
    rep.samples = snaps.size();
    for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
        const auto& a = snaps[k];
        const auto& b = snaps[k + 1];
        const double h = b.t - a.t;
        const double allowed = a.V_total + tol * h * (1.0 + a.V_total);
        const double excess = b.V_total - allowed;
        if (!(excess <= 0.0)) {
            rep.violations.push_back({k, a.t, excess});
            rep.worst_excess = std::max(rep.worst_excess, std::isfinite(excess) ? excess : 1e308);
        }
        const double rate = (b.V_total - a.V_total) / h;
        const double bound = -0.5 * (a.decay + b.decay) + tol * (1.0 + a.V_total);
        ++rep.instantaneous_total;
        if (rate <= bound) {
            ++rep.instantaneous_ok;
        } else {
            rep.worst_instantaneous = std::max(rep.worst_instantaneous, std::isfinite(rate - bound) ? rate - bound : 1e308);
        }
    }
    return rep;
}

bool ConvergenceMetrics::converged(double fraction) const {
    if (blew_up) {
        return false;
    }
    if (initial_norm == 0.0) {
        return terminal_x + terminal_psi == 0.0;
    }
    const auto it = crossing.find(fraction);
    return it != crossing.end() && it->second >= 0.0;
}

ConvergenceMetrics convergence_metrics(const SimResult& result) {
    ConvergenceMetrics m;
    m.blew_up = result.blew_up;
    const StateLayout L{result.n, result.n_psi};
    const auto& hist = result.history;
    for (const char* k : {"x", "psi", "xhat", "zeta", "u", "r", "r_u", "theta_hat"}) {
        m.sup_norms[k] = 0.0;
    }
    for (double f : {1e-1, 1e-2, 1e-3}) {
        m.crossing[f] = -1.0;
    }
    if (hist.empty()) {
        return m;
    }
    std::vector<double> rs, rus, ths;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        const Vec& z = hist.state(k);
        const double t = hist.times()[k];
        const double xn = z.segment(L.x(), L.n).norm();
        const double pn = z.segment(L.psi(), L.n_psi).norm();
        auto& s = m.sup_norms;
        s["x"] = std::max(s["x"], xn);
        s["psi"] = std::max(s["psi"], pn);
        s["xhat"] = std::max(s["xhat"], z.segment(L.xhat(), L.n - 1).norm());
        s["zeta"] = std::max(s["zeta"], std::abs(z[L.zeta()]));
        s["u"] = std::max(s["u"], std::abs(L.u(z)));
        s["r"] = std::max(s["r"], z[L.r()]);
        s["r_u"] = std::max(s["r_u"], z[L.r_u()]);
        s["theta_hat"] = std::max(s["theta_hat"], z[L.theta_hat()]);
        if (k == 0) {
            m.initial_norm = xn + pn;
        }
        for (auto& [f, when] : m.crossing) {
            if (when < 0.0 && m.initial_norm > 0.0 && xn + pn < f * m.initial_norm) {
                when = t;
            }
        }
        rs.push_back(z[L.r()]);
        rus.push_back(z[L.r_u()]);
        ths.push_back(z[L.theta_hat()]);
    }
    const Vec& last = hist.state(hist.size() - 1);
    m.terminal_x = last.segment(L.x(), L.n).norm();
    m.terminal_psi = last.segment(L.psi(), L.n_psi).norm();
    m.terminal_xhat = last.segment(L.xhat(), L.n - 1).norm();
    const auto plateau = [](const std::vector<double>& v) {
        PlateauStat p;
        p.terminal = v.back();
        for (std::size_t k = 1; k < v.size(); ++k) {
            // exact comparison: the scaling signals may never decrease
            if (!(v[k] >= v[k - 1])) {
                p.nondecreasing = false;
            }
        }
        const std::size_t start = v.size() - std::max<std::size_t>(1, v.size() / 10);
        const auto [lo, hi] = std::minmax_element(v.begin() + static_cast<long>(start), v.end());
        p.last_decile_variation = *hi - *lo;
        return p;
    };
    m.r = plateau(rs);
    m.r_u = plateau(rus);
    m.theta_hat = plateau(ths);
    return m;
}

HistoryBuffer history_from_rows(const std::vector<TrajectoryRow>& rows, int n, int n_psi, double max_delay,
                                InitialHistory initial) {
    if (rows.empty()) {
        throw InvalidSpec("trajectory has no rows");
    }
    const StateLayout L{n, n_psi};
    std::vector<Vec> zs;
    for (const auto& r : rows) {
        ControllerState c;
        c.xhat = r.xhat;
        c.zeta = r.zeta;
        c.r = r.r;
        c.r_u = r.r_u;
        c.theta_hat = r.theta_hat;
        zs.push_back(L.pack(r.x, r.psi, c));
    }
    if (!initial.state) {
        const Vec z0 = zs.front();
        initial.state = [z0](double) { return z0; };
    }
    HistoryBuffer hist(rows.front().t, max_delay, initial);
    const std::size_t N = rows.size();
    for (std::size_t k = 0; k < N; ++k) {
        Vec d = Vec::Zero(L.size());
        if (N >= 2) {
            const std::size_t a = k == 0 ? 0 : k - 1;
            const std::size_t b = k + 1 == N ? k : k + 1;
            d = (zs[b] - zs[a]) / (rows[b].t - rows[a].t);
        }
        hist.push(rows[k].t, zs[k], d);
    }
    return hist;
}

std::vector<TrajectoryRow> read_csv(const std::string& path, int n, int n_psi) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open trajectory " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("trajectory " + path + " is empty");
    }
    const auto expected = csv_header(n, n_psi);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            header.push_back(cell);
        }
    }
    if (header != expected) {
        throw ConfigError("trajectory " + path + " header does not match the plant dimensions");
    }
    std::vector<TrajectoryRow> rows;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                v.push_back(std::stod(cell));
            } catch (const std::exception&) {
                // stod rejects "nan"/"inf" spelled by fmt on some platforms
                v.push_back(cell.find("nan") != std::string::npos ? std::nan("")
                                                                  : std::numeric_limits<double>::infinity());
            }
        }
        if (v.size() != expected.size()) {
            throw ConfigError("trajectory " + path + ": wrong column count on line " + std::to_string(line_no));
        }
        TrajectoryRow r;
        std::size_t k = 0;
        r.t = v[k++];
        r.x = Vec(n);
        for (int i = 0; i < n; ++i) {
            r.x[i] = v[k++];
        }
        r.psi = Vec(n_psi);
        for (int i = 0; i < n_psi; ++i) {
            r.psi[i] = v[k++];
        }
        r.xhat = Vec(n - 1);
        for (int i = 0; i < n - 1; ++i) {
            r.xhat[i] = v[k++];
        }
        r.zeta = v[k++];
        r.r = v[k++];
        r.r_u = v[k++];
        r.theta_hat = v[k++];
        r.u = v[k++];
        r.u_tilde = v[k++];
        r.u_d = v[k++];
        r.eps_norm = v[k++];
        r.varpi_norm = v[k++];
        r.Delta = v[k++];
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace delayscale
