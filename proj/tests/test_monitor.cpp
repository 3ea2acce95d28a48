#include "support.hpp"

#include "delayscale/dde_sim.hpp"
#include "delayscale/errors.hpp"
#include "delayscale/monitor.hpp"

#include <doctest.h>

using namespace delayscale;
using namespace testing_support;

namespace {

// Smooth synthetic closed-loop path on a uniform grid with exact derivatives.
// `rate` slows the path down so a trapezoid reference stays accurate.
HistoryBuffer synthetic_history(double h, double T, double max_delay, double rate = 1.0) {
    const StateLayout L{4, 2};
    const auto state = [L, rate](double s) {
        const double t = rate * s;
        ControllerState c;
        c.xhat = Vec(3);
        c.xhat << 0.1 * std::cos(t), -0.05 * std::sin(2 * t), 0.02 * t;
        c.zeta = 0.1 * std::sin(t);
        c.r = 1.0 + 0.1 * t * t;
        c.r_u = 1.0 + 0.05 * t;
        c.theta_hat = 1.0 + 0.01 * t;
        Vec x(4), psi(2);
        x << 0.2 * std::cos(t), 0.1 * std::sin(t), -0.1 * std::cos(3 * t), 0.05 * t;
        psi << 0.1 * std::exp(-t), 0.05 * std::sin(t);
        return L.pack(x, psi, c);
    };
    HistoryBuffer hist(0.0, max_delay, InitialHistory{state});
    const double e = 1e-6;
    for (long k = 0; k <= std::lround(T / h); ++k) {
        const double t = h * static_cast<double>(k);
        hist.push(t, state(t), (state(t + e) - state(t - e)) / (2 * e));
    }
    return hist;
}

} // namespace

TEST_CASE("delay integral: Simpson against a refined trapezoid") {
    const auto& f = benchmark();
    const LyapunovMonitor mon(f.sys.model, f.sys.envelope, f.ctrl);
    const double h = 0.01;
    const auto hist = synthetic_history(h, 2.0, 0.4, 0.2);
    const double t = 1.5, Delta = 0.3;
    const double simpson = mon.delay_integral(hist, t, Delta);
    const long N = std::lround(10 * Delta / h);
    const double step = Delta / static_cast<double>(N);
    double trap = 0.0;
    for (long k = 0; k <= N; ++k) {
        const double tau = t - Delta + step * static_cast<double>(k);
        const double w = (k == 0 || k == N) ? 0.5 : 1.0;
        trap += w * mon.delay_integrand(tau, hist.lookup(tau));
    }
    trap *= step / (1.0 - f.sys.envelope.Delta_bar);
    CHECK(simpson > 0.0);
    CHECK(std::abs(simpson - trap) <= 1e-6 * std::max(1.0, std::abs(trap)));
}

TEST_CASE("zero delay carries no delay energy") {
    const auto& f = benchmark();
    const LyapunovMonitor mon(f.sys.model, f.sys.envelope, f.ctrl);
    const auto hist = synthetic_history(0.01, 1.0, 0.4);
    CHECK(mon.delay_integral(hist, 0.5, 0.0) == 0.0);
    CHECK(mon.compute_snapshot(hist, 0.5, 0.0).V_delay == 0.0);
}

TEST_CASE("all-zero trajectory holds only the adaptation energy") {
    const auto& f = benchmark();
    const LyapunovMonitor mon(f.sys.model, f.sys.envelope, f.ctrl);
    SimConfig c;
    c.h = 1e-3;
    c.T = 0.5;
    c.x0 = Vec::Zero(4);
    c.psi0 = Vec::Zero(2);
    const auto res = simulate(f.sys.model, f.ctrl, c);
    const auto snaps = mon.snapshots(res.history, f.sys.model.delay, 50);
    REQUIRE(snaps.size() >= 10);
    const double expected = std::pow(1.0 - f.cp.theta_star, 2) / (2.0 * f.cp.c_theta);
    for (const auto& s : snaps) {
        CHECK(s.V_o == 0.0);
        CHECK(s.V_c == 0.0);
        CHECK(s.V_u == 0.0);
        CHECK(s.V_psi_scaled == 0.0);
        CHECK(s.V_delay == 0.0);
        CHECK(s.V_total == doctest::Approx(expected).epsilon(1e-15));
    }
    CHECK(check_decrease(snaps, 1e-2).passed());
}

TEST_CASE("snapshot components are nonnegative on a nonzero path") {
    const auto& f = benchmark();
    const LyapunovMonitor mon(f.sys.model, f.sys.envelope, f.ctrl);
    const auto hist = synthetic_history(0.01, 2.0, 0.4);
    for (double t : {0.5, 1.0, 1.9}) {
        const auto s = mon.compute_snapshot(hist, t, 0.3);
        CHECK(s.V_o > 0.0);
        CHECK(s.V_c > 0.0);
        CHECK(s.V_u >= 0.0);
        CHECK(s.V_psi_scaled > 0.0);
        CHECK(s.V_delay > 0.0);
        CHECK(s.decay > 0.0);
        CHECK(s.V_total == doctest::Approx(s.V_x + f.cp.c_psi * s.V_psi_scaled + f.cp.c_u * s.V_u + s.V_adapt +
                                            s.V_delay));
    }
}

TEST_CASE("decrease check") {
    std::vector<LyapunovSnapshot> s(5);
    for (int k = 0; k < 5; ++k) {
        s[k].t = 0.1 * k;
        s[k].V_total = 10.0 - k;
        s[k].decay = 1.0;
    }
    auto rep = check_decrease(s, 1e-2);
    CHECK(rep.passed());
    CHECK(rep.samples == 5);
    s[3].V_total = 9.5;
    rep = check_decrease(s, 1e-2);
    CHECK_FALSE(rep.passed());
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].index == 2);
    CHECK(rep.worst_excess > 0.0);
    // Small increases within tol*h*(1+V) are tolerated.
    s[3].V_total = s[2].V_total + 0.5e-2 * 0.1 * (1.0 + s[2].V_total);
    CHECK(check_decrease(s, 1e-2).violations.empty());
}

TEST_CASE("convergence metrics on a synthetic result") {
    SimResult res;
    res.n = 4;
    res.n_psi = 2;
    const StateLayout L{4, 2};
    res.history = HistoryBuffer(0.0, 0.0, {});
    for (int k = 0; k <= 100; ++k) {
        const double t = 0.1 * k;
        ControllerState c;
        c.xhat = Vec::Zero(3);
        c.r = std::min(1.0 + t, 5.0);
        c.r_u = 2.0;
        c.theta_hat = 1.0;
        Vec x = Vec::Zero(4);
        x[0] = std::exp(-t);
        res.history.push(t, L.pack(x, Vec::Zero(2), c), Vec::Zero(L.size()));
    }
    auto m = convergence_metrics(res);
    CHECK(m.initial_norm == 1.0);
    CHECK(m.crossing.at(0.1) == doctest::Approx(2.4));
    CHECK(m.crossing.at(1e-3) == doctest::Approx(7.0));
    CHECK(m.converged());
    m.blew_up = true;
    CHECK_FALSE(m.converged());
    CHECK(m.r.nondecreasing);
    CHECK(m.r.plateaued());
    CHECK(m.r.terminal == 5.0);
    CHECK(m.sup_norms.at("x") == 1.0);
}

TEST_CASE("history rebuilt from rows") {
    std::vector<TrajectoryRow> rows(3);
    for (int k = 0; k < 3; ++k) {
        auto& r = rows[k];
        r.t = 0.5 * k;
        r.x = Vec::Constant(4, k);
        r.psi = Vec::Zero(2);
        r.xhat = Vec::Zero(3);
        r.r = 1.0 + k;
        r.r_u = 1.0;
        r.theta_hat = 1.0;
    }
    const auto h = history_from_rows(rows, 4, 2, 0.3);
    CHECK(h.size() == 3);
    CHECK(h.lookup(0.5)[0] == 1.0);
    CHECK(h.lookup(0.75)[0] == doctest::Approx(1.5));
    CHECK(h.lookup(-0.2)[0] == 0.0);
    CHECK_THROWS_AS((void)history_from_rows({}, 4, 2, 0.3), InvalidSpec);
}
