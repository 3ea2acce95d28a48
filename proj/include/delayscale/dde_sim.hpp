#pragma once

// Fixed-step RK4 for delay differential equations, and the closed loop of
// plant plus dynamic controller built on it.

#include "delayscale/controller.hpp"
#include "delayscale/history.hpp"
#include "delayscale/model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace delayscale {

// z' = rhs(t, z, z(t - Delta(t)))
using DdeRhs = std::function<Vec(double t, const Vec& z, const Vec& z_delayed)>;

struct DdeOptions {
    double t0 = 0.0;
    double h = 1e-3;
    long steps = 0;
    std::function<double(double)> delay; // empty: no delay
    double max_delay = 0.0;
    InitialHistory initial;
    // Called after every accepted step with the new node; returning false halts.
    std::function<bool(long step, double t, const Vec& z)> after_step;
};

struct DdeOutcome {
    HistoryBuffer history;
    long steps_done = 0;
    bool halted = false;
    std::string halt_reason;
    std::size_t halt_component = 0;
};

// Classical four-stage RK4. Delayed arguments come from the history per stage;
// a zero delay reads the stage value itself. IntegrationBlowUp and
// NumericFailure raised by rhs halt the run and are reported in the outcome.
[[nodiscard]] DdeOutcome integrate_dde(const DdeRhs& rhs, const Vec& z0, const DdeOptions& opts);

// Layout of the closed-loop state vector.
struct StateLayout {
    int n = 2;
    int n_psi = 0;
    [[nodiscard]] int x() const { return 0; }
    [[nodiscard]] int psi() const { return n; }
    [[nodiscard]] int xhat() const { return n + n_psi; }
    [[nodiscard]] int zeta() const { return 2 * n + n_psi - 1; }
    [[nodiscard]] int r() const { return zeta() + 1; }
    [[nodiscard]] int r_u() const { return zeta() + 2; }
    [[nodiscard]] int theta_hat() const { return zeta() + 3; }
    [[nodiscard]] int size() const { return zeta() + 4; }

    [[nodiscard]] Vec pack(const Vec& x, const Vec& psi, const ControllerState& c) const;
    [[nodiscard]] ControllerState controller(const Vec& z) const;
    [[nodiscard]] double u(const Vec& z) const { return z[zeta()] - z[r_u()] * z[n - 1]; }
};

struct SimConfig {
    double h = 1e-3;
    double T = 10.0;
    Vec x0;
    Vec psi0;
    ControllerState controller0; // xhat empty means zeros
    std::string history_mode = "constant"; // "constant" or "zero"
    std::optional<InitialHistory> custom_history;
    std::optional<DelayProfile> delay;     // overrides the plant's profile
    int decimation = 1;
    double blowup_bound = 1e9;

    void validate(const PlantModel& model, const ControllerParams& params) const;
};

struct TrajectoryRow {
    double t = 0.0;
    Vec x, psi, xhat;
    double zeta = 0.0, r = 0.0, r_u = 0.0, theta_hat = 0.0;
    double u = 0.0, u_tilde = 0.0, u_d = 0.0;
    double eps_norm = 0.0, varpi_norm = 0.0;
    double Delta = 0.0;
    ControllerDiagnostics diag;
};

struct SimEvent {
    double t = 0.0;
    std::string kind;   // "blow-up", "r-case", "r_u-case"
    std::string detail;
};

struct SimResult {
    int n = 2;
    int n_psi = 0;
    double h = 0.0;
    int decimation = 1;
    std::vector<TrajectoryRow> rows;
    std::vector<SimEvent> events;
    HistoryBuffer history; // every step, full closed-loop state
    bool blew_up = false;
    double terminal_x_norm = 0.0, terminal_psi_norm = 0.0, terminal_xhat_norm = 0.0;
    double wall_seconds = 0.0;
    long steps = 0;
};

// Closed-loop right-hand side on the packed state.
[[nodiscard]] DdeRhs closed_loop_rhs(const PlantModel& model, const Controller& ctrl);

[[nodiscard]] SimResult simulate(const PlantModel& model, const Controller& ctrl, const SimConfig& cfg);

// Derived row quantities from a packed state.
[[nodiscard]] TrajectoryRow make_row(const PlantModel& model, const Controller& ctrl, double t, const Vec& z,
                                     double Delta);

void write_csv(const SimResult& result, const std::string& path);
[[nodiscard]] std::vector<std::string> csv_header(int n, int n_psi);

} // namespace delayscale
