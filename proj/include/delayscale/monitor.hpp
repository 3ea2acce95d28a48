#pragma once

// Truth-side evaluation of the composite Lyapunov function along a recorded
// trajectory. Owns everything the controller may not see: theta*, psi and the
// psi-dependent bounds.

#include "delayscale/controller.hpp"
#include "delayscale/dde_sim.hpp"
#include "delayscale/history.hpp"
#include "delayscale/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace delayscale {

struct LyapunovSnapshot {
    double t = 0.0;
    double V_o = 0.0;
    double V_c = 0.0;
    double V_x = 0.0;
    double V_u = 0.0;
    double V_psi_scaled = 0.0;
    double V_delay = 0.0;
    double V_adapt = 0.0;
    double V_total = 0.0;
    // Bracketed dissipation in the final decrease bound (V' <= -decay).
    double decay = 0.0;
};

// Signals reconstructed from a packed closed-loop state.
struct ClosedLoopSignals {
    Vec x, psi, eps, varpi;
    ControllerState ctrl;
    double u = 0.0, u_tilde = 0.0, u_d = 0.0;
};

class LyapunovMonitor {
  public:
    LyapunovMonitor(const PlantModel& model, const BoundEnvelope& env, const Controller& ctrl);

    [[nodiscard]] ClosedLoopSignals signals(double t, const Vec& z) const;
    // Integrand of the delay term at time pi, without the 1/(1-Delta_bar) factor.
    [[nodiscard]] double delay_integrand(double pi, const Vec& z) const;
    // Composite Simpson over [t - Delta(t), t] on an even resampling of the grid.
    [[nodiscard]] double delay_integral(const HistoryBuffer& hist, double t, double Delta) const;
    [[nodiscard]] LyapunovSnapshot compute_snapshot(const HistoryBuffer& hist, double t, double Delta) const;
    [[nodiscard]] std::vector<LyapunovSnapshot> snapshots(const HistoryBuffer& hist, const DelayProfile& delay,
                                                          int stride = 1) const;

  private:
    const PlantModel* model_;
    const BoundEnvelope* env_;
    const Controller* ctrl_;
    StateLayout layout_;
};

struct DecreaseViolation {
    std::size_t index = 0;
    double t = 0.0;
    double excess = 0.0;
};

struct DecreaseReport {
    std::size_t samples = 0;
    std::vector<DecreaseViolation> violations;
    std::size_t instantaneous_ok = 0;
    std::size_t instantaneous_total = 0;
    double worst_excess = 0.0;
    double worst_instantaneous = 0.0;

    [[nodiscard]] double instantaneous_fraction() const {
        return instantaneous_total == 0 ? 1.0
                                        : static_cast<double>(instantaneous_ok) / static_cast<double>(instantaneous_total);
    }
    [[nodiscard]] bool passed(double min_fraction = 0.99) const {
        return violations.empty() && instantaneous_fraction() >= min_fraction;
    }
};

// V(k+1) <= V(k) + tol*h*(1+V(k)) at every k, and the finite-difference rate
// against the averaged decay bound with slack tol*(1+V(k)).
[[nodiscard]] DecreaseReport check_decrease(const std::vector<LyapunovSnapshot>& snaps, double tol);

struct PlateauStat {
    double terminal = 0.0;
    double last_decile_variation = 0.0;
    bool nondecreasing = true;
    [[nodiscard]] bool plateaued(double rel = 1e-6) const {
        return last_decile_variation < rel * std::abs(terminal) || last_decile_variation == 0.0;
    }
};

struct ConvergenceMetrics {
    std::map<std::string, double> sup_norms; // x, psi, xhat, zeta, u, r, r_u, theta_hat
    double terminal_x = 0.0, terminal_psi = 0.0, terminal_xhat = 0.0;
    PlateauStat r, r_u, theta_hat;
    double initial_norm = 0.0; // |x| + |psi| at t = 0
    // First time |x| + |psi| falls below fraction * initial; negative when never.
    std::map<double, double> crossing;
    bool blew_up = false;

    [[nodiscard]] bool converged(double fraction = 1e-3) const;
};

[[nodiscard]] ConvergenceMetrics convergence_metrics(const SimResult& result);

// Rebuilds a history from CSV rows (state columns only); node derivatives by
// finite differences.
[[nodiscard]] HistoryBuffer history_from_rows(const std::vector<TrajectoryRow>& rows, int n, int n_psi,
                                              double max_delay, InitialHistory initial = {});
[[nodiscard]] std::vector<TrajectoryRow> read_csv(const std::string& path, int n, int n_psi);

} // namespace delayscale
