#pragma once

// Gain functions g_i, k_i and Lyapunov matrices for the observer-context and
// controller-context coupled Lyapunov inequalities
//
//   P_o A_o(x1) + A_o^T P_o <= -nu_o I - nu~_o phi23(x1) C^T C,
//   nu_o_lower I <= P_o D~ + D~ P_o <= nu_o_upper I,
//   P_c A_c(x1) + A_c^T P_c <= -nu_c phi23(x1) I,
//   nu_c_lower I <= P_c D~ + D~ P_c <= nu_c_upper I,
//
// with D~ = diag(1..n-1) - I/2. Gains are parameterized as
// g_i = g~_i phi23(x1), k_i = k~_i phi23(x1), so A_o = phi23 * A~_o(rho) where
// rho collects the superdiagonal ratios phi_(j,j+1)/phi23 confined by the
// cascading-dominance bounds.

#include "delayscale/model.hpp"

#include <vector>

namespace delayscale {

struct SynthesisOptions {
    std::vector<double> observer_poles;   // empty: -2, -3, ..., -n
    std::vector<double> controller_poles; // empty: -1, -1.5, ..., -(n/2)
    int rho_grid = 50;                    // points per ratio dimension
    int max_retries = 4;                  // pole-magnitude doublings on failure
    long max_grid_points = 200000;        // beyond this only box vertices are swept
};

struct ObserverGains {
    Vec g_tilde;
    Mat P_o;
    double nu_tilde = 0.0; // certified grid minimum of -lambda_max(P A~ + A~^T P)
    double nu_o = 0.0;
    double nu_tilde_o = 0.0;
    double nu_o_lower = 0.0;
    double nu_o_upper = 0.0;
    double g_bar = 0.0;
    std::vector<double> poles;
    std::vector<double> worst_rho;
    int attempts = 0;
};

struct ControllerGains {
    Vec k_tilde;
    Mat P_c;
    double nu_c = 0.0;
    double nu_c_lower = 0.0;
    double nu_c_upper = 0.0;
    std::vector<double> poles;
    std::vector<double> worst_rho;
    int attempts = 0;
};

struct GainSet {
    int n = 2;
    Vec g_tilde; // g~_2..g~_n
    Vec k_tilde; // k~_2..k~_n
    Mat P_o;
    Mat P_c;
    double nu_o = 0.0;
    double nu_tilde_o = 0.0;
    double nu_o_lower = 0.0;
    double nu_o_upper = 0.0;
    double nu_c = 0.0;
    double nu_c_lower = 0.0;
    double nu_c_upper = 0.0;
    double g_bar = 0.0;

    [[nodiscard]] double lambda_max_Po() const;
    [[nodiscard]] double lambda_max_Pc() const;
    // Same matrices and constants, gains multiplied by s.
    [[nodiscard]] GainSet scaled(double s) const;
};

// A~_o(rho) and A~_c(rho) for the factored families; rho holds the
// superdiagonal entries 2..m-1 (entry 1 is identically one), m = n-1.
[[nodiscard]] Mat observer_family_matrix(const Vec& g_tilde, const std::vector<double>& rho);
[[nodiscard]] Mat controller_family_matrix(const Vec& k_tilde, const std::vector<double>& rho);
// Box of admissible superdiagonal entries implied by the ratio bounds.
[[nodiscard]] std::vector<std::pair<double, double>> rho_box(const BoundEnvelope& env, int n);
[[nodiscard]] Mat scaling_weight(int m); // D~ = diag(1..m) - I/2

[[nodiscard]] ObserverGains synthesize_observer_gains(const BoundEnvelope& env, int n,
                                                      const SynthesisOptions& opts = {});
[[nodiscard]] ControllerGains synthesize_controller_gains(const BoundEnvelope& env, int n,
                                                          const SynthesisOptions& opts = {});
[[nodiscard]] GainSet synthesize_gains(const BoundEnvelope& env, int n, const SynthesisOptions& opts = {});

// Unfactored A_o(x1), A_c(x1) built from the plant's phi functions.
[[nodiscard]] Mat observer_matrix(const GainSet& gains, const PlantModel& model, double x1);
[[nodiscard]] Mat controller_matrix(const GainSet& gains, const PlantModel& model, double x1);

struct CoupledMargins {
    double observer_lyapunov = 0.0;
    double observer_coupling = 0.0;
    double controller_lyapunov = 0.0;
    double controller_coupling = 0.0;
    double gain_bound = 0.0; // min of g_bar*phi23 - |G|, zero up to rounding by construction
    double worst_x1_observer = 0.0;
    double worst_x1_controller = 0.0;

    [[nodiscard]] bool passed() const {
        return observer_lyapunov > 0.0 && observer_coupling > 0.0 && controller_lyapunov > 0.0 &&
               controller_coupling > 0.0;
    }
};

// End-to-end certificate: sweeps x1 directly and evaluates all four inequalities.
[[nodiscard]] CoupledMargins verify_coupled_lyapunov(const GainSet& gains, const PlantModel& model, double x1_lo,
                                                     double x1_hi, int grid);

} // namespace delayscale
