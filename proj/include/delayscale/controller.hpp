#pragma once

// Dynamic output-feedback controller: reduced-order observer x̂, dynamic
// extension zeta, scaling parameters r and r_u, adaptation parameter theta_hat.
// It reads only y = [x1, xn]; never psi, delayed signals or the delay itself.

#include "delayscale/gain_synthesis.hpp"
#include "delayscale/model.hpp"

#include <memory>
#include <mutex>
#include <vector>

namespace delayscale {

struct ControllerParams {
    // Free constants.
    double c_u = 1.0;
    double c_theta = 1.0;
    double c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0;
    double c_psi1 = 1.0;
    double c_psi2 = 1.0;
    double nu_u = 0.1;
    double vartheta1_star = 1.0;
    double a_theta = 1.0;
    double eps_r = 0.1;
    double R_bar = 1.0;
    double Omega_bar = 1.0;
    double R_u_bar = 1.0;
    double Omega_u_bar = 1.0;
    double pi_k = 1.0;
    // c and c_psi are set to these multiples of their lower bounds.
    double c_factor = 1.05;
    double c_psi_factor = 1.05;
    // Negative-control hook: -1 flips the sign of the nominal control.
    double u_tilde_sign = 1.0;

    // Derived (filled by make_controller_params).
    double c = 0.0;
    double c_psi = 0.0;
    double nu_a = 0.0;
    double nu_b = 0.0;
    double Delta_tilde = 1.0;
    double c_psi_tilde = 0.0;
    double k_psi1 = 0.0;
    double theta_star = 0.0; // monitor only
};

// Fills the derived constants from the free ones in `base`.
[[nodiscard]] ControllerParams make_controller_params(const GainSet& gains, const BoundEnvelope& env,
                                                      double true_theta, ControllerParams base = {});
// Lower bounds that c and c_psi must strictly exceed / meet.
[[nodiscard]] double c_lower_bound(const GainSet& gains);
[[nodiscard]] double c_psi_lower_bound(const ControllerParams& p, const BoundEnvelope& env);

struct ControllerState {
    Vec xhat; // x̂_2..x̂_n
    double zeta = 0.0;
    double r = 1.0;
    double r_u = 1.0;
    double theta_hat = 1.0;
};

// Terms that depend on x1 (and theta_hat, its rate) only.
struct StateTerms {
    double phi12 = 0.0, phi23 = 0.0, Gamma = 0.0, Gamma2 = 0.0, mu_bar1a = 0.0, gamma_s_bar = 0.0;
    double K_norm = 0.0, dK_norm = 0.0, G_norm = 0.0, Ac_norm = 0.0;
    double q1 = 0.0, q2 = 0.0;
    double vartheta1 = 0.0, vartheta1_prime = 0.0, dvartheta_dx1 = 0.0;
    double w1 = 0.0;
    double beta4 = 0.0, beta5 = 0.0, beta6 = 0.0, beta7 = 0.0, beta8 = 0.0;
    double w1_tilde = 0.0, q1_tilde = 0.0, q2_tilde = 0.0;
    double w1_bar = 0.0, w2_bar = 0.0;
    double q1_bar = 0.0, q2_bar = 0.0, q3_bar = 0.0, q4_bar = 0.0, q5_bar = 0.0;
};

// Terms that also depend on (x_n, u, r, r_dot, varpi).
struct InputTerms {
    double mu_bar = 0.0, mu_bar2 = 0.0, mu_sum1 = 0.0; // mu_sum1 = mu_bar1 + mu_tilde1
    double beta1 = 0.0, beta2 = 0.0, beta3 = 0.0;
    double Xi_u1 = 0.0, Xi_u1_bar = 0.0, Xi_u2_bar = 0.0;
    double u_d_bar = 0.0;
};

struct ScalingRate {
    double rate = 0.0;
    double target = 0.0; // R or R_u
    double omega = 0.0;  // Omega or Omega_u
    double gate = 0.0;   // lambda(target - value)
};

struct ControllerDiagnostics {
    double R = 0.0, Omega = 0.0, R_u = 0.0, Omega_u = 0.0;
    double vartheta = 0.0;
    double beta1 = 0.0, Xi_u1_bar = 0.0, Xi_u2_bar = 0.0, u_d_bar = 0.0;
};

struct ControllerDerivs {
    Vec xhat_dot;
    double zeta_dot = 0.0;
    double r_dot = 0.0;
    double r_u_dot = 0.0;
    double theta_hat_dot = 0.0;
    double u = 0.0;
    double u_tilde = 0.0;
    Vec varpi;
    ControllerDiagnostics diag;
};

// Smoothstep clamp: 1 for s >= 0, 0 for s <= -eps, cubic in between.
[[nodiscard]] double smooth_gate(double s, double eps);
// Pi(a) = tanh(k a) + 1 and its derivative.
[[nodiscard]] double pi_fn(double a, double k);
[[nodiscard]] double pi_prime(double a, double k);
inline constexpr double kPiBar = 2.0;

class Controller {
  public:
    // The plant is read for its known upper-diagonal functions only.
    Controller(const PlantModel& model, const BoundEnvelope& env, GainSet gains, ControllerParams params);

    [[nodiscard]] const GainSet& gains() const { return gains_; }
    [[nodiscard]] const ControllerParams& params() const { return params_; }
    [[nodiscard]] int n() const { return gains_.n; }

    // Integral of phi23/phi12 from 0 to x1; f_i = g~_i * this.
    [[nodiscard]] double f_base(double x1) const;
    [[nodiscard]] double compute_f(int i, double x1) const;
    [[nodiscard]] Vec f_vector(double x1) const; // f_2..f_n

    [[nodiscard]] double compute_vartheta1(double x1) const;
    [[nodiscard]] double vartheta1_prime(double x1) const;
    [[nodiscard]] double compute_vartheta(double x1, double theta_hat) const;
    [[nodiscard]] Vec compute_varpi(const ControllerState& s, double x1) const;
    [[nodiscard]] double compute_u_tilde(const ControllerState& s, double x1, const Vec& varpi) const;
    [[nodiscard]] static double compute_u(const ControllerState& s, double xn) { return s.zeta - s.r_u * xn; }
    [[nodiscard]] double compute_theta_hat_dot(double x1, double r) const;

    [[nodiscard]] StateTerms state_terms(double x1, double theta_hat, double theta_hat_dot) const;
    [[nodiscard]] InputTerms input_terms(const StateTerms& st, double x1, double xn, double u, double r,
                                         double r_dot, double theta_hat, double theta_hat_dot,
                                         const Vec& varpi) const;

    [[nodiscard]] ScalingRate compute_r_dot(const StateTerms& st, double theta_hat, double r) const;
    [[nodiscard]] ScalingRate compute_r_u_dot(const InputTerms& it, double r, double r_u) const;
    [[nodiscard]] Vec compute_observer_dot(const ControllerState& s, double x1, double r_dot, double u_tilde) const;

    [[nodiscard]] ControllerDerivs step(const ControllerState& s, double x1, double xn) const;

    // Scaled observer error (x̂_i + r^{i-1} f_i - x_i)/r^{i-1}, i = 2..n.
    [[nodiscard]] Vec scaled_error(const ControllerState& s, const Vec& x) const;

  private:
    [[nodiscard]] double integrand(double x1) const;
    [[nodiscard]] double phi(int i, double x1) const { return model_->phi(i, x1); }

    const PlantModel* model_;
    const BoundEnvelope* env_;
    GainSet gains_;
    ControllerParams params_;
    double lmax_Po_ = 0.0;
    double lmax_Pc_ = 0.0;
    double k_norm_ = 0.0; // |k~|
    double Dc_norm_ = 0.0;

    // Cumulative integrals at nodes +-j*kNodeSpacing, grown on demand and
    // shared between copies.
    static constexpr double kNodeSpacing = 0.25;
    struct IntegralCache {
        std::mutex mutex;
        std::vector<double> pos{0.0};
        std::vector<double> neg{0.0};
    };
    std::shared_ptr<IntegralCache> cache_;
};

} // namespace delayscale
