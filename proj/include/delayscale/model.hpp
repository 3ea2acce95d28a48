#pragma once

// Plant class: a triangular nominal subsystem driven through an uncertain
// input map mu by appended input unmodeled dynamics psi, whose vector field
// may read delayed copies of x, psi and u.
//
//   x_i'  = phi_(i,i+1)(x1) x_{i+1} + phi_i(t, x),   i = 1..n-1
//   x_n'  = mu(t, x, psi, u)
//   psi'  = q_psi(t, x, psi, u, x(t-D), psi(t-D), u(t-D))
//   y     = [x1, x_n]

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace delayscale {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using ScalarFn = std::function<double(double)>;
// Functions of the measured output and input, (y1, y2, u) = (x1, x_n, u).
using OutputFn = std::function<double(double x1, double xn, double u)>;
using PsiFn = std::function<double(const Vec& psi)>;

// Values of (x, psi, u) at t - Delta(t).
struct DelayedSample {
    Vec x;
    Vec psi;
    double u = 0.0;
};

// Time-varying delay with its analytic rate.
struct DelayProfile {
    std::string kind = "constant";
    double delta0 = 0.0;
    double amp = 0.0;
    double omega = 0.0;

    [[nodiscard]] double value(double t) const;
    [[nodiscard]] double rate(double t) const;
    [[nodiscard]] double max_delay() const;

    static DelayProfile constant(double delta0);
    // delta0 + amp*sin(omega t); requires delta0 >= |amp|.
    static DelayProfile sinusoidal(double delta0, double amp, double omega);
};

struct PlantModel {
    int n = 2;
    int n_psi = 0;
    // phi_(i,i+1), i = 1..n-1, stored at index i-1.
    std::vector<ScalarFn> phi_upper;
    // Optional analytic derivatives of phi_upper; central differences otherwise.
    std::vector<ScalarFn> phi_upper_deriv;
    // Uncertain phi_1..phi_{n-1} (truth side).
    std::function<Vec(double t, const Vec& x)> phi_pert;
    std::function<double(double t, const Vec& x, const Vec& psi, double u)> mu;
    std::function<Vec(double t, const Vec& x, const Vec& psi, double u, const DelayedSample& delayed)> q_psi;
    DelayProfile delay;
    // Unknown theta (truth side; only the monitor and assumption checker read it).
    double true_theta = 0.0;

    [[nodiscard]] double phi(int i, double x1) const { return phi_upper.at(static_cast<std::size_t>(i - 1))(x1); }
    [[nodiscard]] double phi_deriv(int i, double x1) const;
    // The scale phi_(2,3) used by the gain parameterization; identically 1 for n = 2.
    [[nodiscard]] double phi23(double x1) const { return n >= 3 ? phi(2, x1) : 1.0; }
    [[nodiscard]] double phi23_deriv(double x1) const { return n >= 3 ? phi_deriv(2, x1) : 0.0; }
};

// Everything the assumptions declare known, plus the truth-side psi bounds
// that only the checker and monitor may evaluate.
struct BoundEnvelope {
    double sigma = 0.0;
    // A3 ratio bounds for i = 3..n-1 at index i-3:
    //   ratio_min[i] <= phi_(i,i+1)/phi_(i-1,i) <= ratio_max[i].
    std::vector<double> ratio_min;
    std::vector<double> ratio_max;

    ScalarFn Gamma;
    double mu_lower = 0.0;
    OutputFn mu_bar;
    OutputFn mu_bar1;
    ScalarFn mu_bar1a;
    OutputFn mu_tilde1;
    OutputFn mu_bar2;

    ScalarFn Gamma2;
    OutputFn gamma_s;
    ScalarFn gamma_s_bar;
    ScalarFn alpha_psi; // argument is |psi|
    double k_psi_bar = 0.0;
    double V_psi_lower = 0.0;

    double Delta_bar = 0.0;

    // Truth side.
    PsiFn V_psi;
    std::function<Vec(const Vec& psi)> V_psi_grad; // optional
    PsiFn mu_bar1_psi;
    PsiFn mu_tilde1_psi;
    PsiFn mu_bar2_psi;
};

struct PlantDerivative {
    Vec x_dot;
    Vec psi_dot;
};

// Right-hand side of the plant. Throws IntegrationBlowUp carrying the index
// of the first non-finite component (x components first, then psi).
[[nodiscard]] PlantDerivative eval_plant_rhs(const PlantModel& model, double t, const Vec& x, const Vec& psi, double u,
                                             const DelayedSample& delayed);

// Central difference with relative step 1e-6*max(1,|arg|).
[[nodiscard]] double central_difference(const ScalarFn& f, double x);

} // namespace delayscale
