#include "delayscale/controller.hpp"

#include "delayscale/errors.hpp"
#include "delayscale/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace delayscale {

namespace {

// Ceiling for the scaling-rate functions. Omega_u grows like exp(2 k r_u), which
// overflows long before r_u becomes unrepresentable; rates are capped so a
// stage evaluation past the overflow point stays finite.
constexpr double kRateCeiling = 1e300;

double sq(double v) { return v * v; }

void require_finite(double v, const char* term) {
    if (!std::isfinite(v)) {
        throw NumericFailure(std::string("non-finite controller term ") + term, term);
    }
}

double capped(double v) { return std::min(v, kRateCeiling); }

// Positive overflow saturates at the ceiling; NaN is still fatal.
double saturated(double v, const char* term) {
    if (std::isnan(v)) {
        require_finite(v, term);
    }
    return capped(v);
}

// Adaptive Simpson with the Richardson (S2 - S1)/15 correction.
double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    if (depth <= 0) {
        throw NumericFailure("adaptive quadrature did not converge", "f");
    }
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) {
        return 0.0;
    }
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, 48);
}

constexpr double kQuadTol = 1e-13;

} // namespace

double smooth_gate(double s, double eps) {
    if (s >= 0.0) {
        return 1.0;
    }
    if (s <= -eps) {
        return 0.0;
    }
    const double w = (s + eps) / eps;
    return w * w * (3.0 - 2.0 * w);
}

double pi_fn(double a, double k) { return std::tanh(k * a) + 1.0; }

double pi_prime(double a, double k) { return k / sq(std::cosh(k * a)); }

double c_lower_bound(const GainSet& gains) {
    return 4.0 * sq(gains.lambda_max_Pc()) * sq(gains.g_bar) / (gains.nu_tilde_o * gains.nu_c);
}

double c_psi_lower_bound(const ControllerParams& p, const BoundEnvelope& env) {
    const double k_psi1 = 0.5 * (p.c_psi1 + 3.0 * p.c_psi2) * env.k_psi_bar;
    const double Delta_tilde = 1.0 / (1.0 - env.Delta_bar);
    return p.c_u * (2.0 * k_psi1 + Delta_tilde * p.c_psi1 * env.k_psi_bar);
}

ControllerParams make_controller_params(const GainSet& gains, const BoundEnvelope& env, double true_theta,
                                        ControllerParams p) {
    const auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidSpec(std::string("controller constant ") + name + " must be positive and finite");
        }
    };
    positive(p.c_u, "c_u");
    positive(p.c_theta, "c_theta");
    positive(p.c1, "c1");
    positive(p.c2, "c2");
    positive(p.c3, "c3");
    positive(p.c4, "c4");
    positive(p.c_psi1, "c_psi1");
    positive(p.c_psi2, "c_psi2");
    positive(p.nu_u, "nu_u");
    positive(p.vartheta1_star, "vartheta1_star");
    positive(p.a_theta, "a_theta");
    positive(p.eps_r, "eps_r");
    positive(p.pi_k, "pi_k");
    for (double floor : {p.R_bar, p.Omega_bar, p.R_u_bar, p.Omega_u_bar}) {
        if (!(floor >= 0.0)) {
            throw InvalidSpec("controller floors must be nonnegative");
        }
    }
    if (!(p.c_factor > 1.0)) {
        throw InvalidSpec("c_factor must exceed 1 (c is a strict lower bound)");
    }
    if (!(p.c_psi_factor >= 1.0)) {
        throw InvalidSpec("c_psi_factor must be at least 1");
    }
    if (!(env.Delta_bar >= 0.0 && env.Delta_bar < 1.0)) {
        throw InvalidSpec("Delta_bar must lie in [0, 1)");
    }
    if (!(gains.nu_tilde_o > 0.0 && gains.nu_c > 0.0 && gains.nu_o > 0.0 && gains.nu_o_lower > 0.0 &&
          gains.nu_c_lower > 0.0)) {
        throw InvalidSpec("gain set carries nonpositive certificate constants");
    }

    p.c = p.c_factor * c_lower_bound(gains);
    p.Delta_tilde = 1.0 / (1.0 - env.Delta_bar);
    p.k_psi1 = 0.5 * (p.c_psi1 + 3.0 * p.c_psi2) * env.k_psi_bar;
    p.c_psi = p.c_psi_factor * c_psi_lower_bound(p, env);
    p.c_psi_tilde = p.c_psi * (2.0 - env.Delta_bar) / (1.0 - env.Delta_bar);
    p.nu_a = std::max(1.0 / (p.c * gains.nu_o), 1.0 / (gains.nu_c * env.sigma));
    p.nu_b = std::max(1.0 / (p.c * gains.nu_o_lower), 1.0 / gains.nu_c_lower);
    p.theta_star = true_theta + true_theta * true_theta;
    return p;
}

Controller::Controller(const PlantModel& model, const BoundEnvelope& env, GainSet gains, ControllerParams params)
    : model_(&model), env_(&env), gains_(std::move(gains)), params_(params),
      cache_(std::make_shared<IntegralCache>()) {
    if (gains_.n != model.n || gains_.g_tilde.size() != model.n - 1 || gains_.k_tilde.size() != model.n - 1) {
        throw InvalidSpec("controller: gain dimensions do not match the plant");
    }
    lmax_Po_ = gains_.lambda_max_Po();
    lmax_Pc_ = gains_.lambda_max_Pc();
    k_norm_ = gains_.k_tilde.norm();
    double d = 0.0;
    for (int i = 1; i <= model.n - 1; ++i) {
        d += static_cast<double>(i * i);
    }
    Dc_norm_ = std::sqrt(d);
}

double Controller::integrand(double x1) const { return model_->phi23(x1) / phi(1, x1); }

double Controller::f_base(double x1) const {
    if (!std::isfinite(x1)) {
        throw NumericFailure("f evaluated at non-finite x1", "f");
    }
    if (x1 == 0.0) {
        return 0.0;
    }
    const auto g = [this](double v) { return integrand(v); };
    const double ax = std::abs(x1);
    const double sign = x1 > 0.0 ? 1.0 : -1.0;
    const auto j = static_cast<std::size_t>(std::floor(ax / kNodeSpacing));
    double node_value = 0.0;
    {
        std::lock_guard<std::mutex> lock(cache_->mutex);
        auto& nodes = x1 > 0.0 ? cache_->pos : cache_->neg;
        while (nodes.size() <= j) {
            const double a = sign * kNodeSpacing * static_cast<double>(nodes.size() - 1);
            const double b = sign * kNodeSpacing * static_cast<double>(nodes.size());
            nodes.push_back(nodes.back() + adaptive_simpson(g, a, b, kQuadTol));
        }
        node_value = nodes[j];
    }
    const double start = sign * kNodeSpacing * static_cast<double>(j);
    return node_value + adaptive_simpson(g, start, x1, kQuadTol);
}

double Controller::compute_f(int i, double x1) const {
    if (i < 2 || i > n()) {
        throw InvalidSpec("compute_f: index out of range");
    }
    return gains_.g_tilde[i - 2] * f_base(x1);
}

Vec Controller::f_vector(double x1) const { return gains_.g_tilde * f_base(x1); }

double Controller::compute_vartheta1(double x1) const {
    const auto& p = params_;
    const double p12 = phi(1, x1);
    const double p23 = model_->phi23(x1);
    const double G = env_->Gamma(x1);
    const double lPc2 = sq(lmax_Pc_);
    const double q1 = 4.0 * sq(p12) / (p.c * gains_.nu_o) + 8.0 * sq(p12) / (gains_.nu_c * p23) + lPc2 + 2.0;
    const double q2 = 2.0 * G + 1.0 + 8.0 * lPc2 * sq(gains_.g_bar) * p23 * sq(G) / (gains_.nu_c * sq(p12)) +
                      8.0 * n() / (p.c * gains_.nu_o) * sq(lmax_Po_) * sq(G) *
                          (1.0 + sq(gains_.g_bar) * sq(p23) / sq(p12));
    const double q2_bar = q2 + p.c_psi_tilde * env_->Gamma2(x1);
    return 4.0 / p12 * ((q1 + p.vartheta1_star) / p.a_theta + q2_bar);
}

double Controller::vartheta1_prime(double x1) const {
    return central_difference([this](double v) { return compute_vartheta1(v); }, x1);
}

double Controller::compute_vartheta(double x1, double theta_hat) const {
    return theta_hat * x1 * compute_vartheta1(x1);
}

Vec Controller::compute_varpi(const ControllerState& s, double x1) const {
    const Vec f = f_vector(x1);
    const int m = n() - 1;
    Vec w(m);
    w[0] = (s.xhat[0] + s.r * f[0] + compute_vartheta(x1, s.theta_hat)) / s.r;
    for (int k = 1; k < m; ++k) {
        // component i = k+2 uses r^{i-1} = r^{k+1}
        const double rp = std::pow(s.r, k + 1);
        w[k] = (s.xhat[k] + rp * f[k]) / rp;
    }
    return w;
}

double Controller::compute_u_tilde(const ControllerState& s, double x1, const Vec& varpi) const {
    const double K_dot = model_->phi23(x1) * gains_.k_tilde.dot(varpi);
    return params_.u_tilde_sign * (-std::pow(s.r, n()) * K_dot);
}

StateTerms Controller::state_terms(double x1, double theta_hat, double theta_hat_dot) const {
    const auto& p = params_;
    const int nn = n();
    const double nd = nn;
    StateTerms t;
    t.phi12 = phi(1, x1);
    t.phi23 = model_->phi23(x1);
    t.Gamma = env_->Gamma(x1);
    t.Gamma2 = env_->Gamma2(x1);
    t.mu_bar1a = env_->mu_bar1a(x1);
    t.gamma_s_bar = env_->gamma_s_bar(x1);
    t.K_norm = k_norm_ * t.phi23;
    t.dK_norm = k_norm_ * std::abs(model_->phi23_deriv(x1));
    t.G_norm = gains_.g_tilde.norm() * t.phi23;
    t.Ac_norm = linalg::stacked_norm(controller_matrix(gains_, *model_, x1));

    const double lPo2 = sq(lmax_Po_);
    const double lPc2 = sq(lmax_Pc_);
    const double gb2 = sq(gains_.g_bar);
    t.q1 = 4.0 * sq(t.phi12) / (p.c * gains_.nu_o) + 8.0 * sq(t.phi12) / (gains_.nu_c * t.phi23) + lPc2 + 2.0;
    t.q2 = 2.0 * t.Gamma + 1.0 + 8.0 * lPc2 * gb2 * t.phi23 * sq(t.Gamma) / (gains_.nu_c * sq(t.phi12)) +
           8.0 * nd / (p.c * gains_.nu_o) * lPo2 * sq(t.Gamma) * (1.0 + gb2 * sq(t.phi23) / sq(t.phi12));
    t.q1_bar = t.q1;
    t.q2_bar = t.q2 + p.c_psi_tilde * t.Gamma2;
    t.vartheta1 = 4.0 / t.phi12 * ((t.q1_bar + p.vartheta1_star) / p.a_theta + t.q2_bar);
    t.vartheta1_prime = vartheta1_prime(x1);
    const double v1 = t.vartheta1;
    const double v1x = v1 + t.vartheta1_prime * x1;
    t.dvartheta_dx1 = theta_hat * v1x;

    t.w1 = 3.0 * lmax_Pc_ * std::abs(t.dvartheta_dx1) * t.phi12 + sq(v1) * sq(theta_hat_dot) +
           lPc2 * sq(theta_hat) * sq(v1x) * (sq(t.Gamma) + sq(t.phi12) * sq(v1)) +
           3.0 * lmax_Po_ * (nd + nd * nd) * t.Gamma + nd * lPo2 * sq(theta_hat) * sq(v1);

    double phi_sum = 0.0;
    for (int j = 2; j <= nn - 1; ++j) {
        phi_sum += phi(j, x1);
    }
    t.beta4 = t.phi12 + t.K_norm + phi_sum + std::pow(nd, 1.5) * t.Gamma;
    t.beta5 = t.phi12 * theta_hat * v1 + nd * t.Gamma * theta_hat * v1;
    t.beta6 = (nd + 1.0) * t.Gamma;
    t.beta7 = 1.5 * t.dK_norm * t.phi12;
    t.beta8 = t.dK_norm * t.Gamma;

    const double m1a2 = sq(t.mu_bar1a);
    t.w1_tilde = p.c1 * (1.0 + m1a2) + t.beta7 + sq(t.beta4) / p.c_psi2 + sq(t.beta8) / (2.0 * p.c4);
    t.q1_tilde = p.c2 * (1.0 + sq(theta_hat) * sq(v1) * m1a2) + sq(t.beta5) / (2.0 * p.c_psi2);
    t.q2_tilde = p.c3 * (1.0 + m1a2) + sq(t.beta6) / (2.0 * p.c_psi2) + p.c4 / 2.0;

    t.w1_bar = t.w1 + lPo2 * sq(p.c) + p.c_u * (t.w1_tilde + p.c1 * p.Delta_tilde * m1a2) +
               3.0 * p.c_psi_tilde * t.Gamma2;
    t.w2_bar = 2.0 * p.c_psi_tilde * t.gamma_s_bar * t.Gamma2 * sq(t.K_norm);
    t.q3_bar = 3.0 * p.c_psi_tilde * t.Gamma2 * sq(theta_hat);
    t.q4_bar = p.c_u * (t.q1_tilde + p.c2 * p.Delta_tilde * sq(theta_hat) * sq(v1) * m1a2);
    t.q5_bar = p.c_u * (t.q2_tilde + p.c3 * p.Delta_tilde * m1a2);

    require_finite(t.vartheta1, "vartheta1");
    require_finite(t.vartheta1_prime, "vartheta1_prime");
    require_finite(t.w1_bar, "w1_bar");
    require_finite(t.w2_bar, "w2_bar");
    require_finite(t.q2_bar, "q2_bar");
    require_finite(t.q3_bar, "q3_bar");
    require_finite(t.q4_bar, "q4_bar");
    require_finite(t.q5_bar, "q5_bar");
    return t;
}

double Controller::compute_theta_hat_dot(double x1, double r) const {
    const auto& p = params_;
    const double G = env_->Gamma(x1);
    const double p12 = phi(1, x1);
    const double p23 = model_->phi23(x1);
    const double gb2 = sq(gains_.g_bar);
    const double nd = n();
    const double q2 = 2.0 * G + 1.0 + 8.0 * sq(lmax_Pc_) * gb2 * p23 * sq(G) / (gains_.nu_c * sq(p12)) +
                      8.0 * nd / (p.c * gains_.nu_o) * sq(lmax_Po_) * sq(G) * (1.0 + gb2 * sq(p23) / sq(p12));
    const double q2_bar = q2 + p.c_psi_tilde * env_->Gamma2(x1);
    const double m1a2 = sq(env_->mu_bar1a(x1));
    const double beta6 = (nd + 1.0) * G;
    const double q2_tilde = p.c3 * (1.0 + m1a2) + sq(beta6) / (2.0 * p.c_psi2) + p.c4 / 2.0;
    const double q5_bar = p.c_u * (q2_tilde + p.c3 * p.Delta_tilde * m1a2);
    return p.c_theta * (q2_bar + q5_bar / r) * x1 * x1;
}

InputTerms Controller::input_terms(const StateTerms& st, double x1, double xn, double u, double r, double r_dot,
                                   double theta_hat, double theta_hat_dot, const Vec& varpi) const {
    const auto& p = params_;
    const int nn = n();
    const double nd = nn;
    InputTerms it;
    it.mu_bar = env_->mu_bar(x1, xn, u);
    it.mu_bar2 = env_->mu_bar2(x1, xn, u);
    it.mu_sum1 = env_->mu_bar1(x1, xn, u) + env_->mu_tilde1(x1, xn, u);

    const double rn = std::pow(r, nd);
    const double rn1 = std::pow(r, nd - 1.0);
    const double v1 = st.vartheta1;
    const double v1x = std::abs(v1 + st.vartheta1_prime * x1);
    double phi_r_sum = 0.0;
    for (int j = 2; j <= nn - 1; ++j) {
        phi_r_sum += phi(j, x1) * std::pow(r, j);
    }
    it.beta1 = it.mu_bar2 * (r * st.phi12 + rn * st.K_norm + phi_r_sum + rn1 * std::pow(nd, 1.5) * st.Gamma) +
               nd * rn1 * r_dot * st.K_norm + rn1 * r_dot * st.K_norm * Dc_norm_ +
               rn * st.dK_norm * std::abs(theta_hat * v1 * x1) * st.phi12 + r * rn * st.K_norm * st.Ac_norm +
               r * rn * st.K_norm * st.G_norm + rn * st.K_norm * theta_hat * v1x * st.phi12;
    it.beta2 = it.mu_bar2 * theta_hat * v1 * (st.phi12 + nd * st.Gamma) +
               rn1 * st.K_norm * sq(theta_hat) * v1x * st.phi12 * std::abs(v1) +
               rn1 * st.K_norm * std::abs(theta_hat_dot * v1);
    it.beta3 = (nd + 1.0) * it.mu_bar2 * st.Gamma + rn * st.K_norm * st.G_norm / st.phi12 * st.Gamma +
               rn1 * st.K_norm * theta_hat * v1x * st.Gamma;

    const double r15 = std::pow(r, 1.5);
    const double r2n1 = std::pow(r, 2.0 * nd - 1.0);
    const double ms2 = sq(it.mu_sum1);
    // Squares are taken after dividing by the matching power of r; beta1 alone overflows once r ~ 1e20.
    const double rh = std::pow(r, nd - 0.5);
    it.Xi_u1 = it.mu_bar2 / rn + 1.0 / (2.0 * p.c_psi1 * r15) + sq(it.beta1 / (rh * r)) / (2.0 * p.c1) +
               ms2 / (p.c_psi1 * r15) + sq(it.beta2 / rh) / (4.0 * p.c2) + sq(it.beta3 / rh) / (4.0 * p.c3) +
               (1.0 / (2.0 * p.c3 * r2n1) + nd / (p.c1 * r * r * r) + 1.0 / (2.0 * p.c2 * r2n1)) * ms2;
    it.Xi_u1_bar = p.c_u * it.Xi_u1;
    it.u_d_bar = it.mu_bar + rn * st.K_norm * varpi.norm();
    it.Xi_u2_bar = (1.0 / std::pow(r, 2.0 * nd - 3.0) +
                    2.0 * p.c_psi_tilde * st.Gamma2 * st.gamma_s_bar / std::pow(r, 2.0 * nd - 1.5)) *
                   (1.0 + sq(it.u_d_bar));
    it.beta1 = saturated(it.beta1, "beta1");
    it.Xi_u1_bar = saturated(it.Xi_u1_bar, "Xi_u1_bar");
    it.Xi_u2_bar = saturated(it.Xi_u2_bar, "Xi_u2_bar");
    return it;
}

ScalingRate Controller::compute_r_dot(const StateTerms& st, double theta_hat, double r) const {
    const auto& p = params_;
    ScalingRate out;
    out.target = std::max({p.R_bar, 16.0 * p.nu_a * st.w1_bar, sq(16.0 * p.nu_a * st.w2_bar),
                           sq(4.0 * st.q3_bar * st.vartheta1 / (theta_hat * st.phi12)),
                           4.0 * (st.q4_bar + theta_hat * st.q5_bar) / (theta_hat * st.phi12 * st.vartheta1)});
    const double r15 = std::pow(r, 1.5);
    out.omega = capped(std::max(
        {p.Omega_bar, 2.0 * p.nu_b * r * st.w1_bar, 2.0 * p.nu_b * r15 * st.w2_bar,
         2.0 * (st.q3_bar * sq(st.vartheta1) * r15 + r * st.q4_bar + theta_hat * r * st.q5_bar)}));
    out.target = saturated(out.target, "R");
    out.gate = smooth_gate(out.target - r, p.eps_r);
    out.rate = out.gate == 0.0 ? 0.0 : out.gate * out.omega;
    return out;
}

ScalingRate Controller::compute_r_u_dot(const InputTerms& it, double r, double r_u) const {
    const auto& p = params_;
    const double rn = std::pow(r, n());
    ScalingRate out;
    out.target = std::max({p.R_u_bar, 4.0 * rn * it.Xi_u1_bar / (p.c_u * env_->mu_lower),
                           8.0 * rn * kPiBar * (it.Xi_u2_bar + p.nu_u) * (1.0 + sq(it.u_d_bar)) /
                               (p.c_u * env_->mu_lower)});
    out.target = saturated(out.target, "R_u");
    // Pi^2/Pi' = exp(2 k r_u)/k for Pi = tanh(k a) + 1; evaluated in log form.
    const double pi = pi_fn(r_u, p.pi_k);
    const double bracket = it.Xi_u1_bar / pi + it.Xi_u2_bar + p.nu_u;
    const double log_term = std::log(2.0 * rn * bracket / (p.c_u * p.pi_k)) + 2.0 * p.pi_k * r_u;
    const double term = log_term >= std::log(kRateCeiling) ? kRateCeiling : std::exp(log_term);
    out.omega = capped(std::max(p.Omega_u_bar, term));
    out.gate = smooth_gate(out.target - r_u, p.eps_r);
    out.rate = out.gate == 0.0 ? 0.0 : out.gate * out.omega;
    return out;
}

Vec Controller::compute_observer_dot(const ControllerState& s, double x1, double r_dot, double u_tilde) const {
    const int nn = n();
    const Vec f = f_vector(x1);
    const double p23 = model_->phi23(x1);
    const double r = s.r;
    // f and x̂ are stored from index 0 for i = 2.
    const auto at = [](const Vec& v, int i) { return v[i - 2]; };
    const double inj = at(s.xhat, 2) + r * at(f, 2);
    Vec d(nn - 1);
    for (int i = 2; i <= nn - 1; ++i) {
        const double g = gains_.g_tilde[i - 2] * p23;
        d[i - 2] = phi(i, x1) * (at(s.xhat, i + 1) + std::pow(r, i) * at(f, i + 1)) - std::pow(r, i - 1) * g * inj -
                   (i - 1) * r_dot * std::pow(r, i - 2) * at(f, i);
    }
    const double gn = gains_.g_tilde[nn - 2] * p23;
    d[nn - 2] = u_tilde - std::pow(r, nn - 1) * gn * inj - (nn - 1) * r_dot * std::pow(r, nn - 2) * at(f, nn);
    return d;
}

ControllerDerivs Controller::step(const ControllerState& s, double x1, double xn) const {
    ControllerDerivs d;
    d.varpi = compute_varpi(s, x1);
    d.diag.vartheta = compute_vartheta(x1, s.theta_hat);
    d.u_tilde = compute_u_tilde(s, x1, d.varpi);
    d.u = compute_u(s, xn);
    d.theta_hat_dot = compute_theta_hat_dot(x1, s.r);
    const StateTerms st = state_terms(x1, s.theta_hat, d.theta_hat_dot);
    const ScalingRate rr = compute_r_dot(st, s.theta_hat, s.r);
    d.r_dot = rr.rate;
    const InputTerms it = input_terms(st, x1, xn, d.u, s.r, d.r_dot, s.theta_hat, d.theta_hat_dot, d.varpi);
    const ScalingRate ru = compute_r_u_dot(it, s.r, s.r_u);
    d.r_u_dot = ru.rate;
    d.xhat_dot = compute_observer_dot(s, x1, d.r_dot, d.u_tilde);
    d.zeta_dot = d.r_u_dot * xn + s.r_u * d.u_tilde;
    d.diag.R = rr.target;
    d.diag.Omega = rr.omega;
    d.diag.R_u = ru.target;
    d.diag.Omega_u = ru.omega;
    d.diag.beta1 = it.beta1;
    d.diag.Xi_u1_bar = it.Xi_u1_bar;
    d.diag.Xi_u2_bar = it.Xi_u2_bar;
    d.diag.u_d_bar = it.u_d_bar;
    return d;
}

Vec Controller::scaled_error(const ControllerState& s, const Vec& x) const {
    const Vec f = f_vector(x[0]);
    const int m = n() - 1;
    Vec e(m);
    for (int k = 0; k < m; ++k) {
        const double rp = std::pow(s.r, k + 1);
        e[k] = (s.xhat[k] + rp * f[k] - x[k + 1]) / rp;
    }
    return e;
}

} // namespace delayscale
