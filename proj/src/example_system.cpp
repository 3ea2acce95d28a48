#include "delayscale/example_system.hpp"

#include "delayscale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace delayscale {

void ExampleParams::validate() const {
    for (int i = 0; i < 2; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!(a_lower[k] > 0.0)) {
            throw InvalidSpec("example: a_lower[" + std::to_string(i + 1) + "] must be positive");
        }
        if (!(a_lower[k] <= a[k] && a[k] <= a_upper[k])) {
            throw InvalidSpec("example: a[" + std::to_string(i + 1) + "] outside [a_lower, a_upper]");
        }
    }
    for (int i = 0; i < 7; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!(std::abs(b[k]) <= b_upper[k])) {
            throw InvalidSpec("example: |b[" + std::to_string(i + 1) + "]| exceeds b_upper");
        }
    }
    if (!(Delta_bar >= 0.0 && Delta_bar < 1.0)) {
        throw InvalidSpec("example: Delta_bar must lie in [0, 1)");
    }
    if (!(k_psi_bar > 0.0)) {
        throw InvalidSpec("example: k_psi_bar must be positive");
    }
}

ExampleParams default_example_params() {
    ExampleParams p;
    p.theta = {0.5, -0.3, 0.2};
    p.b = {0.1, 0.2, -0.1, 0.15, -0.2, 0.1, 0.05};
    p.a = {1.0, 1.0};
    p.a_lower = {0.8, 0.8};
    p.a_upper = {1.2, 1.2};
    p.b_upper = {0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2};
    p.Delta_bar = 0.1;
    p.delay = DelayProfile::constant(0.3);
    return p;
}

ExampleSystem build_example(const ExampleParams& params) {
    params.validate();
    const auto [th1, th2, th3] = params.theta;
    const auto b = params.b;
    const double a1 = params.a[0];
    const double a2 = params.a[1];
    const double a1u = params.a_upper[0];
    const double a2u = params.a_upper[1];
    const double a1l = params.a_lower[0];
    const auto bu = params.b_upper;

    PlantModel m;
    m.n = 4;
    m.n_psi = 2;
    m.phi_upper = {
        [](double x1) { return 1.0 + x1 * x1; },
        [](double x1) { return 1.0 + x1 + x1 * x1; },
        [](double x1) { return 1.0 + 2.0 * x1 * x1; },
    };
    m.phi_upper_deriv = {
        [](double x1) { return 2.0 * x1; },
        [](double x1) { return 1.0 + 2.0 * x1; },
        [](double x1) { return 4.0 * x1; },
    };
    m.phi_pert = [=](double /*t*/, const Vec& x) {
        Vec p(3);
        const double x1 = x[0];
        p[0] = th1 * x1 * x1 * std::cos(x[2]);
        p[1] = th2 * x1 * x1 * x1 * std::cos(x[1]) + x1 * x1 * x[1];
        p[2] = th3 * x1 * x1 + b[0] * (x1 * x1 * x1 * x[2] + x1 * x[3]);
        return p;
    };
    m.mu = [=](double t, const Vec& x, const Vec& psi, double u) {
        const double x1 = x[0];
        return a1 * (2.0 + std::cos(psi[0])) * u + a1 * std::sin(t) * x1 * u * u +
               (a1 + a2) * (2.0 + std::sin(x[2]) * std::sin(psi[1]) + x1 * x1 + x[3] * x[3]) * u * u * u;
    };
    m.q_psi = [=](double t, const Vec& x, const Vec& psi, double u, const DelayedSample& d) {
        Vec q(2);
        const double x1 = x[0];
        const double x1d = d.x[0];
        q[0] = psi[1] - psi[0] + b[1] * x1d * std::sin(x[2]) + b[2] * std::cos(t) * x1 * x1d * x1d +
               b[3] * x1d * x1d * d.x[2] * std::cos(d.x[3]) + b[4] * u * std::cos(d.psi[0]) * x1;
        q[1] = -2.0 * psi[1] + psi[1] * std::cos(d.psi[0] * d.psi[1]) + b[5] * x1 * d.x[1] * std::sin(x[3]) +
               b[6] * x1 * u * std::cos(d.u);
        return q;
    };
    m.delay = params.delay;
    m.true_theta = std::max({1.0, std::abs(th1), std::abs(th2), std::abs(th3)});

    BoundEnvelope e;
    e.sigma = 0.75;
    e.ratio_min = {0.8};
    e.ratio_max = {4.0};
    const double b1u = bu[0];
    e.Gamma = [=](double x1) {
        const double ax = std::abs(x1);
        return std::max(1.0, b1u) * ax + x1 * x1 + b1u * ax * ax * ax;
    };
    e.mu_lower = 2.0 / 3.0 * a1l;
    e.mu_bar = [=](double x1, double x4, double u) {
        const double au = std::abs(u);
        return 3.0 * a1u * au + a1u * std::abs(x1) * u * u + (a1u + a2u) * (3.0 + x1 * x1 + x4 * x4) * au * au * au;
    };
    e.mu_bar1 = [=](double x1, double /*x4*/, double u) {
        const double au = std::abs(u);
        const double ax = std::abs(x1);
        return (a1u * au + (a1u + a2u) * au * au * au) *
               (1.0 + bu[1] + bu[2] * ax + bu[3] + bu[4] * au + bu[5] * ax + bu[6] * au);
    };
    e.mu_bar1a = [](double x1) { return 1.0 + std::abs(x1) + x1 * x1; };
    e.mu_tilde1 = [=](double /*x1*/, double /*x4*/, double u) { return a1u * u * u; };
    e.mu_bar2 = [=](double x1, double x4, double u) {
        const double au = std::abs(u);
        return a1u * u * u + (a1u + a2u) * (1.0 + 2.0 * std::abs(x1) + 2.0 * std::abs(x4)) * au * au * au;
    };
    e.Gamma2 = [=](double x1) {
        const double x2 = x1 * x1;
        const double b3q = std::pow(bu[2], 4);
        return 4.0 * (bu[1] * bu[1] + b3q * x2 + b3q * x2 * x2 * x2 + bu[3] * bu[3] * x2 * x2 + bu[4] * bu[4]) +
               2.0 * (std::pow(bu[5], 4) * x2 + bu[6] * bu[6]);
    };
    e.gamma_s = [](double x1, double /*x4*/, double u) {
        const double s = 1.0 + x1 * x1;
        return s * s * u * u;
    };
    e.gamma_s_bar = [=](double x1) {
        const double s = 4.0 * (1.0 + x1 * x1) / (3.0 * a1l);
        return s * s;
    };
    e.alpha_psi = [](double s) { return 0.25 * s * s; };
    e.k_psi_bar = params.k_psi_bar;
    e.V_psi_lower = 0.5;
    e.Delta_bar = params.Delta_bar;
    e.V_psi = [](const Vec& psi) { return 0.5 * psi.squaredNorm(); };
    e.V_psi_grad = [](const Vec& psi) { return Vec(psi); };
    e.mu_bar1_psi = [](const Vec& psi) { return std::abs(psi[0]) + 3.0 * std::abs(psi[1]); };
    e.mu_tilde1_psi = [](const Vec& /*psi*/) { return 0.0; };
    e.mu_bar2_psi = [](const Vec& /*psi*/) { return 0.0; };

    return {std::move(m), std::move(e)};
}

} // namespace delayscale
