#include "delayscale/model.hpp"

#include "delayscale/errors.hpp"

#include <cmath>

namespace delayscale {

double DelayProfile::value(double t) const {
    if (kind == "sinusoidal") {
        return delta0 + amp * std::sin(omega * t);
    }
    return delta0;
}

double DelayProfile::rate(double t) const {
    if (kind == "sinusoidal") {
        return amp * omega * std::cos(omega * t);
    }
    return 0.0;
}

double DelayProfile::max_delay() const {
    return kind == "sinusoidal" ? delta0 + std::abs(amp) : delta0;
}

DelayProfile DelayProfile::constant(double delta0) {
    if (!(delta0 >= 0.0)) {
        throw InvalidSpec("constant delay must be nonnegative");
    }
    return DelayProfile{"constant", delta0, 0.0, 0.0};
}

DelayProfile DelayProfile::sinusoidal(double delta0, double amp, double omega) {
    if (!(delta0 >= std::abs(amp))) {
        throw InvalidSpec("sinusoidal delay needs delta0 >= |amp| to stay nonnegative");
    }
    return DelayProfile{"sinusoidal", delta0, amp, omega};
}

double central_difference(const ScalarFn& f, double x) {
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

double PlantModel::phi_deriv(int i, double x1) const {
    const auto idx = static_cast<std::size_t>(i - 1);
    if (idx < phi_upper_deriv.size() && phi_upper_deriv[idx]) {
        return phi_upper_deriv[idx](x1);
    }
    return central_difference(phi_upper.at(idx), x1);
}

PlantDerivative eval_plant_rhs(const PlantModel& model, double t, const Vec& x, const Vec& psi, double u,
                               const DelayedSample& delayed) {
    const int n = model.n;
    PlantDerivative d{Vec(n), Vec(model.n_psi)};
    const Vec pert = model.phi_pert(t, x);
    for (int i = 0; i < n - 1; ++i) {
        d.x_dot[i] = model.phi_upper[static_cast<std::size_t>(i)](x[0]) * x[i + 1] + pert[i];
    }
    d.x_dot[n - 1] = model.mu(t, x, psi, u);
    if (model.n_psi > 0) {
        d.psi_dot = model.q_psi(t, x, psi, u, delayed);
    }
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(d.x_dot[i])) {
            throw IntegrationBlowUp("non-finite plant derivative in x", static_cast<std::size_t>(i));
        }
    }
    for (int i = 0; i < model.n_psi; ++i) {
        if (!std::isfinite(d.psi_dot[i])) {
            throw IntegrationBlowUp("non-finite plant derivative in psi", static_cast<std::size_t>(n + i));
        }
    }
    return d;
}

} // namespace delayscale
