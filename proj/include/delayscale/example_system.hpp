#pragma once

// Built-in sixth-order benchmark: n = 4 nominal states, two unmodeled-dynamics
// states, output y = [x1, x4].
//
//   x1' = (1+x1^2) x2 + th1 x1^2 cos(x3)
//   x2' = (1+x1+x1^2) x3 + th2 x1^3 cos(x2) + x1^2 x2
//   x3' = (1+2x1^2) x4 + th3 x1^2 + b1 (x1^3 x3 + x1 x4)
//   x4' = a1 (2+cos psi1) u + a1 sin(t) x1 u^2
//         + (a1+a2)(2 + sin(x3) sin(psi2) + x1^2 + x4^2) u^3
//   psi1' = psi2 - psi1 + b2 x1d sin(x3) + b3 cos(t) x1 x1d^2
//           + b4 x1d^2 x3d cos(x4d) + b5 u cos(psi1d) x1
//   psi2' = -2 psi2 + psi2 cos(psi1d psi2d) + b6 x1 x2d sin(x4) + b7 x1 u cos(ud)
//
// where the suffix d marks a value at t - Delta(t).

#include "delayscale/model.hpp"

#include <array>

namespace delayscale {

struct ExampleParams {
    std::array<double, 3> theta{0.0, 0.0, 0.0};
    std::array<double, 7> b{};
    std::array<double, 2> a{1.0, 1.0};
    std::array<double, 2> a_upper{1.0, 1.0};
    std::array<double, 2> a_lower{1.0, 1.0};
    std::array<double, 7> b_upper{};
    double Delta_bar = 0.0;
    DelayProfile delay = DelayProfile::constant(0.0);
    // Published value is 36; see README for why 40 is the smallest value
    // that makes the ISS constant inequality hold for every psi.
    double k_psi_bar = 36.0;

    // Throws InvalidSpec when bounds are inconsistent with the truth values.
    void validate() const;
};

struct ExampleSystem {
    PlantModel model;
    BoundEnvelope envelope;
};

[[nodiscard]] ExampleSystem build_example(const ExampleParams& params);

// Moderate truth parameters used throughout the tests and the default config.
[[nodiscard]] ExampleParams default_example_params();

} // namespace delayscale
