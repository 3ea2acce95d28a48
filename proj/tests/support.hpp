#pragma once

#include "delayscale/config.hpp"
#include "delayscale/controller.hpp"
#include "delayscale/example_system.hpp"
#include "delayscale/gain_synthesis.hpp"
#include "oracle/benchmark_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace testing_support {

using namespace delayscale;

inline ExampleSystem benchmark_system(ExampleParams p = default_example_params()) {
    ExampleSystem sys = build_example(p);
    sys.envelope.sigma = 0.75;
    sys.envelope.ratio_min = {0.8};
    sys.envelope.ratio_max = {4.0};
    return sys;
}

inline oracle::Truth truth_of(const ExampleParams& p) {
    oracle::Truth T{};
    T.th1 = p.theta[0];
    T.th2 = p.theta[1];
    T.th3 = p.theta[2];
    for (int i = 0; i < 7; ++i) {
        T.b[i + 1] = p.b[i];
        T.bu[i + 1] = p.b_upper[i];
    }
    T.a1 = p.a[0];
    T.a2 = p.a[1];
    T.a1u = p.a_upper[0];
    T.a2u = p.a_upper[1];
    T.a1l = p.a_lower[0];
    return T;
}

inline oracle::Design design_of(const GainSet& g, const BoundEnvelope& env) {
    return {g.g_tilde, g.k_tilde, g.P_o, g.P_c, g.nu_o, g.nu_tilde_o, g.nu_o_lower, g.nu_c, g.nu_c_lower, g.g_bar,
            env.sigma, env.Delta_bar, env.k_psi_bar};
}

// Plant, certified gains and a controller built on the defaults; pinned in
// memory because the controller points into the plant.
struct Benchmark {
    ExampleParams params = default_example_params();
    ExampleSystem sys = benchmark_system(params);
    GainSet gains = synthesize_gains(sys.envelope, 4);
    ControllerParams cp = make_controller_params(gains, sys.envelope, sys.model.true_theta);
    Controller ctrl{sys.model, sys.envelope, gains, cp};

    Benchmark() = default;
    Benchmark(const Benchmark&) = delete;
};

inline const Benchmark& benchmark() {
    static const auto fixture = std::make_unique<Benchmark>();
    return *fixture;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

} // namespace testing_support
