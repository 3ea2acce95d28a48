#pragma once

// JSON run configuration and the gains artifact.

#include "delayscale/assumptions.hpp"
#include "delayscale/controller.hpp"
#include "delayscale/dde_sim.hpp"
#include "delayscale/example_system.hpp"
#include "delayscale/gain_synthesis.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace delayscale {

struct VerifySpec {
    double x1_lo = -20.0;
    double x1_hi = 20.0;
    int grid = 2001;
};

struct RunConfig {
    ExampleParams example;
    double sigma = 0.75;
    std::vector<double> ratio_min{0.8};
    std::vector<double> ratio_max{4.0};

    SynthesisOptions synthesis;
    double gain_scale = 1.0; // multiplies synthesized gains (0 gives the zero-gain control)
    std::optional<std::string> gains_path;
    std::optional<nlohmann::json> gains_inline;

    ControllerParams controller;
    SimConfig sim;
    SamplerSpec sampler;
    VerifySpec verify;

    std::optional<std::string> trajectory;
    double monitor_tol = 1e-2;
    int monitor_stride = 1;
    std::string out_dir = ".";
};

// Throws ConfigError naming the offending line or field.
[[nodiscard]] RunConfig load_config(const std::string& path);
[[nodiscard]] nlohmann::json read_config_json(const std::string& path);
[[nodiscard]] std::string config_dir(const std::string& path);
[[nodiscard]] RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");

// Example plant with the configured sigma and ratio bounds.
[[nodiscard]] ExampleSystem build_system(const RunConfig& cfg);

[[nodiscard]] nlohmann::json gains_to_json(const GainSet& g);
[[nodiscard]] GainSet gains_from_json(const nlohmann::json& j);
void write_gains(const GainSet& g, const CoupledMargins& margins, const std::string& path);
[[nodiscard]] GainSet read_gains(const std::string& path);

[[nodiscard]] nlohmann::json params_to_json(const ControllerParams& p);

} // namespace delayscale
