#pragma once

// Glue shared by the CLI and the acceptance harness: gains resolution from a
// run config and JSON renderings of the verdict objects.

#include "delayscale/assumptions.hpp"
#include "delayscale/config.hpp"
#include "delayscale/monitor.hpp"

#include <json.hpp>

#include <memory>

namespace delayscale {

// Plant, gains and controller for one run. Not movable once built: the
// controller keeps pointers into the plant.
struct Pipeline {
    ExampleSystem sys;
    GainSet gains;
    CoupledMargins margins;
    ControllerParams params;
    std::unique_ptr<Controller> ctrl;

    Pipeline() = default;
    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;
};

// Gains come from the artifact path, the inline object, or fresh synthesis,
// in that order; gain_scale is applied last and the result re-verified.
[[nodiscard]] std::unique_ptr<Pipeline> build_pipeline(const RunConfig& cfg);
[[nodiscard]] GainSet resolve_gains(const RunConfig& cfg, const ExampleSystem& sys);

[[nodiscard]] SimConfig sim_config_for(const RunConfig& cfg, const PlantModel& model);

[[nodiscard]] nlohmann::json margins_to_json(const CoupledMargins& m);
[[nodiscard]] nlohmann::json report_to_json(const AssumptionReport& r);
[[nodiscard]] nlohmann::json metrics_to_json(const ConvergenceMetrics& m);
[[nodiscard]] nlohmann::json decrease_to_json(const DecreaseReport& d);

void write_json(const nlohmann::json& j, const std::string& path);

} // namespace delayscale
