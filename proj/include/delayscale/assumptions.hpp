#pragma once

#include "delayscale/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace delayscale {

// Sampling plan for the numerical assumption checker. Random draws cover
// (t, x, psi, u) together with independent delayed values (x_D, psi_D, u_D);
// the x1 sweep serves the scalar conditions and the t sweep the delay profile.
struct SamplerSpec {
    std::uint64_t seed = 1;
    int samples = 10000;
    double t_max = 20.0;
    double x_radius = 5.0;
    double psi_radius = 5.0;
    double u_radius = 5.0;
    double x1_lo = -10.0;
    double x1_hi = 10.0;
    int x1_count = 2001;
    double delay_t_max = 50.0;
    int delay_count = 5001;
    double tolerance = 1e-9;
    int workers = 1;
};

struct AssumptionCheck {
    std::string assumption; // "A1".."A6" or "ENV"
    std::string name;
    double margin = 0.0;        // worst case over samples; >= -tol means satisfied
    double value = 0.0;         // observed extreme of the checked quantity (check-specific)
    std::vector<double> worst;  // argument where the worst margin occurred
    bool partial = false;       // the condition can only be checked up to the sampled range
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    double tolerance = 1e-9;

    [[nodiscard]] bool passed() const;
    // Minimum margin over every check of one assumption id.
    [[nodiscard]] double margin(const std::string& assumption) const;
    [[nodiscard]] const AssumptionCheck& find(const std::string& name) const;
    [[nodiscard]] std::vector<const AssumptionCheck*> failures() const;
};

// A2 is checked with the sum over x_2..x_{min(i+1,n)} (see README, "Assumption checking").
[[nodiscard]] AssumptionReport check_assumptions(const PlantModel& model, const BoundEnvelope& env,
                                                 const SamplerSpec& sampler);

} // namespace delayscale
