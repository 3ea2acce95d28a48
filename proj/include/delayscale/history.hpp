#pragma once

// Time-stamped trajectory with cubic-Hermite dense output, used to supply
// delayed arguments and to evaluate integrals over [t - Delta, t].

#include "delayscale/model.hpp"

#include <functional>
#include <vector>

namespace delayscale {

// State on [t0 - max_delay, t0); constant extension when left empty.
struct InitialHistory {
    std::function<Vec(double tau)> state;
};

class HistoryBuffer {
  public:
    HistoryBuffer() = default;
    HistoryBuffer(double t0, double max_delay, InitialHistory initial);

    // Appends a node; times must be strictly increasing.
    void push(double t, const Vec& z, const Vec& z_dot);

    // Hermite interpolation on [t_begin, t_end], the initial history below t0,
    // bit-exact at nodes. Throws HistoryUnderflow outside [t0 - max_delay, t_end].
    [[nodiscard]] Vec lookup(double tau) const;
    // First-order continuation from the last node, for stage times past t_end.
    [[nodiscard]] Vec extrapolate(double tau) const;

    [[nodiscard]] bool empty() const { return times_.empty(); }
    [[nodiscard]] std::size_t size() const { return times_.size(); }
    [[nodiscard]] double t0() const { return t0_; }
    [[nodiscard]] double max_delay() const { return max_delay_; }
    [[nodiscard]] double t_end() const { return times_.back(); }
    [[nodiscard]] const std::vector<double>& times() const { return times_; }
    [[nodiscard]] const Vec& state(std::size_t k) const { return states_[k]; }
    [[nodiscard]] const Vec& derivative(std::size_t k) const { return derivs_[k]; }

  private:
    double t0_ = 0.0;
    double max_delay_ = 0.0;
    InitialHistory initial_;
    std::vector<double> times_;
    std::vector<Vec> states_;
    std::vector<Vec> derivs_;
};

// Cubic Hermite on one interval.
[[nodiscard]] Vec hermite(double t0, const Vec& z0, const Vec& d0, double t1, const Vec& z1, const Vec& d1,
                          double tau);

} // namespace delayscale
