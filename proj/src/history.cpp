#include "delayscale/history.hpp"

#include "delayscale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace delayscale {

HistoryBuffer::HistoryBuffer(double t0, double max_delay, InitialHistory initial)
    : t0_(t0), max_delay_(max_delay), initial_(std::move(initial)) {
    if (!(max_delay >= 0.0)) {
        throw InvalidSpec("history: max_delay must be nonnegative");
    }
}

void HistoryBuffer::push(double t, const Vec& z, const Vec& z_dot) {
    if (!times_.empty() && !(t > times_.back())) {
        throw InvalidSpec("history: node times must be strictly increasing");
    }
    times_.push_back(t);
    states_.push_back(z);
    derivs_.push_back(z_dot);
}

Vec hermite(double t0, const Vec& z0, const Vec& d0, double t1, const Vec& z1, const Vec& d1, double tau) {
    const double h = t1 - t0;
    const double s = (tau - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * z0 + (h10 * h) * d0 + h01 * z1 + (h11 * h) * d1;
}

Vec HistoryBuffer::lookup(double tau) const {
    if (times_.empty()) {
        throw HistoryUnderflow("history is empty", tau);
    }
    const double slack = 1e-12 * std::max(1.0, std::abs(tau));
    if (tau < t0_ - max_delay_ - slack) {
        throw HistoryUnderflow("lookup before the initial-history window", tau);
    }
    if (tau > times_.back()) {
        throw HistoryUnderflow("lookup past the last stored node", tau);
    }
    if (tau < times_.front()) {
        return initial_.state ? initial_.state(tau) : states_.front();
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), tau);
    const auto k = static_cast<std::size_t>(it - times_.begin()) - 1;
    if (times_[k] == tau || k + 1 == times_.size()) {
        return states_[k];
    }
    return hermite(times_[k], states_[k], derivs_[k], times_[k + 1], states_[k + 1], derivs_[k + 1], tau);
}

Vec HistoryBuffer::extrapolate(double tau) const {
    if (times_.empty()) {
        throw HistoryUnderflow("history is empty", tau);
    }
    if (tau <= times_.back()) {
        return lookup(tau);
    }
    return states_.back() + (tau - times_.back()) * derivs_.back();
}

} // namespace delayscale
