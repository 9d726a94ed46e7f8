#pragma once

#include <string>

#include "sysid/confidence.hpp"

namespace sysid {

struct RunMetrics {
    double fit = 0.0;
    double coverage = 0.0;
    double set_size = 0.0;
    std::string estimator_tag;
};

/// 100 * (1 - ||h - h_est|| / ||h||). Unbounded below.
double impulse_fit(const ImpulseResponse& true_h, const ImpulseResponse& est_h);

/// Smallest relative distance from `true_h` to a member of `set`.
double coverage_index(const ConfidenceSet& set, const ImpulseResponse& true_h);

/// Sum over taps of (max - min) across members.
double set_size_index(const ConfidenceSet& set);

} // namespace sysid
