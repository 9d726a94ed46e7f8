#pragma once

#include <vector>

#include "sysid/system.hpp"

namespace sysid {

/// Sampled confidence set. Scores are log-densities, possibly shifted by a
/// constant common to the whole set, so only their ordering is meaningful.
struct ConfidenceSet {
    std::vector<ImpulseResponse> members;
    std::vector<double> scores;
    double alpha = 0.95;
    double threshold = 0.0;
    Index raw_count = 0;

    bool empty() const { return members.empty(); }
    std::size_t size() const { return members.size(); }
};

/// ceil(alpha * count), guarded against representation error in alpha.
Index retained_count(double alpha, Index count);

/// Indices of the retained_count(alpha, N) highest scores. Ties keep the
/// lower sample index first.
std::vector<Index> top_fraction(const std::vector<double>& scores, double alpha);

/// Builds the percentile set from candidate columns of `samples` and scores.
ConfidenceSet percentile_set(const Matrix& samples, const std::vector<double>& scores, double alpha);

} // namespace sysid
