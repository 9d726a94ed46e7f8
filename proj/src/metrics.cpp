#include "sysid/metrics.hpp"

#include <cassert>
#include <limits>

#include "sysid/errors.hpp"

namespace sysid {

namespace {

double checked_norm(const ImpulseResponse& h)
{
    const double norm = h.taps.norm();
    if (!(norm > 0.0))
        throw ZeroTrueNorm("true impulse response has zero norm");
    return norm;
}

} // namespace

double impulse_fit(const ImpulseResponse& true_h, const ImpulseResponse& est_h)
{
    assert(true_h.size() == est_h.size());
    const double norm = checked_norm(true_h);
    return 100.0 * (1.0 - (true_h.taps - est_h.taps).norm() / norm);
}

double coverage_index(const ConfidenceSet& set, const ImpulseResponse& true_h)
{
    if (set.empty())
        throw EmptySet("coverage index of an empty confidence set");
    const double norm = checked_norm(true_h);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : set.members)
        best = std::min(best, (m.taps - true_h.taps).norm());
    return best / norm;
}

double set_size_index(const ConfidenceSet& set)
{
    if (set.empty())
        throw EmptySet("size index of an empty confidence set");
    Vector hi = set.members.front().taps;
    Vector lo = hi;
    for (const auto& m : set.members) {
        hi = hi.cwiseMax(m.taps);
        lo = lo.cwiseMin(m.taps);
    }
    return (hi - lo).sum();
}

} // namespace sysid
