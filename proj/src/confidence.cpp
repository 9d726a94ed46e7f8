#include "sysid/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sysid {

Index retained_count(double alpha, Index count)
{
    const double exact = alpha * static_cast<double>(count);
    auto k = static_cast<Index>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
    return std::clamp<Index>(k, count > 0 ? 1 : 0, count);
}

std::vector<Index> top_fraction(const std::vector<double>& scores, double alpha)
{
    std::vector<Index> order(scores.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return scores[a] > scores[b]; });
    order.resize(retained_count(alpha, static_cast<Index>(scores.size())));
    std::sort(order.begin(), order.end());
    return order;
}

ConfidenceSet percentile_set(const Matrix& samples, const std::vector<double>& scores, double alpha)
{
    ConfidenceSet set;
    set.alpha = alpha;
    set.raw_count = static_cast<Index>(scores.size());
    const auto keep = top_fraction(scores, alpha);
    set.threshold = std::numeric_limits<double>::infinity();
    for (Index i : keep) {
        set.members.push_back(ImpulseResponse{samples.col(i)});
        set.scores.push_back(scores[i]);
        set.threshold = std::min(set.threshold, scores[i]);
    }
    return set;
}

} // namespace sysid
