#include "sysid/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace sysid {

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             double step, double ftol, int max_evals)
{
    const Index d = x0.size();
    int evals = 0;
    auto eval = [&](const Vector& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<Vector> pts(d + 1, x0);
    std::vector<double> vals(d + 1);
    for (Index i = 0; i < d; ++i)
        pts[i + 1][i] += step;
    for (Index i = 0; i <= d; ++i)
        vals[i] = eval(pts[i]);

    std::vector<Index> order(d + 1);
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return vals[a] < vals[b]; });
        const Index best = order.front(), worst = order.back(), second = order[d - 1];
        if (std::abs(vals[worst] - vals[best]) <= ftol * (1.0 + std::abs(vals[best])) &&
            std::isfinite(vals[worst]))
            break;

        Vector centroid = Vector::Zero(d);
        for (Index i = 0; i <= d; ++i)
            if (i != worst)
                centroid += pts[i];
        centroid /= static_cast<double>(d);

        const Vector reflected = centroid + (centroid - pts[worst]);
        const double fr = eval(reflected);
        if (fr < vals[best]) {
            const Vector expanded = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = eval(expanded);
            if (fe < fr)
                pts[worst] = expanded, vals[worst] = fe;
            else
                pts[worst] = reflected, vals[worst] = fr;
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = reflected, vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                          : Vector(centroid + 0.5 * (pts[worst] - centroid));
        const double fc = eval(contracted);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = contracted, vals[worst] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for (Index i = 0; i <= d; ++i) {
            if (i == best)
                continue;
            pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
            vals[i] = eval(pts[i]);
        }
    }

    const auto it = std::min_element(vals.begin(), vals.end());
    const auto k = static_cast<std::size_t>(it - vals.begin());
    return {pts[k], *it, evals};
}

} // namespace sysid
