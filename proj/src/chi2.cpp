#include "sysid/chi2.hpp"

#include <cassert>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

namespace sysid {

double chi2_cdf(double x, int dof)
{
    if (x <= 0.0)
        return 0.0;
    return boost::math::gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double alpha, int dof)
{
    assert(alpha > 0.0 && alpha < 1.0 && dof >= 1);
    const double k = 0.5 * dof;

    // Bracket the root.
    double lo = 0.0;
    double hi = std::max(1.0, static_cast<double>(dof));
    while (chi2_cdf(hi, dof) < alpha)
        lo = hi, hi *= 2.0;

    // Wilson-Hilferty start.
    const double z = std::sqrt(2.0) * boost::math::erf_inv(2.0 * alpha - 1.0);
    const double a = 2.0 / (9.0 * dof);
    double x = dof * std::pow(1.0 - a + z * std::sqrt(a), 3);
    if (!(x > lo && x < hi))
        x = 0.5 * (lo + hi);

    for (int it = 0; it < 200; ++it) {
        const double err = chi2_cdf(x, dof) - alpha;
        if (std::abs(err) < 1e-14)
            break;
        if (err < 0)
            lo = x;
        else
            hi = x;
        // Density of chi2(dof) at x.
        const double pdf = 0.5 * boost::math::gamma_p_derivative(k, 0.5 * x);
        double next = pdf > 0 ? x - err / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * x)
            return next;
        x = next;
    }
    return x;
}

} // namespace sysid
