#include "sysid/system.hpp"

#include <cassert>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "sysid/polynomial.hpp"

namespace sysid {

namespace {

constexpr int kLowpassOrder = 64;
constexpr Index kNormalizationTaps = 100;

double sample_variance(const Vector& x)
{
    if (x.size() < 2)
        return 0.0;
    const double mean = x.mean();
    return (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
}

} // namespace

bool DiscreteSystem::is_stable() const
{
    return poly::is_schur_stable(den.tail(den.size() - 1) / den[0]);
}

DiscreteSystem generate_random_system(int order, double pole_radius, Rng& rng)
{
    assert(order >= 1 && pole_radius > 0.0 && pole_radius < 1.0);
    DiscreteSystem sys;
    sys.den = poly::from_roots(poly::random_disk_roots(order, pole_radius, rng));
    const Vector zeros = poly::from_roots(poly::random_disk_roots(order - 1, 1.0, rng));
    sys.num = Vector::Zero(order + 1);
    sys.num.segment(1, zeros.size()) = zeros;

    const double energy = impulse_response(sys, kNormalizationTaps).taps.norm();
    sys.num /= energy;
    return sys;
}

Vector filter(const DiscreteSystem& sys, const Vector& u)
{
    const Index T = u.size();
    const Index nb = sys.num.size();
    const Index nf = sys.den.size();
    const double lead = sys.den[0];
    Vector y(T);
    for (Index t = 0; t < T; ++t) {
        double acc = 0.0;
        for (Index k = 1; k < nb && k <= t; ++k)
            acc += sys.num[k] * u[t - k];
        for (Index k = 1; k < nf && k <= t; ++k)
            acc -= sys.den[k] * y[t - k];
        y[t] = acc / lead;
    }
    return y;
}

ImpulseResponse impulse_response(const DiscreteSystem& sys, Index n)
{
    assert(n >= 1);
    Vector pulse = Vector::Zero(n + 1);
    pulse[0] = 1.0;
    return ImpulseResponse{filter(sys, pulse).tail(n)};
}

Vector generate_bandlimited_input(Index T, double band, Rng& rng)
{
    assert(T >= 1);
    if (band >= 1.0) {
        Vector u = standard_normal(T, rng);
        const double var = sample_variance(u);
        return var > 0.0 ? Vector(u / std::sqrt(var)) : u;
    }

    const int M = kLowpassOrder;
    Vector taps(M + 1);
    for (int k = 0; k <= M; ++k) {
        const double m = k - M / 2.0;
        const double sinc = m == 0.0 ? band : std::sin(std::numbers::pi * band * m) / (std::numbers::pi * m);
        const double hamming = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / M);
        taps[k] = sinc * hamming;
    }

    const Vector white = standard_normal(T + M, rng);
    Vector u(T);
    for (Index t = 0; t < T; ++t)
        u[t] = taps.dot(white.segment(t, M + 1).reverse());
    const double var = sample_variance(u);
    if (var > 0.0)
        u /= std::sqrt(var);
    return u;
}

Dataset simulate_oe(const DiscreteSystem& sys, const Vector& u, double snr, Rng& rng)
{
    assert(snr > 0.0);
    const Vector clean = filter(sys, u);
    Dataset d;
    d.u = u;
    d.sigma2 = sample_variance(clean) / snr;
    // Zero input leaves no signal to reference; fall back to unit noise.
    if (!(d.sigma2 > 0.0))
        d.sigma2 = 1.0;
    d.y = clean + std::sqrt(d.sigma2) * standard_normal(u.size(), rng);
    return d;
}

RegressorMatrix build_regressor(const Vector& u, Index n)
{
    assert(n >= 1);
    const Index T = u.size();
    Matrix phi = Matrix::Zero(T, n);
    for (Index t = 0; t < T; ++t)
        for (Index k = 1; k <= n && k <= t; ++k)
            phi(t, k - 1) = u[t - k];
    return RegressorMatrix{std::move(phi)};
}

} // namespace sysid
