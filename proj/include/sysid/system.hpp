#pragma once

#include <cstdint>

#include "sysid/common.hpp"

namespace sysid {

/// Rational SISO transfer function B(q^-1)/F(q^-1), coefficients lowest lag
/// first. `den` is monic. Estimated and true systems are strictly proper: a
/// nonzero num[0] (direct feed-through) is ignored by every lagged quantity.
struct DiscreteSystem {
    Vector num;
    Vector den;

    bool is_stable() const;
};

/// Taps at lags 1..n.
struct ImpulseResponse {
    Vector taps;

    Index size() const { return taps.size(); }
};

struct Dataset {
    Vector u;
    Vector y;
    double sigma2 = 1.0;
    std::uint64_t seed = 0;

    Index size() const { return u.size(); }
};

/// T x n matrix; row t holds u(t-1), ..., u(t-n) with pre-sample inputs zero.
struct RegressorMatrix {
    Matrix phi;
};

/// Stable strictly proper system whose impulse response has unit energy over
/// its first 100 taps. Poles are drawn uniformly on the disk of the given
/// radius (conjugate pairs plus a real pole for odd orders), zeros likewise on
/// the unit disk.
DiscreteSystem generate_random_system(int order, double pole_radius, Rng& rng);

ImpulseResponse impulse_response(const DiscreteSystem& sys, Index n);

/// Runs B/F on `u` from rest.
Vector filter(const DiscreteSystem& sys, const Vector& u);

/// White Gaussian noise shaped by a 65-tap Hamming-windowed sinc low-pass at
/// `band`*pi and rescaled to unit sample variance. band >= 1 skips filtering.
Vector generate_bandlimited_input(Index T, double band, Rng& rng);

/// Adds white noise with variance var(noiseless)/snr to the response of `sys`.
Dataset simulate_oe(const DiscreteSystem& sys, const Vector& u, double snr, Rng& rng);

RegressorMatrix build_regressor(const Vector& u, Index n);

} // namespace sysid
