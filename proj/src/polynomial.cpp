#include "sysid/polynomial.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace sysid::poly {

std::vector<std::complex<double>> roots(const Vector& a)
{
    Index m = a.size() - 1;
    while (m > 0 && a[m] == 0.0)
        --m;
    std::vector<std::complex<double>> out;
    for (Index k = m; k < a.size() - 1; ++k)
        out.emplace_back(0.0, 0.0);
    if (m <= 0)
        return out;

    Matrix companion = Matrix::Zero(m, m);
    for (Index j = 0; j < m; ++j)
        companion(0, j) = -a[j + 1] / a[0];
    for (Index i = 1; i < m; ++i)
        companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Matrix> solver(companion, false);
    const auto& ev = solver.eigenvalues();
    for (Index i = 0; i < ev.size(); ++i)
        out.push_back(ev[i]);
    return out;
}

double max_root_magnitude(const Vector& a)
{
    double best = 0.0;
    for (const auto& r : roots(a))
        best = std::max(best, std::abs(r));
    return best;
}

bool is_schur_stable(const Vector& tail)
{
    const Index m = tail.size();
    if (m == 0)
        return true;
    std::vector<double> a(tail.data(), tail.data() + m);
    std::vector<double> next(m);
    for (Index order = m; order >= 1; --order) {
        const double k = a[order - 1];
        if (!std::isfinite(k) || std::abs(k) >= 1.0)
            return false;
        const double denom = 1.0 - k * k;
        for (Index i = 0; i + 1 < order; ++i)
            next[i] = (a[i] - k * a[order - 2 - i]) / denom;
        std::copy(next.begin(), next.begin() + (order - 1), a.begin());
    }
    return true;
}

Vector from_roots(const std::vector<std::complex<double>>& r)
{
    std::vector<std::complex<double>> c{1.0};
    for (const auto& root : r) {
        c.push_back(0.0);
        for (std::size_t i = c.size() - 1; i >= 1; --i)
            c[i] -= root * c[i - 1];
    }
    Vector out(static_cast<Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i)
        out[static_cast<Index>(i)] = c[i].real();
    return out;
}

Vector stabilize(const Vector& tail, double max_radius)
{
    if (is_schur_stable(tail) && (tail.size() == 0 || max_root_magnitude(
            (Vector(tail.size() + 1) << 1.0, tail).finished()) <= max_radius))
        return tail;
    Vector full(tail.size() + 1);
    full << 1.0, tail;
    auto r = roots(full);
    for (auto& root : r) {
        double mag = std::abs(root);
        if (mag >= 1.0)
            root = 1.0 / std::conj(root), mag = 1.0 / mag;
        if (mag > max_radius)
            root *= max_radius / mag;
    }
    return from_roots(r).tail(tail.size());
}

std::vector<std::complex<double>> random_disk_roots(int count, double radius, Rng& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::complex<double>> r;
    for (int p = 0; p < count / 2; ++p) {
        const double mag = radius * std::sqrt(unit(rng));
        const double angle = std::numbers::pi * unit(rng);
        const auto z = std::polar(mag, angle);
        r.push_back(z);
        r.push_back(std::conj(z));
    }
    if (count % 2 == 1) {
        const double mag = radius * std::sqrt(unit(rng));
        r.emplace_back(unit(rng) < 0.5 ? -mag : mag, 0.0);
    }
    return r;
}

} // namespace sysid::poly
