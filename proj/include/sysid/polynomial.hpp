#pragma once

#include <complex>
#include <vector>

#include "sysid/common.hpp"

namespace sysid::poly {

/// Polynomials in q^-1 are stored lowest lag first: a[0] + a[1] q^-1 + ...
/// Their roots are the roots of a[0] z^m + a[1] z^(m-1) + ... + a[m].

/// Roots via the companion-matrix eigenvalues. Trailing zero coefficients
/// contribute roots at the origin.
std::vector<std::complex<double>> roots(const Vector& a);

/// Largest root magnitude (0 for constant polynomials).
double max_root_magnitude(const Vector& a);

/// Schur-Cohn step-down test: true iff every root of the monic polynomial
/// [1, tail...] lies strictly inside the unit circle. O(m^2), no root solve.
bool is_schur_stable(const Vector& monic_tail);

/// Monic coefficients [1, c1, ..., cm] of prod (1 - r_k q^-1). Roots must be
/// closed under conjugation; the imaginary residue is dropped.
Vector from_roots(const std::vector<std::complex<double>>& r);

/// Reflects roots with |r| >= 1 to 1/conj(r) and pulls them inside
/// `max_radius`. Returns the monic tail.
Vector stabilize(const Vector& monic_tail, double max_radius = 0.999);

/// `count` roots uniform on the disk of `radius` (|r|^2 and angle uniform):
/// conjugate pairs plus one real root when `count` is odd.
std::vector<std::complex<double>> random_disk_roots(int count, double radius, Rng& rng);

} // namespace sysid::poly
