#pragma once

#include "sysid/common.hpp"

namespace sysid {

/// DC-kernel hyperparameters: K(k, j) = c rho^|k-j| lambda^((k+j)/2).
struct Hyperparams {
    double c = 1.0;
    double rho = 0.0;
    double lambda = 0.9;

    bool in_box() const;
    Vector as_vector() const { return Vector{{c, rho, lambda}}; }
    static Hyperparams from_vector(const Vector& v) { return {v[0], v[1], v[2]}; }
    bool operator==(const Hyperparams&) const = default;
};

struct KernelMatrix {
    Matrix k;
};

/// Dense kernel, taps 1-indexed.
KernelMatrix dc_kernel(const Hyperparams& eta, Index n);

/// Closed-form square root K = G G^T with G = sqrt(c) D L, where
/// D = diag(lambda^(k/2)) and L is the Cholesky factor of the AR(1)
/// correlation rho^|k-j|:
///   L(k, j) = rho^(k-j) s_j,  s_1 = 1, s_j = sqrt(1 - rho^2) for j > 1.
/// G is lower triangular, valid on the whole closed box (it is singular when
/// c = 0, lambda = 0 or |rho| = 1), and G^-1 is bidiagonal, so every
/// product below costs O(n) per vector.
class DcFactor {
public:
    DcFactor(const Hyperparams& eta, Index n);

    Index size() const { return diag_.size(); }
    bool invertible() const { return invertible_; }
    double log_det() const;

    Matrix dense() const;
    Vector apply(const Vector& x) const;
    Vector apply_transpose(const Vector& x) const;
    /// Column-wise G^T X.
    Matrix apply_transpose(const Matrix& x) const;
    /// Column-wise G X.
    Matrix apply(const Matrix& x) const;
    /// G^T A G for symmetric A.
    Matrix sandwich(const Matrix& a) const;
    /// G^-1 x; requires invertible().
    Vector solve(const Vector& x) const;
    /// Column-wise G^-1 X; requires invertible().
    Matrix solve(const Matrix& x) const;

private:
    double rho_;
    double innov_;   ///< sqrt(1 - rho^2)
    Vector diag_;    ///< sqrt(c) lambda^(k/2), k = 1..n
    bool invertible_;
};

} // namespace sysid
