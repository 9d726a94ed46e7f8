#include "sysid/dc_kernel.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace sysid {

bool Hyperparams::in_box() const
{
    return c >= 0.0 && std::abs(rho) <= 1.0 && lambda >= 0.0 && lambda <= 1.0;
}

KernelMatrix dc_kernel(const Hyperparams& eta, Index n)
{
    assert(eta.in_box());
    Matrix k(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            k(i, j) = eta.c * std::pow(eta.rho, static_cast<double>(std::abs(i - j))) *
                      std::pow(eta.lambda, 0.5 * static_cast<double>(i + j + 2));
    return KernelMatrix{std::move(k)};
}

DcFactor::DcFactor(const Hyperparams& eta, Index n)
    : rho_(eta.rho), innov_(std::sqrt(std::max(0.0, 1.0 - eta.rho * eta.rho))), diag_(n)
{
    assert(eta.in_box());
    const double root_c = std::sqrt(eta.c);
    for (Index k = 0; k < n; ++k)
        diag_[k] = root_c * std::pow(eta.lambda, 0.5 * static_cast<double>(k + 1));
    invertible_ = (n <= 1 || innov_ > 0.0) && (n == 0 || diag_[n - 1] > 0.0);
}

double DcFactor::log_det() const
{
    if (!invertible_)
        return -std::numeric_limits<double>::infinity();
    const Index n = size();
    return diag_.array().log().sum() + static_cast<double>(n > 0 ? n - 1 : 0) * std::log(innov_);
}

Matrix DcFactor::dense() const
{
    return apply(Matrix(Matrix::Identity(size(), size())));
}

Matrix DcFactor::apply(const Matrix& x) const
{
    // AR(1) forward recursion on rows: y_0 = x_0, y_k = rho y_{k-1} + s x_k.
    const Index n = size();
    Matrix y(n, x.cols());
    if (n == 0)
        return y;
    y.row(0) = x.row(0);
    for (Index k = 1; k < n; ++k)
        y.row(k) = rho_ * y.row(k - 1) + innov_ * x.row(k);
    return diag_.asDiagonal() * y;
}

Matrix DcFactor::apply_transpose(const Matrix& x) const
{
    const Index n = size();
    Matrix z = diag_.asDiagonal() * x;
    for (Index k = n - 2; k >= 0; --k)
        z.row(k) += rho_ * z.row(k + 1);
    if (n > 1)
        z.bottomRows(n - 1) *= innov_;
    return z;
}

Vector DcFactor::apply(const Vector& x) const
{
    return apply(Matrix(x)).col(0);
}

Vector DcFactor::apply_transpose(const Vector& x) const
{
    return apply_transpose(Matrix(x)).col(0);
}

Matrix DcFactor::sandwich(const Matrix& a) const
{
    const Matrix left = apply_transpose(a);                 // G^T A
    Matrix out = apply_transpose(Matrix(left.transpose())); // G^T (G^T A)^T = G^T A G
    return 0.5 * (out + out.transpose());
}

Matrix DcFactor::solve(const Matrix& x) const
{
    assert(invertible_);
    const Index n = size();
    const Matrix z = diag_.cwiseInverse().asDiagonal() * x;
    Matrix v(n, x.cols());
    if (n == 0)
        return v;
    v.row(0) = z.row(0);
    for (Index k = 1; k < n; ++k)
        v.row(k) = (z.row(k) - rho_ * z.row(k - 1)) / innov_;
    return v;
}

Vector DcFactor::solve(const Vector& x) const
{
    return solve(Matrix(x)).col(0);
}

} // namespace sysid
