#pragma once

namespace sysid {

/// P(chi2(dof) <= x), the regularized lower incomplete gamma P(dof/2, x/2).
double chi2_cdf(double x, int dof);

/// Inverse of chi2_cdf by safeguarded Newton iteration, |cdf - alpha| < 1e-12.
double chi2_quantile(double alpha, int dof);

} // namespace sysid
