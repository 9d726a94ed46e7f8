#pragma once

#include <vector>

#include "sysid/bayes.hpp"

/// Data-parallel inner loops of the estimators. Every kernel has a plain
/// serial reference (`*_serial`) kept for testing and benchmarking; the
/// default entry point is the OpenMP version. Results of the parallel
/// versions do not depend on the number of threads.
namespace sysid::kernels {

/// Impulse responses (n x N) of the OE parameter columns of `thetas`
/// (rows b_1..b_nb, f_1..f_nf).
Matrix impulse_responses(const Matrix& thetas, Index nb, Index nf, Index n);
Matrix impulse_responses_serial(const Matrix& thetas, Index nb, Index nf, Index n);

/// ln sum_j w_j N(h_i; mean_j, cov_j) for every column h_i of `h`, with
/// log_weights[j] = ln w_j. Components with singular covariance contribute
/// nothing.
std::vector<double> mixture_log_density(const std::vector<PosteriorFactor>& components,
                                        const std::vector<double>& log_weights, const Matrix& h);
std::vector<double> mixture_log_density_serial(const std::vector<PosteriorFactor>& components,
                                               const std::vector<double>& log_weights,
                                               const Matrix& h);

} // namespace sysid::kernels
