#include "sysid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sysid::kernels {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr Index kBlock = 64;

void impulse_response_column(const Matrix& thetas, Index col, Index nb, Index nf, Index n,
                             Matrix& out)
{
    for (Index k = 0; k < n; ++k) {
        double acc = k < nb ? thetas(k, col) : 0.0;
        for (Index j = 1; j <= nf && j <= k; ++j)
            acc -= thetas(nb + j - 1, col) * out(k - j, col);
        out(k, col) = acc;
    }
}

} // namespace

Matrix impulse_responses_serial(const Matrix& thetas, Index nb, Index nf, Index n)
{
    Matrix out(n, thetas.cols());
    for (Index c = 0; c < thetas.cols(); ++c)
        impulse_response_column(thetas, c, nb, nf, n, out);
    return out;
}

Matrix impulse_responses(const Matrix& thetas, Index nb, Index nf, Index n)
{
    Matrix out(n, thetas.cols());
    const Index cols = thetas.cols();
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < cols; ++c)
        impulse_response_column(thetas, c, nb, nf, n, out);
    return out;
}

std::vector<double> mixture_log_density_serial(const std::vector<PosteriorFactor>& components,
                                               const std::vector<double>& log_weights, const Matrix& h)
{
    const Index count = h.cols();
    std::vector<double> out(static_cast<std::size_t>(count));
    std::vector<double> terms(components.size());
    for (Index i = 0; i < count; ++i) {
        const Vector hi = h.col(i);
        for (std::size_t j = 0; j < components.size(); ++j)
            terms[j] = log_weights[j] + components[j].log_density(hi);
        const double peak = *std::max_element(terms.begin(), terms.end());
        if (!std::isfinite(peak)) {
            out[static_cast<std::size_t>(i)] = peak;
            continue;
        }
        double sum = 0.0;
        for (double t : terms)
            sum += std::exp(t - peak);
        out[static_cast<std::size_t>(i)] = peak + std::log(sum);
    }
    return out;
}

std::vector<double> mixture_log_density(const std::vector<PosteriorFactor>& components,
                                        const std::vector<double>& log_weights, const Matrix& h)
{
    const Index n = h.rows();
    const Index count = h.cols();
    const Index blocks = (count + kBlock - 1) / kBlock;
    std::vector<double> out(static_cast<std::size_t>(count));

    // Per component: ln w - (n ln 2pi + ln det cov) / 2.
    std::vector<double> offsets(components.size());
    for (std::size_t j = 0; j < components.size(); ++j)
        offsets[j] = log_weights[j] -
                     0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) +
                            components[j].log_det_cov());

#pragma omp parallel for schedule(dynamic)
    for (Index b = 0; b < blocks; ++b) {
        const Index first = b * kBlock;
        const Index width = std::min(kBlock, count - first);
        const auto block = h.middleCols(first, width);
        Eigen::ArrayXd peak = Eigen::ArrayXd::Constant(width, kNegInf);
        Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(width);
        for (std::size_t j = 0; j < components.size(); ++j) {
            const PosteriorFactor& comp = components[j];
            if (!comp.kernel_factor().invertible() || !std::isfinite(offsets[j]))
                continue;
            const Matrix v = comp.kernel_factor().solve(Matrix(block.colwise() - comp.mean()));
            const Matrix w = comp.m_factor().transpose().triangularView<Eigen::Upper>() * v;
            const Eigen::ArrayXd terms =
                offsets[j] - 0.5 * w.colwise().squaredNorm().transpose().array() / comp.sigma2();
            for (Index i = 0; i < width; ++i) {
                const double t = terms[i];
                if (t == kNegInf)
                    continue;
                if (t > peak[i]) {
                    sum[i] = sum[i] * std::exp(peak[i] - t) + 1.0;
                    peak[i] = t;
                } else {
                    sum[i] += std::exp(t - peak[i]);
                }
            }
        }
        for (Index i = 0; i < width; ++i)
            out[static_cast<std::size_t>(first + i)] =
                std::isfinite(peak[i]) ? peak[i] + std::log(sum[i]) : peak[i];
    }
    return out;
}

} // namespace sysid::kernels
