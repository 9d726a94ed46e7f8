#pragma once

#include <optional>

#include "sysid/confidence.hpp"
#include "sysid/dc_kernel.hpp"
#include "sysid/system.hpp"

namespace sysid {

/// Sufficient statistics of (Y, Phi) for the linear-Gaussian model.
struct GramData {
    Matrix gram;     ///< Phi^T Phi
    Vector phi_y;    ///< Phi^T Y
    double yty = 0;
    Index T = 0;

    Index n() const { return gram.rows(); }
    static GramData from(const Vector& y, const RegressorMatrix& phi);
};

struct GaussianPosterior {
    Vector mean;
    Matrix cov;
    Hyperparams eta;
};

/// Posterior of h | Y, eta in factored form. With W = Phi G and
/// M = sigma^2 I + W^T W (always positive definite):
///   mean = G M^-1 G^T Phi^T Y,   cov = sigma^2 G M^-1 G^T.
class PosteriorFactor {
public:
    PosteriorFactor(const Hyperparams& eta, const GramData& gram, double sigma2);

    const Hyperparams& eta() const { return eta_; }
    const Vector& mean() const { return mean_; }
    double sigma2() const { return sigma2_; }
    const DcFactor& kernel_factor() const { return g_; }
    /// Lower Cholesky factor of M.
    const Matrix& m_factor() const { return l_; }
    double log_det_m() const { return log_det_m_; }
    /// ln det cov; -inf when the prior factor is singular.
    double log_det_cov() const;

    /// ln p(Y | eta).
    double log_marginal_likelihood() const { return log_ml_; }

    Matrix covariance() const;
    GaussianPosterior posterior() const;

    /// mean + sigma G L^-T z for z ~ N(0, I).
    Vector sample(Rng& rng) const;

    /// ln N(h; mean, cov); -inf when the covariance is singular.
    double log_density(const Vector& h) const;

private:
    Hyperparams eta_;
    double sigma2_;
    DcFactor g_;
    Matrix l_;
    double log_det_m_ = 0;
    Vector mean_;
    double log_ml_ = 0;
};

double log_marginal_likelihood(const Hyperparams& eta, const GramData& gram, double sigma2);
double log_marginal_likelihood(const Hyperparams& eta, const Vector& y,
                               const RegressorMatrix& phi, double sigma2);

struct EbOptions {
    double tolerance = 1e-8;
    int max_evaluations = 3000;
};

/// Nelder-Mead on (ln c, atanh rho, logit lambda) from the starts
/// c = 1, rho = +-0.5, lambda in {0.8, 0.95}, plus `init`.
Hyperparams maximize_marginal_likelihood(const GramData& gram, double sigma2,
                                         const Hyperparams& init = {}, const EbOptions& opt = {});

GaussianPosterior posterior(const Hyperparams& eta, const GramData& gram, double sigma2);
GaussianPosterior posterior(const Hyperparams& eta, const Vector& y, const RegressorMatrix& phi,
                            double sigma2);

struct EbEstimate {
    ImpulseResponse h;
    GaussianPosterior post;
    Hyperparams eta;
};

EbEstimate eb_estimate(const Dataset& data, Index n, double sigma2);
EbEstimate eb_estimate(const GramData& gram, double sigma2);

/// (x - mean)^T cov^+ (x - mean), pseudo-inverse on the range of cov.
double mahalanobis(const GaussianPosterior& post, const Vector& x);

/// Samples N draws from the posterior and keeps those inside the
/// chi2_alpha(n) ellipsoid. Scores are -q/2 with q the Mahalanobis distance.
ConfidenceSet eb_confidence_set(const GaussianPosterior& post, Index N, double alpha, Rng& rng);

} // namespace sysid
