#pragma once

#include <vector>

#include "sysid/confidence.hpp"
#include "sysid/system.hpp"

namespace sysid {

/// Output-error parameters: B(q) = b1 q^-1 + ... + b_nb q^-nb,
/// F(q) = 1 + f1 q^-1 + ... + f_nf q^-nf.
struct OEParams {
    Vector b;
    Vector f;

    Index nb() const { return b.size(); }
    Index nf() const { return f.size(); }
    Index dim() const { return b.size() + f.size(); }

    Vector stacked() const;
    static OEParams unstack(const Vector& theta, Index nb, Index nf);

    bool is_stable() const;
    DiscreteSystem system() const;
    ImpulseResponse impulse_response(Index n) const;
};

struct PemFit {
    OEParams theta;
    double cost = 0.0;
    double sigma2_hat = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct AsymptoticCovariance {
    Matrix sigma_theta;
};

struct PemOptions {
    int random_starts = 5;
    int max_iterations = 200;
    double lambda_init = 1e-3;
    double rel_cost_tol = 1e-10;
    double grad_tol = 1e-8;
};

Vector predict_oe(const OEParams& theta, const Vector& u);

/// (1/T) sum (y - yhat)^2.
double pem_cost(const OEParams& theta, const Dataset& data);

/// Predictor gradient, one row per sample: columns d/db_k then d/df_k.
Matrix gradient_psi(const OEParams& theta, const Vector& u);

/// Levenberg-Marquardt from one starting point. F is kept stable.
PemFit refine_oe(const Dataset& data, const OEParams& init, const PemOptions& opt = {});

/// Multi-start fit: an ARX / Steiglitz-McBride start, `opt.random_starts`
/// random stable-denominator starts, and `init` when given.
PemFit fit_oe(const Dataset& data, Index nb, Index nf, Rng& rng,
              const OEParams* init = nullptr, const PemOptions& opt = {});

/// sigma_theta = J(theta) * [(1/T) sum psi psi^T]^-1.
AsymptoticCovariance asymptotic_covariance(const PemFit& fit, const Dataset& data);

/// T ln J + d ln T.
double bic(const PemFit& fit, Index T);

/// Fits nb = nf = k for every k in [lo, hi]. Entry i corresponds to order
/// lo + i; failed fits are left with converged = false and infinite cost.
struct OrderSweep {
    int lo = 0;
    std::vector<PemFit> fits;
};

OrderSweep fit_order_range(const Dataset& data, int lo, int hi, std::uint64_t seed,
                           const PemOptions& opt = {});

struct OrderChoice {
    PemFit fit;
    int order = 0;
};

OrderChoice select_order_bic(const OrderSweep& sweep, Index T);
OrderChoice select_order_oracle(const OrderSweep& sweep, const ImpulseResponse& true_h);

/// Convenience forms that run the sweep themselves.
OrderChoice select_order_bic(const Dataset& data, int lo, int hi, std::uint64_t seed);
OrderChoice select_order_oracle(const Dataset& data, int lo, int hi,
                                const ImpulseResponse& true_h, std::uint64_t seed);

/// Draws N stable parameter vectors from N(theta_hat, sigma_theta / T) by
/// rejection and keeps the alpha-fraction with highest Gaussian density.
ConfidenceSet sample_asymptotic_confidence(const PemFit& fit, const AsymptoticCovariance& cov,
                                           Index T, Index N, double alpha, Index n, Rng& rng);

struct LikelihoodSamplingOptions {
    Index burn_in = 3000;
    double target_rate = 0.30;
};

/// Log-likelihood of theta given the data at a fixed noise variance; -inf
/// for unstable F.
double oe_log_likelihood(const OEParams& theta, const Dataset& data, double sigma2);

struct ParameterChain {
    Matrix samples;              ///< dim x N, post burn-in
    std::vector<double> log_target;
    double acceptance_rate = 0.0;
};

ParameterChain sample_parameter_chain(const PemFit& fit, const Dataset& data, double sigma2_hat,
                                      Index N, Rng& rng, const LikelihoodSamplingOptions& opt = {});

ConfidenceSet sample_likelihood_confidence(const PemFit& fit, const Dataset& data, double sigma2_hat,
                                           Index N, double alpha, Index n, Rng& rng,
                                           const LikelihoodSamplingOptions& opt = {});

/// Residual variance of the least-squares FIR(n) fit, ||Y - Phi h||^2 / (T - n).
double estimate_noise_variance_ls(const Dataset& data, Index n);

} // namespace sysid
