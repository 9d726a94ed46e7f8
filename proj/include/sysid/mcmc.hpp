#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "sysid/bayes.hpp"
#include "sysid/confidence.hpp"

namespace sysid {

/// Log of an unnormalized density; -inf outside the support.
using LogTarget = std::function<double(const Vector&)>;

/// Adaptive Metropolis state (Haario, Saksman and Tamminen). The running
/// mean and scatter of the draws are kept with Welford updates; the proposal
/// covariance is s_d * Cov + eps * I once adaptation has started and
/// s_d * H0 + eps * I before.
class AMState {
public:
    AMState(Vector start, double start_log_target, Matrix initial_cov, double epsilon);

    const Vector& current() const { return current_; }
    double current_log_target() const { return current_log_target_; }
    const Vector& mean() const { return mean_; }
    const Matrix& initial_covariance() const { return initial_cov_; }
    Index dim() const { return current_.size(); }
    /// Number of draws produced so far (the start point is not a draw).
    Index iterations() const { return count_; }
    Index accepts() const { return accepts_; }
    double epsilon() const { return epsilon_; }

    double s_d() const { return s_d_; }
    void set_s_d(double s) { s_d_ = s; }

    /// Proposal covariance switches from s_d * H0 to the adapted form once
    /// this many draws exist.
    Index adapt_start() const { return adapt_start_; }
    void set_adapt_start(Index k) { adapt_start_ = k; }

    /// Unbiased sample covariance of the draws (zero for fewer than two).
    Matrix sample_covariance() const;
    /// s_d * sample_covariance() + eps * I.
    Matrix adapted_covariance() const;
    Matrix proposal_covariance() const;

    /// One Metropolis step with Gaussian proposal. Returns the new draw.
    const Vector& step(const LogTarget& log_target, Rng& rng);

private:
    void record(const Vector& x);

    Vector current_;
    double current_log_target_;
    Matrix initial_cov_;
    Vector mean_;
    Matrix scatter_;
    Index count_ = 0;
    Index accepts_ = 0;
    Index adapt_start_;
    double s_d_;
    double epsilon_;
};

/// Classical Haario recursion with the scale factored out:
/// C_next = ((i-1)/i) C + (1/i) (i m_prev m_prev^T - (i+1) m m^T + x x^T),
/// where C is the covariance of the first i points, m_prev their mean and m
/// the mean including x.
Matrix haario_update(const Matrix& cov, const Vector& mean_prev, const Vector& mean,
                     const Vector& x, Index i);

/// Central-difference Hessian, step `h` per coordinate, symmetrized.
Matrix numerical_hessian(const LogTarget& f, const Vector& x, double h = 1e-4);

/// Starts the chain at `mode` with H0 = -Hessian^-1 (1e-2 I when the Hessian
/// is not negative definite) and s_d = 2.4^2 / d.
AMState am_init(const Vector& mode, const LogTarget& log_target, double epsilon_rel = 1e-8);

struct AMRun {
    Matrix samples;                  ///< d x N, post burn-in
    std::vector<double> log_target;  ///< per kept sample
    std::vector<char> accepted;      ///< per kept sample
    double acceptance_rate = 0.0;    ///< post burn-in
    double final_s_d = 0.0;
};

struct AMOptions {
    Index burn_in = 3000;
    double target_rate = 0.30;
    Index window = 200;
    double scale_factor = 1.3;
    double min_rate = 0.01;
};

/// Runs burn_in + N steps; s_d is steered toward target_rate per window
/// during burn-in only. Throws ChainStalled when the post burn-in acceptance
/// rate (taken over at least one window) falls below min_rate.
AMRun run_am(AMState& state, const LogTarget& log_target, Index N, Rng& rng,
             const AMOptions& opt = {});
AMRun run_am(const LogTarget& log_target, const Vector& mode, Index N, Rng& rng,
             const AMOptions& opt = {});

/// Upper bound of c in the flat hyperparameter prior.
inline constexpr double kMaxKernelScale = 1e4;

/// log p(Y | eta) + log of the flat box prior.
double hyper_log_posterior(const Hyperparams& eta, const GramData& gram, double sigma2);

struct FbResult {
    Matrix eta_samples;  ///< 3 x N, rows c, rho, lambda
    Matrix h_samples;    ///< n x N
    Vector h_fb;
    double acceptance_rate = 0.0;
};

FbResult fb_estimate(const GramData& gram, double sigma2, const Hyperparams& eta_eb,
                     Index N, Rng& rng, const AMOptions& opt = {});

/// Scores each h sample by the equally weighted mixture of the conditional
/// posteriors at the sampled eta and keeps the alpha-fraction with highest
/// score.
ConfidenceSet fb_confidence_set(const FbResult& result, const GramData& gram, double sigma2,
                                double alpha);

} // namespace sysid
