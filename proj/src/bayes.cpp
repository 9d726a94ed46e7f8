#include "sysid/bayes.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sysid/chi2.hpp"
#include "sysid/errors.hpp"
#include "sysid/nelder_mead.hpp"

namespace sysid {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Cholesky with one jittered retry.
Matrix cholesky_lower(const Matrix& m)
{
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success)
        return llt.matrixL();
    const double jitter = 1e-10 * m.trace() / static_cast<double>(m.rows());
    llt.compute(m + jitter * Matrix::Identity(m.rows(), m.cols()));
    if (llt.info() != Eigen::Success)
        throw NonPositiveDefinite("reduced marginal covariance is not positive definite");
    return llt.matrixL();
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

GramData GramData::from(const Vector& y, const RegressorMatrix& phi)
{
    GramData g;
    g.gram = phi.phi.transpose() * phi.phi;
    g.phi_y = phi.phi.transpose() * y;
    g.yty = y.squaredNorm();
    g.T = y.size();
    return g;
}

PosteriorFactor::PosteriorFactor(const Hyperparams& eta, const GramData& gram, double sigma2)
    : eta_(eta), sigma2_(sigma2), g_(eta, gram.n())
{
    if (!(sigma2 > 0.0) || !eta.in_box())
        throw NonPositiveDefinite("noise variance must be positive and eta inside the box");
    const Index n = gram.n();
    Matrix m = g_.sandwich(gram.gram);
    m.diagonal().array() += sigma2;
    l_ = cholesky_lower(m);
    log_det_m_ = 2.0 * l_.diagonal().array().log().sum();

    const Vector b = g_.apply_transpose(gram.phi_y);
    const Vector minv_b = l_.transpose().triangularView<Eigen::Upper>().solve(
        l_.triangularView<Eigen::Lower>().solve(b));
    mean_ = g_.apply(minv_b);

    const double quad = (gram.yty - b.dot(minv_b)) / sigma2;
    const double log_det_sy = static_cast<double>(gram.T - n) * std::log(sigma2) + log_det_m_;
    log_ml_ = -0.5 * (static_cast<double>(gram.T) * kLog2Pi + log_det_sy + quad);
}

double PosteriorFactor::log_det_cov() const
{
    const auto n = static_cast<double>(mean_.size());
    return n * std::log(sigma2_) + 2.0 * g_.log_det() - log_det_m_;
}

Matrix PosteriorFactor::covariance() const
{
    // sigma^2 (G L^-T)(G L^-T)^T
    const Index n = mean_.size();
    const Matrix linv_t = l_.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(n, n));
    const Matrix s = g_.apply(linv_t);
    Matrix cov = sigma2_ * (s * s.transpose());
    return 0.5 * (cov + cov.transpose());
}

GaussianPosterior PosteriorFactor::posterior() const
{
    return GaussianPosterior{mean_, covariance(), eta_};
}

Vector PosteriorFactor::sample(Rng& rng) const
{
    const Vector z = standard_normal(mean_.size(), rng);
    const Vector w = l_.transpose().triangularView<Eigen::Upper>().solve(z);
    return mean_ + std::sqrt(sigma2_) * g_.apply(w);
}

double PosteriorFactor::log_density(const Vector& h) const
{
    if (!g_.invertible())
        return -std::numeric_limits<double>::infinity();
    const Vector v = g_.solve(Vector(h - mean_));
    const double q = (l_.transpose() * v).squaredNorm() / sigma2_;
    return -0.5 * (static_cast<double>(mean_.size()) * kLog2Pi + log_det_cov() + q);
}

double log_marginal_likelihood(const Hyperparams& eta, const GramData& gram, double sigma2)
{
    return PosteriorFactor(eta, gram, sigma2).log_marginal_likelihood();
}

double log_marginal_likelihood(const Hyperparams& eta, const Vector& y, const RegressorMatrix& phi,
                               double sigma2)
{
    return log_marginal_likelihood(eta, GramData::from(y, phi), sigma2);
}

Hyperparams maximize_marginal_likelihood(const GramData& gram, double sigma2, const Hyperparams& init,
                                         const EbOptions& opt)
{
    assert(init.in_box());
    constexpr double kEdge = 1.0 - 1e-12;
    auto to_free = [&](const Hyperparams& e) {
        const double rho = std::clamp(e.rho, -kEdge, kEdge);
        const double lam = std::clamp(e.lambda, 1.0 - kEdge, kEdge);
        return Vector{{std::log(std::max(e.c, 1e-300)), std::atanh(rho), std::log(lam / (1.0 - lam))}};
    };
    auto from_free = [](const Vector& x) {
        return Hyperparams{std::exp(x[0]), std::tanh(x[1]), logistic(x[2])};
    };
    auto objective = [&](const Vector& x) {
        const Hyperparams eta = from_free(x);
        if (!eta.in_box() || !std::isfinite(x[0]))
            return std::numeric_limits<double>::infinity();
        try {
            return -log_marginal_likelihood(eta, gram, sigma2);
        } catch (const NonPositiveDefinite&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    std::vector<Hyperparams> starts;
    for (double rho : {0.5, -0.5})
        for (double lam : {0.8, 0.95})
            starts.push_back({1.0, rho, lam});
    if (std::find(starts.begin(), starts.end(), init) == starts.end())
        starts.push_back(init);

    Hyperparams best = init;
    double best_value = objective(to_free(init));
    for (const auto& s : starts) {
        // Restart once from the optimum to shake off a collapsed simplex.
        auto r = nelder_mead(objective, to_free(s), 0.5, opt.tolerance, opt.max_evaluations);
        r = nelder_mead(objective, r.x, 0.1, opt.tolerance, opt.max_evaluations);
        if (r.value < best_value) {
            best_value = r.value;
            best = from_free(r.x);
        }
    }
    return best;
}

GaussianPosterior posterior(const Hyperparams& eta, const GramData& gram, double sigma2)
{
    return PosteriorFactor(eta, gram, sigma2).posterior();
}

GaussianPosterior posterior(const Hyperparams& eta, const Vector& y, const RegressorMatrix& phi,
                            double sigma2)
{
    return posterior(eta, GramData::from(y, phi), sigma2);
}

EbEstimate eb_estimate(const GramData& gram, double sigma2)
{
    const Hyperparams eta = maximize_marginal_likelihood(gram, sigma2);
    GaussianPosterior post = posterior(eta, gram, sigma2);
    ImpulseResponse h{post.mean};
    return EbEstimate{std::move(h), std::move(post), eta};
}

EbEstimate eb_estimate(const Dataset& data, Index n, double sigma2)
{
    return eb_estimate(GramData::from(data.y, build_regressor(data.u, n)), sigma2);
}

namespace {

struct SpectralRoot {
    Matrix vectors;
    Vector root_values;  ///< sqrt of clamped eigenvalues
    Vector inv_values;   ///< 1/eigenvalue on the numerical range, else 0
};

SpectralRoot spectral_root(const Matrix& cov)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    const Vector ev = es.eigenvalues();
    const double cutoff = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    SpectralRoot r{es.eigenvectors(), Vector(ev.size()), Vector(ev.size())};
    for (Index i = 0; i < ev.size(); ++i) {
        const bool live = ev[i] > cutoff;
        r.root_values[i] = live ? std::sqrt(ev[i]) : 0.0;
        r.inv_values[i] = live ? 1.0 / ev[i] : 0.0;
    }
    return r;
}

} // namespace

double mahalanobis(const GaussianPosterior& post, const Vector& x)
{
    const SpectralRoot r = spectral_root(post.cov);
    const Vector proj = r.vectors.transpose() * (x - post.mean);
    return proj.cwiseAbs2().dot(r.inv_values);
}

ConfidenceSet eb_confidence_set(const GaussianPosterior& post, Index N, double alpha, Rng& rng)
{
    assert(alpha > 0.0 && alpha < 1.0);
    const Index n = post.mean.size();
    const double radius = chi2_quantile(alpha, static_cast<int>(n));
    const SpectralRoot r = spectral_root(post.cov);

    ConfidenceSet set;
    set.alpha = alpha;
    set.raw_count = N;
    set.threshold = -0.5 * radius;
    for (Index i = 0; i < N; ++i) {
        const Vector z = standard_normal(n, rng);
        double q = 0.0;
        for (Index k = 0; k < n; ++k)
            if (r.inv_values[k] > 0.0)
                q += z[k] * z[k];
        if (q > radius)
            continue;
        set.members.push_back(ImpulseResponse{post.mean + r.vectors * r.root_values.cwiseProduct(z)});
        set.scores.push_back(-0.5 * q);
    }
    return set;
}

} // namespace sysid
