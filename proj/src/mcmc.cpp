#include "sysid/mcmc.hpp"

#include <cassert>
#include <cmath>
#include <map>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sysid/errors.hpp"
#include "sysid/kernels.hpp"

namespace sysid {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Matrix proposal_root(const Matrix& cov)
{
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success)
        return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

} // namespace

AMState::AMState(Vector start, double start_log_target, Matrix initial_cov, double epsilon)
    : current_(std::move(start)),
      current_log_target_(start_log_target),
      initial_cov_(std::move(initial_cov)),
      mean_(Vector::Zero(current_.size())),
      scatter_(Matrix::Zero(current_.size(), current_.size())),
      adapt_start_(std::max<Index>(100, 10 * current_.size())),
      s_d_(2.4 * 2.4 / static_cast<double>(current_.size())),
      epsilon_(epsilon)
{
    assert(epsilon > 0.0);
}

Matrix AMState::sample_covariance() const
{
    if (count_ < 2)
        return Matrix::Zero(dim(), dim());
    return scatter_ / static_cast<double>(count_ - 1);
}

Matrix AMState::adapted_covariance() const
{
    Matrix c = s_d_ * sample_covariance();
    c.diagonal().array() += epsilon_;
    return c;
}

Matrix AMState::proposal_covariance() const
{
    if (count_ >= 2 && count_ >= adapt_start_)
        return adapted_covariance();
    Matrix c = s_d_ * initial_cov_;
    c.diagonal().array() += epsilon_;
    return c;
}

void AMState::record(const Vector& x)
{
    ++count_;
    const Vector delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    scatter_.noalias() += delta * (x - mean_).transpose();
}

const Vector& AMState::step(const LogTarget& log_target, Rng& rng)
{
    const Matrix root = proposal_root(proposal_covariance());
    const Vector proposal = current_ + root * standard_normal(dim(), rng);
    const double lt = log_target(proposal);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    if (std::isfinite(lt) && std::log(u) <= lt - current_log_target_) {
        current_ = proposal;
        current_log_target_ = lt;
        ++accepts_;
    }
    record(current_);
    return current_;
}

Matrix haario_update(const Matrix& cov, const Vector& mean_prev, const Vector& mean, const Vector& x,
                     Index i)
{
    assert(i >= 1);
    const auto fi = static_cast<double>(i);
    return ((fi - 1.0) / fi) * cov +
           (1.0 / fi) * (fi * mean_prev * mean_prev.transpose() - (fi + 1.0) * mean * mean.transpose() +
                         x * x.transpose());
}

Matrix numerical_hessian(const LogTarget& f, const Vector& x, double h)
{
    const Index d = x.size();
    Matrix hess(d, d);
    const double f0 = f(x);
    auto at = [&](Index i, double si, Index j, double sj) {
        Vector p = x;
        p[i] += si * h;
        p[j] += sj * h;
        return f(p);
    };
    for (Index i = 0; i < d; ++i) {
        Vector p = x, m = x;
        p[i] += h;
        m[i] -= h;
        hess(i, i) = (f(p) - 2.0 * f0 + f(m)) / (h * h);
        for (Index j = 0; j < i; ++j) {
            const double v = (at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1)) /
                             (4.0 * h * h);
            hess(i, j) = hess(j, i) = v;
        }
    }
    return hess;
}

AMState am_init(const Vector& mode, const LogTarget& log_target, double epsilon_rel)
{
    const Index d = mode.size();
    const double f0 = log_target(mode);
    assert(std::isfinite(f0));

    Matrix h0 = 1e-2 * Matrix::Identity(d, d);
    const Matrix neg = -numerical_hessian(log_target, mode);
    if (neg.allFinite()) {
        Eigen::LLT<Matrix> llt(neg);
        if (llt.info() == Eigen::Success) {
            Matrix inv = llt.solve(Matrix::Identity(d, d));
            if (inv.allFinite())
                h0 = 0.5 * (inv + inv.transpose());
        }
    }
    const double eps = epsilon_rel * h0.trace() / static_cast<double>(d);
    return AMState(mode, f0, std::move(h0), eps);
}

AMRun run_am(AMState& state, const LogTarget& log_target, Index N, Rng& rng, const AMOptions& opt)
{
    assert(N >= 1);
    Index window_accepts = 0;
    std::vector<char> burn_flags;
    burn_flags.reserve(static_cast<std::size_t>(opt.burn_in));
    for (Index i = 0; i < opt.burn_in; ++i) {
        const Index before = state.accepts();
        state.step(log_target, rng);
        window_accepts += state.accepts() - before;
        burn_flags.push_back(state.accepts() > before);
        if ((i + 1) % opt.window == 0) {
            const double rate = static_cast<double>(window_accepts) / static_cast<double>(opt.window);
            state.set_s_d(rate > opt.target_rate ? state.s_d() * opt.scale_factor
                                                 : state.s_d() / opt.scale_factor);
            window_accepts = 0;
        }
    }

    AMRun run;
    run.samples.resize(state.dim(), N);
    run.log_target.reserve(static_cast<std::size_t>(N));
    run.accepted.reserve(static_cast<std::size_t>(N));
    Index kept_accepts = 0;
    for (Index i = 0; i < N; ++i) {
        const Index before = state.accepts();
        run.samples.col(i) = state.step(log_target, rng);
        const bool acc = state.accepts() > before;
        kept_accepts += acc;
        run.accepted.push_back(acc);
        run.log_target.push_back(state.current_log_target());
    }
    run.acceptance_rate = static_cast<double>(kept_accepts) / static_cast<double>(N);
    run.final_s_d = state.s_d();
    // Short runs are judged over one full window, reaching back into burn-in.
    double stall_rate = run.acceptance_rate;
    if (N < opt.window) {
        const auto from_burn = std::min<Index>(opt.window - N, static_cast<Index>(burn_flags.size()));
        Index acc = kept_accepts;
        for (auto it = burn_flags.end() - from_burn; it != burn_flags.end(); ++it)
            acc += *it;
        stall_rate = static_cast<double>(acc) / static_cast<double>(N + from_burn);
    }
    if (stall_rate < opt.min_rate)
        throw ChainStalled("acceptance rate " + std::to_string(stall_rate) + " after burn-in");
    return run;
}

AMRun run_am(const LogTarget& log_target, const Vector& mode, Index N, Rng& rng, const AMOptions& opt)
{
    AMState state = am_init(mode, log_target);
    return run_am(state, log_target, N, rng, opt);
}

double hyper_log_posterior(const Hyperparams& eta, const GramData& gram, double sigma2)
{
    if (!eta.in_box() || eta.c > kMaxKernelScale)
        return kNegInf;
    try {
        return log_marginal_likelihood(eta, gram, sigma2);
    } catch (const NonPositiveDefinite&) {
        return kNegInf;
    }
}

FbResult fb_estimate(const GramData& gram, double sigma2, const Hyperparams& eta_eb, Index N, Rng& rng,
                     const AMOptions& opt)
{
    const LogTarget target = [&](const Vector& v) {
        return hyper_log_posterior(Hyperparams::from_vector(v), gram, sigma2);
    };
    Hyperparams start = eta_eb;
    start.c = std::min(start.c, kMaxKernelScale);
    const AMRun run = run_am(target, start.as_vector(), N, rng, opt);

    FbResult out;
    out.eta_samples = run.samples;
    out.acceptance_rate = run.acceptance_rate;
    out.h_samples.resize(gram.n(), N);
    std::optional<PosteriorFactor> factor;
    for (Index i = 0; i < N; ++i) {
        const Hyperparams eta = Hyperparams::from_vector(run.samples.col(i));
        if (!factor || !(factor->eta() == eta))
            factor.emplace(eta, gram, sigma2);
        out.h_samples.col(i) = factor->sample(rng);
    }
    out.h_fb = out.h_samples.rowwise().mean();
    return out;
}

ConfidenceSet fb_confidence_set(const FbResult& result, const GramData& gram, double sigma2, double alpha)
{
    const Index N = result.h_samples.cols();
    if (N == 0)
        throw EmptySet("no Full Bayes samples to score");

    // Rejected proposals repeat eta; identical draws share one component.
    std::map<std::tuple<double, double, double>, std::size_t> index;
    std::vector<Hyperparams> unique;
    std::vector<double> counts;
    for (Index i = 0; i < N; ++i) {
        const Hyperparams eta = Hyperparams::from_vector(result.eta_samples.col(i));
        const auto [it, fresh] = index.try_emplace({eta.c, eta.rho, eta.lambda}, unique.size());
        if (fresh) {
            unique.push_back(eta);
            counts.push_back(0.0);
        }
        counts[it->second] += 1.0;
    }

    std::vector<PosteriorFactor> components;
    std::vector<double> log_weights;
    components.reserve(unique.size());
    for (std::size_t j = 0; j < unique.size(); ++j) {
        components.emplace_back(unique[j], gram, sigma2);
        log_weights.push_back(std::log(counts[j] / static_cast<double>(N)));
    }
    const std::vector<double> scores = kernels::mixture_log_density(components, log_weights, result.h_samples);
    return percentile_set(result.h_samples, scores, alpha);
}

} // namespace sysid
