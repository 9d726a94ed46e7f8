#include "sysid/pem.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sysid/errors.hpp"
#include "sysid/kernels.hpp"
#include "sysid/mcmc.hpp"
#include "sysid/metrics.hpp"
#include "sysid/polynomial.hpp"

namespace sysid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x_out = (1/F) x from rest.
Vector inverse_filter(const Vector& f, const Vector& x)
{
    const Index T = x.size(), nf = f.size();
    Vector out(T);
    for (Index t = 0; t < T; ++t) {
        double acc = x[t];
        for (Index k = 1; k <= nf && k <= t; ++k)
            acc -= f[k - 1] * out[t - k];
        out[t] = acc;
    }
    return out;
}

// Columns: lags 1..count of x, zero before the record.
Matrix lagged(const Vector& x, Index count)
{
    const Index T = x.size();
    Matrix m = Matrix::Zero(T, count);
    for (Index k = 1; k <= count; ++k)
        m.col(k - 1).tail(std::max<Index>(T - k, 0)) = x.head(std::max<Index>(T - k, 0));
    return m;
}

Vector ridge_solve(const Matrix& a, const Vector& y)
{
    Matrix g = a.transpose() * a;
    const double tr = g.trace();
    g.diagonal().array() += 1e-10 * (tr > 0 ? tr / static_cast<double>(g.rows()) : 1.0);
    return g.ldlt().solve(a.transpose() * y);
}

// B by least squares given F.
Vector numerator_given_denominator(const Dataset& data, const Vector& f, Index nb)
{
    return ridge_solve(lagged(inverse_filter(f, data.u), nb), data.y);
}

// ARX least squares; the denominator is stabilized and B refit given F.
OEParams arx_start(const Dataset& data, Index nb, Index nf)
{
    Matrix reg(data.size(), nf + nb);
    reg << -lagged(data.y, nf), lagged(data.u, nb);
    const Vector sol = ridge_solve(reg, data.y);
    const Vector f = poly::stabilize(sol.head(nf), 0.99);
    return OEParams{numerator_given_denominator(data, f, nb), f};
}

OEParams random_start(const Dataset& data, Index nb, Index nf, Rng& rng)
{
    std::uniform_real_distribution<double> radius(0.3, 0.95);
    const Vector f = poly::from_roots(poly::random_disk_roots(static_cast<int>(nf), radius(rng), rng))
                         .tail(nf);
    return OEParams{numerator_given_denominator(data, f, nb), f};
}

} // namespace

Vector OEParams::stacked() const
{
    Vector t(dim());
    t << b, f;
    return t;
}

OEParams OEParams::unstack(const Vector& theta, Index nb, Index nf)
{
    return OEParams{theta.head(nb), theta.segment(nb, nf)};
}

bool OEParams::is_stable() const
{
    return poly::is_schur_stable(f);
}

DiscreteSystem OEParams::system() const
{
    DiscreteSystem s;
    s.num = Vector::Zero(nb() + 1);
    s.num.tail(nb()) = b;
    s.den = Vector(nf() + 1);
    s.den << 1.0, f;
    return s;
}

ImpulseResponse OEParams::impulse_response(Index n) const
{
    Vector h(n);
    for (Index k = 0; k < n; ++k) {
        double acc = k < nb() ? b[k] : 0.0;
        for (Index j = 1; j <= nf() && j <= k; ++j)
            acc -= f[j - 1] * h[k - j];
        h[k] = acc;
    }
    return ImpulseResponse{std::move(h)};
}

Vector predict_oe(const OEParams& theta, const Vector& u)
{
    const Index T = u.size(), nb = theta.nb(), nf = theta.nf();
    Vector y(T);
    for (Index t = 0; t < T; ++t) {
        double acc = 0.0;
        for (Index k = 1; k <= nb && k <= t; ++k)
            acc += theta.b[k - 1] * u[t - k];
        for (Index k = 1; k <= nf && k <= t; ++k)
            acc -= theta.f[k - 1] * y[t - k];
        y[t] = acc;
    }
    return y;
}

double pem_cost(const OEParams& theta, const Dataset& data)
{
    if (data.size() == 0)
        return 0.0;
    return (data.y - predict_oe(theta, data.u)).squaredNorm() / static_cast<double>(data.size());
}

namespace {

Matrix gradient_from_prediction(const OEParams& theta, const Vector& u, const Vector& yhat)
{
    const Index nb = theta.nb(), nf = theta.nf();
    Matrix psi(u.size(), nb + nf);
    psi.leftCols(nb) = lagged(inverse_filter(theta.f, u), nb);
    psi.rightCols(nf) = -lagged(inverse_filter(theta.f, yhat), nf);
    return psi;
}

} // namespace

Matrix gradient_psi(const OEParams& theta, const Vector& u)
{
    return gradient_from_prediction(theta, u, predict_oe(theta, u));
}

PemFit refine_oe(const Dataset& data, const OEParams& init, const PemOptions& opt)
{
    const Index nb = init.nb(), nf = init.nf();
    const auto T = static_cast<double>(data.size());
    OEParams theta{init.b, init.is_stable() ? init.f : poly::stabilize(init.f)};

    Vector yhat = predict_oe(theta, data.u);
    Vector resid = data.y - yhat;
    double cost = resid.squaredNorm() / T;

    PemFit fit;
    double lambda = opt.lambda_init;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const Matrix psi = gradient_from_prediction(theta, data.u, yhat);
        Matrix a(psi.cols(), psi.cols());
        a.setZero();
        a.selfadjointView<Eigen::Lower>().rankUpdate(psi.transpose());
        a = a.selfadjointView<Eigen::Lower>();
        const Vector g = psi.transpose() * resid;
        if ((2.0 / T) * g.cwiseAbs().maxCoeff() < opt.grad_tol) {
            fit.converged = true;
            break;
        }
        const Vector diag = a.diagonal().cwiseMax(1e-12 * std::max(a.diagonal().maxCoeff(), 1e-300));

        bool improved = false;
        double new_cost = cost;
        while (lambda < 1e12) {
            Matrix damped = a;
            damped.diagonal() += lambda * diag;
            const Vector step = damped.ldlt().solve(g);
            OEParams cand = OEParams::unstack(theta.stacked() + step, nb, nf);
            if (step.allFinite() && cand.is_stable()) {
                Vector cand_yhat = predict_oe(cand, data.u);
                Vector cand_resid = data.y - cand_yhat;
                const double c = cand_resid.squaredNorm() / T;
                if (c < cost) {
                    theta = std::move(cand);
                    yhat = std::move(cand_yhat);
                    resid = std::move(cand_resid);
                    new_cost = c;
                    improved = true;
                    lambda = std::max(lambda / 10.0, 1e-12);
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!improved) {
            // No descent direction left at machine precision.
            fit.converged = true;
            break;
        }
        const double rel = (cost - new_cost) / std::max(cost, 1e-300);
        cost = new_cost;
        if (rel < opt.rel_cost_tol) {
            fit.converged = true;
            ++it;
            break;
        }
    }
    fit.theta = std::move(theta);
    fit.cost = cost;
    fit.sigma2_hat = cost;
    fit.iterations = it;
    return fit;
}

PemFit fit_oe(const Dataset& data, Index nb, Index nf, Rng& rng, const OEParams* init,
              const PemOptions& opt)
{
    assert(nb >= 1 && nf >= 0 && data.size() > nb + nf);
    std::vector<OEParams> starts;
    starts.push_back(arx_start(data, nb, nf));
    for (int s = 0; s < opt.random_starts; ++s)
        starts.push_back(random_start(data, nb, nf, rng));
    if (init != nullptr)
        starts.push_back(*init);

    PemFit best;
    best.cost = kInf;
    for (const auto& s : starts) {
        PemFit f = refine_oe(data, s, opt);
        if (std::isfinite(f.cost) && f.cost < best.cost && f.theta.is_stable())
            best = std::move(f);
    }
    return best;
}

AsymptoticCovariance asymptotic_covariance(const PemFit& fit, const Dataset& data)
{
    const Matrix psi = gradient_psi(fit.theta, data.u);
    const auto T = static_cast<double>(std::max<Index>(data.size(), 1));
    Matrix info = psi.transpose() * psi / T;
    const Index d = info.rows();
    const double tr = info.trace();
    if (!(tr > 0.0) || !info.allFinite())
        throw SingularInformation("predictor gradient carries no information");

    Eigen::SelfAdjointEigenSolver<Matrix> es(info);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12)
        info.diagonal().array() += 1e-10 * tr / static_cast<double>(d);

    Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success)
        throw SingularInformation("information matrix is not invertible");
    Matrix inv = llt.solve(Matrix::Identity(d, d));
    Matrix sigma = fit.cost * 0.5 * (inv + inv.transpose());
    if (!sigma.allFinite())
        throw SingularInformation("asymptotic covariance is not finite");
    return AsymptoticCovariance{std::move(sigma)};
}

double bic(const PemFit& fit, Index T)
{
    const auto t = static_cast<double>(T);
    return t * std::log(fit.cost) + static_cast<double>(fit.theta.dim()) * std::log(t);
}

OrderSweep fit_order_range(const Dataset& data, int lo, int hi, std::uint64_t seed, const PemOptions& opt)
{
    assert(lo <= hi);
    OrderSweep sweep;
    sweep.lo = lo;
    sweep.fits.resize(static_cast<std::size_t>(hi - lo + 1));
#pragma omp parallel for schedule(dynamic)
    for (int k = lo; k <= hi; ++k) {
        PemFit& out = sweep.fits[static_cast<std::size_t>(k - lo)];
        try {
            Rng rng = make_stream(seed, "order:" + std::to_string(k));
            out = fit_oe(data, k, k, rng, nullptr, opt);
        } catch (const std::exception&) {
            out = PemFit{};
            out.cost = kInf;
        }
    }
    return sweep;
}

OrderChoice select_order_bic(const OrderSweep& sweep, Index T)
{
    OrderChoice best;
    double best_bic = kInf;
    bool any = false;
    for (std::size_t i = 0; i < sweep.fits.size(); ++i) {
        const PemFit& f = sweep.fits[i];
        if (!std::isfinite(f.cost))
            continue;
        const double b = bic(f, T);
        if (!any || b < best_bic) {
            any = true;
            best_bic = b;
            best = OrderChoice{f, sweep.lo + static_cast<int>(i)};
        }
    }
    if (!any)
        throw AllFitsFailed("no order in the range produced a fit");
    return best;
}

OrderChoice select_order_oracle(const OrderSweep& sweep, const ImpulseResponse& true_h)
{
    OrderChoice best;
    double best_fit = -kInf;
    bool any = false;
    for (std::size_t i = 0; i < sweep.fits.size(); ++i) {
        const PemFit& f = sweep.fits[i];
        if (!std::isfinite(f.cost))
            continue;
        const double score = impulse_fit(true_h, f.theta.impulse_response(true_h.size()));
        if (!any || score > best_fit) {
            any = true;
            best_fit = score;
            best = OrderChoice{f, sweep.lo + static_cast<int>(i)};
        }
    }
    if (!any)
        throw AllFitsFailed("no order in the range produced a fit");
    return best;
}

OrderChoice select_order_bic(const Dataset& data, int lo, int hi, std::uint64_t seed)
{
    return select_order_bic(fit_order_range(data, lo, hi, seed), data.size());
}

OrderChoice select_order_oracle(const Dataset& data, int lo, int hi, const ImpulseResponse& true_h,
                                std::uint64_t seed)
{
    return select_order_oracle(fit_order_range(data, lo, hi, seed), true_h);
}

ConfidenceSet sample_asymptotic_confidence(const PemFit& fit, const AsymptoticCovariance& cov, Index T,
                                           Index N, double alpha, Index n, Rng& rng)
{
    assert(N >= 1 && alpha > 0.0 && alpha < 1.0 && T >= 1);
    const Index d = fit.theta.dim(), nb = fit.theta.nb(), nf = fit.theta.nf();
    const Matrix scaled = cov.sigma_theta / static_cast<double>(T);

    // Square root of the sampling covariance; eigen fallback for PSD input.
    Matrix root;
    Eigen::LLT<Matrix> llt(scaled);
    if (llt.info() == Eigen::Success) {
        root = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(scaled);
        root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    const Vector center = fit.theta.stacked();
    Matrix thetas(d, N);
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(N));
    const Index cap = 1000 * N;
    Index attempts = 0;
    Index accepted = 0;
    while (accepted < N) {
        if (attempts >= cap)
            throw TruncationStarvation("stability truncation accepted " + std::to_string(accepted) +
                                       " of " + std::to_string(attempts) + " draws");
        ++attempts;
        const Vector z = standard_normal(d, rng);
        const Vector theta = center + root * z;
        if (!poly::is_schur_stable(theta.tail(nf)))
            continue;
        thetas.col(accepted++) = theta;
        scores.push_back(-0.5 * z.squaredNorm());
    }
    const Matrix irs = kernels::impulse_responses(thetas, nb, nf, n);
    return percentile_set(irs, scores, alpha);
}

double oe_log_likelihood(const OEParams& theta, const Dataset& data, double sigma2)
{
    if (!theta.is_stable())
        return -kInf;
    const auto T = static_cast<double>(data.size());
    const double j = pem_cost(theta, data);
    return -0.5 * T * std::log(2.0 * std::numbers::pi * sigma2) - T / (2.0 * sigma2) * j;
}

ParameterChain sample_parameter_chain(const PemFit& fit, const Dataset& data, double sigma2_hat, Index N,
                                      Rng& rng, const LikelihoodSamplingOptions& opt)
{
    assert(sigma2_hat > 0.0);
    const Index nb = fit.theta.nb(), nf = fit.theta.nf();
    const LogTarget target = [&](const Vector& x) {
        return oe_log_likelihood(OEParams::unstack(x, nb, nf), data, sigma2_hat);
    };
    AMOptions am;
    am.burn_in = opt.burn_in;
    am.target_rate = opt.target_rate;
    AMRun run = run_am(target, fit.theta.stacked(), N, rng, am);
    return ParameterChain{std::move(run.samples), std::move(run.log_target), run.acceptance_rate};
}

ConfidenceSet sample_likelihood_confidence(const PemFit& fit, const Dataset& data, double sigma2_hat,
                                           Index N, double alpha, Index n, Rng& rng,
                                           const LikelihoodSamplingOptions& opt)
{
    const ParameterChain chain = sample_parameter_chain(fit, data, sigma2_hat, N, rng, opt);
    const Matrix irs = kernels::impulse_responses(chain.samples, fit.theta.nb(), fit.theta.nf(), n);
    return percentile_set(irs, chain.log_target, alpha);
}

double estimate_noise_variance_ls(const Dataset& data, Index n)
{
    const Index T = data.size();
    assert(T > n);
    const Matrix phi = build_regressor(data.u, n).phi;
    Matrix g = phi.transpose() * phi;
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12)
        g.diagonal().array() += 1e-10 * std::max(g.trace(), 1e-300) / static_cast<double>(n);
    const Vector h = g.ldlt().solve(phi.transpose() * data.y);
    return std::max(0.0, (data.y - phi * h).squaredNorm() / static_cast<double>(T - n));
}

} // namespace sysid
