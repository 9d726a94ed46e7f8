#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "sysid/errors.hpp"
#include "sysid/metrics.hpp"
#include "sysid/pem.hpp"
#include "sysid/polynomial.hpp"

using namespace sysid;

namespace {

OEParams random_stable_params(Index nb, Index nf, std::mt19937_64& rng)
{
    Vector f = Vector::Zero(nf);
    if (nf > 0) {
        Rng r(rng());
        f = poly::from_roots(poly::random_disk_roots(static_cast<int>(nf), 0.8, r)).tail(nf);
    }
    return OEParams{oracle::random_vector(nb, rng), f};
}

Dataset noiseless(const OEParams& theta, Index T, std::mt19937_64& rng)
{
    Dataset d;
    d.u = oracle::random_vector(T, rng);
    d.y = predict_oe(theta, d.u);
    d.sigma2 = 1e-300;
    return d;
}

Dataset with_noise(const OEParams& theta, Index T, double sigma2, std::mt19937_64& rng)
{
    Dataset d = noiseless(theta, T, rng);
    d.y += oracle::random_vector(T, rng, std::sqrt(sigma2));
    d.sigma2 = sigma2;
    return d;
}

} // namespace

TEST_CASE("OE predictor")
{
    const Vector u{{1.0, -2.0, 0.5, 3.0, 0.0}};
    SUBCASE("single lag FIR")
    {
        const Vector y = predict_oe(OEParams{Vector{{1.0}}, Vector(0)}, u);
        CHECK(y == Vector{{0.0, 1.0, -2.0, 0.5, 3.0}});
    }
    SUBCASE("first-order recursion")
    {
        const Vector y = predict_oe(OEParams{Vector{{1.0}}, Vector{{-0.5}}}, u);
        double prev = 0;
        for (Index t = 0; t < u.size(); ++t) {
            const double expect = 0.5 * prev + (t > 0 ? u[t - 1] : 0.0);
            CHECK(y[t] == doctest::Approx(expect));
            prev = expect;
        }
    }
}

TEST_CASE("prediction cost")
{
    Dataset d;
    d.u = Vector::Zero(2);
    d.y = Vector{{1.0, 1.0}};
    CHECK(pem_cost(OEParams{Vector{{0.0}}, Vector(0)}, d) == doctest::Approx(1.0));

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const OEParams theta = random_stable_params(3, 2, rng);
        Dataset data = with_noise(theta, 60, 0.3, rng);
        const OEParams other = random_stable_params(3, 2, rng);
        // Brute-force difference equation.
        std::vector<double> yhat(60, 0.0);
        double cost = 0;
        for (int t = 0; t < 60; ++t) {
            double v = 0;
            for (int k = 1; k <= 3; ++k)
                if (t - k >= 0)
                    v += other.b[k - 1] * data.u[t - k];
            for (int k = 1; k <= 2; ++k)
                if (t - k >= 0)
                    v -= other.f[k - 1] * yhat[t - k];
            yhat[t] = v;
            cost += (data.y[t] - v) * (data.y[t] - v);
        }
        CHECK(pem_cost(other, data) == doctest::Approx(cost / 60).epsilon(1e-12));
        Dataset exact = data;
        exact.y = predict_oe(other, data.u);
        CHECK(pem_cost(other, exact) == 0.0);
    }
}

TEST_CASE("predictor gradient")
{
    SUBCASE("FIR columns are shifted inputs")
    {
        const Vector u{{1.0, 2.0, 3.0, 4.0}};
        const Matrix psi = gradient_psi(OEParams{Vector{{0.7, 0.1}}, Vector(0)}, u);
        Matrix expected(4, 2);
        expected << 0, 0, 1, 0, 2, 1, 3, 2;
        CHECK(psi == expected);
    }
    SUBCASE("empty record")
    {
        const Matrix psi = gradient_psi(OEParams{Vector{{0.7}}, Vector{{0.2}}}, Vector(0));
        CHECK(psi.rows() == 0);
        CHECK(psi.cols() == 2);
    }
    SUBCASE("central finite differences")
    {
        std::mt19937_64 rng(99);
        std::uniform_int_distribution<int> od(1, 4);
        for (int trial = 0; trial < 50; ++trial) {
            const Index nb = od(rng), nf = od(rng);
            const OEParams theta = random_stable_params(nb, nf, rng);
            const Vector u = oracle::random_vector(100, rng);
            const Matrix psi = gradient_psi(theta, u);
            Matrix fd(100, nb + nf);
            const Vector base = theta.stacked();
            for (Index j = 0; j < nb + nf; ++j) {
                Vector up = base, dn = base;
                up[j] += 1e-6;
                dn[j] -= 1e-6;
                fd.col(j) = (predict_oe(OEParams::unstack(up, nb, nf), u) -
                             predict_oe(OEParams::unstack(dn, nb, nf), u)) / 2e-6;
            }
            CHECK((psi - fd).norm() / fd.norm() < 1e-4);
        }
    }
}

TEST_CASE("fit_oe on noiseless in-class data")
{
    std::mt19937_64 rng(5);
    const OEParams truth{Vector{{1.0, 0.5}}, Vector{{-1.2, 0.5}}};
    const Dataset data = noiseless(truth, 400, rng);
    Rng fit_rng(1);
    const PemFit fit = fit_oe(data, 2, 2, fit_rng);
    CHECK(fit.cost < 1e-10);
    CHECK(fit.sigma2_hat == fit.cost);
    const Vector h = truth.impulse_response(100).taps;
    CHECK((fit.theta.impulse_response(100).taps - h).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("fit_oe recovers random in-class systems")
{
    int good = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const DiscreteSystem sys = generate_random_system(2, 0.95, rng);
        Dataset data;
        data.u = generate_bandlimited_input(500, 1.0, rng);
        data.y = filter(sys, data.u);
        const PemFit fit = fit_oe(data, 2, 2, rng);
        good += impulse_fit(impulse_response(sys, 100), fit.theta.impulse_response(100)) > 99 ? 1 : 0;
    }
    CHECK(good >= 18);
}

TEST_CASE("fit_oe with no signal")
{
    std::mt19937_64 rng(17);
    int inside = 0;
    for (int rep = 0; rep < 10; ++rep) {
        Dataset data;
        data.u = oracle::random_vector(500, rng);
        data.y = oracle::random_vector(500, rng);
        Rng r(static_cast<std::uint64_t>(rep));
        const PemFit fit = fit_oe(data, 1, 1, r);
        const auto cov = asymptotic_covariance(fit, data);
        const double stderr_b = std::sqrt(cov.sigma_theta(0, 0) / 500.0);
        inside += std::abs(fit.theta.b[0]) < 3 * stderr_b ? 1 : 0;
    }
    CHECK(inside >= 9);
}

TEST_CASE("Levenberg-Marquardt never increases the cost")
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const OEParams truth = random_stable_params(3, 3, rng);
        const Dataset data = with_noise(truth, 300, 0.5, rng);
        const OEParams init = random_stable_params(3, 3, rng);
        const PemFit fit = refine_oe(data, init);
        CHECK(fit.cost <= pem_cost(init, data));
        CHECK(fit.theta.is_stable());
    }
}

TEST_CASE("asymptotic covariance")
{
    SUBCASE("FIR with white input approaches sigma2 I")
    {
        std::mt19937_64 rng(31);
        const OEParams truth{Vector{{1.0, -0.5, 0.25, 0.1, 0.0}}, Vector(0)};
        const Dataset data = with_noise(truth, 20000, 0.5, rng);
        Rng r(2);
        const PemFit fit = fit_oe(data, 5, 0, r);
        const Matrix s = asymptotic_covariance(fit, data).sigma_theta;
        CHECK((s - s.transpose()).norm() < 1e-12 * s.norm());
        for (Index i = 0; i < 5; ++i) {
            CHECK(s(i, i) == doctest::Approx(0.5).epsilon(0.1));
            for (Index j = 0; j < 5; ++j)
                if (i != j)
                    CHECK(std::abs(s(i, j)) < 0.05);
        }
    }
    SUBCASE("doubling the noise variance doubles the trace")
    {
        std::mt19937_64 rng(37);
        const OEParams truth{Vector{{1.0, 0.5}}, Vector{{-0.6}}};
        double t1 = 0, t2 = 0;
        for (int rep = 0; rep < 20; ++rep) {
            Dataset a = noiseless(truth, 500, rng);
            Dataset b = a;
            a.y += oracle::random_vector(500, rng, 1.0);
            b.y += oracle::random_vector(500, rng, std::sqrt(2.0));
            Rng r(static_cast<std::uint64_t>(rep));
            t1 += asymptotic_covariance(fit_oe(a, 2, 1, r), a).sigma_theta.trace();
            t2 += asymptotic_covariance(fit_oe(b, 2, 1, r), b).sigma_theta.trace();
        }
        CHECK(t2 / t1 == doctest::Approx(2.0).epsilon(0.1));
    }
    SUBCASE("positive semidefinite")
    {
        std::mt19937_64 rng(41);
        const OEParams truth = random_stable_params(3, 3, rng);
        const Dataset data = with_noise(truth, 300, 0.2, rng);
        Rng r(3);
        const Matrix s = asymptotic_covariance(fit_oe(data, 3, 3, r), data).sigma_theta;
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().minCoeff() >= 0.0);
    }
}

TEST_CASE("BIC order selection")
{
    SUBCASE("formula")
    {
        PemFit fit;
        fit.theta = OEParams{Vector::Zero(3), Vector::Zero(3)};
        fit.cost = 0.25;
        CHECK(bic(fit, 500) == doctest::Approx(500 * std::log(0.25) + 6 * std::log(500.0)));
    }
    SUBCASE("true order two")
    {
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            std::mt19937_64 rng(seed);
            const OEParams truth{Vector{{1.0, 0.4}}, Vector{{-1.0, 0.5}}};
            const Dataset data = with_noise(truth, 500, 1e-3, rng);
            hits += select_order_bic(data, 1, 6, seed).order == 2 ? 1 : 0;
        }
        CHECK(hits > 10);
    }
    SUBCASE("pure noise picks the smallest order")
    {
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            std::mt19937_64 rng(seed + 100);
            Dataset data;
            data.u = oracle::random_vector(500, rng);
            data.y = oracle::random_vector(500, rng);
            hits += select_order_bic(data, 1, 6, seed).order == 1 ? 1 : 0;
        }
        CHECK(hits > 10);
    }
    SUBCASE("minimum over the sweep and single-element range")
    {
        std::mt19937_64 rng(3);
        const OEParams truth = random_stable_params(3, 3, rng);
        const Dataset data = with_noise(truth, 300, 0.5, rng);
        const OrderSweep sweep = fit_order_range(data, 1, 5, 9);
        const OrderChoice choice = select_order_bic(sweep, data.size());
        for (const auto& f : sweep.fits)
            if (std::isfinite(f.cost))
                CHECK(bic(choice.fit, data.size()) <= bic(f, data.size()));
        CHECK(select_order_bic(data, 4, 4, 9).order == 4);
        CHECK(select_order_oracle(data, 4, 4, truth.impulse_response(100), 9).order == 4);
    }
}

TEST_CASE("oracle order selection")
{
    std::mt19937_64 rng(12);
    const OEParams truth{Vector{{0.5, -0.3, 0.2}}, Vector{{-1.1, 0.6, -0.1}}};
    const ImpulseResponse h = truth.impulse_response(100);
    SUBCASE("noiseless in-class data")
    {
        const Dataset data = noiseless(truth, 500, rng);
        const OrderChoice c = select_order_oracle(data, 2, 6, h, 4);
        CHECK(impulse_fit(h, c.fit.theta.impulse_response(100)) > 99);
    }
    SUBCASE("dominates BIC on the same sweep")
    {
        const Dataset data = with_noise(truth, 300, 0.5, rng);
        const OrderSweep sweep = fit_order_range(data, 2, 8, 4);
        const OrderChoice o = select_order_oracle(sweep, h);
        const OrderChoice b = select_order_bic(sweep, data.size());
        CHECK(impulse_fit(h, o.fit.theta.impulse_response(100)) >=
              impulse_fit(h, b.fit.theta.impulse_response(100)));
    }
}

TEST_CASE("asymptotic confidence set")
{
    std::mt19937_64 rng(44);
    const OEParams truth{Vector{{1.0, 0.5}}, Vector{{-1.2, 0.5}}};
    const Dataset data = with_noise(truth, 300, 0.5, rng);
    Rng r(8);
    const PemFit fit = fit_oe(data, 2, 2, r);
    const auto cov = asymptotic_covariance(fit, data);

    SUBCASE("cardinality and threshold")
    {
        const ConfidenceSet set = sample_asymptotic_confidence(fit, cov, 300, 7200, 0.95, 100, r);
        CHECK(set.size() == 6840);
        CHECK(set.raw_count == 7200);
        for (double s : set.scores)
            CHECK(s >= set.threshold);
        for (const auto& m : set.members)
            CHECK(m.taps.allFinite());
    }
    SUBCASE("degenerate covariance")
    {
        AsymptoticCovariance tiny{cov.sigma_theta * 1e-12};
        const ConfidenceSet set = sample_asymptotic_confidence(fit, tiny, 300, 500, 0.95, 100, r);
        const Vector h = fit.theta.impulse_response(100).taps;
        for (const auto& m : set.members)
            CHECK((m.taps - h).cwiseAbs().maxCoeff() < 1e-5);
    }
    SUBCASE("starvation")
    {
        PemFit edge = fit;
        edge.theta.f = Vector{{-1.999, 0.9995}};
        AsymptoticCovariance wide{Matrix::Identity(4, 4) * 1e6};
        CHECK_THROWS_AS(sample_asymptotic_confidence(edge, wide, 300, 50, 0.95, 100, r), TruncationStarvation);
    }
}

TEST_CASE("likelihood confidence set")
{
    SUBCASE("cardinality")
    {
        std::mt19937_64 rng(45);
        const OEParams truth{Vector{{1.0, 0.5}}, Vector{{-0.5}}};
        const Dataset data = with_noise(truth, 300, 0.5, rng);
        Rng r(8);
        const PemFit fit = fit_oe(data, 2, 1, r);
        const ConfidenceSet set = sample_likelihood_confidence(fit, data, fit.sigma2_hat, 7200, 0.95, 100, r);
        CHECK(set.size() == 6840);
        for (double s : set.scores)
            CHECK(s >= set.threshold);
    }
    SUBCASE("FIR chain matches the conjugate posterior mean")
    {
        std::mt19937_64 rng(46);
        const OEParams truth{Vector{{1.0, -0.4, 0.2}}, Vector(0)};
        const Dataset data = with_noise(truth, 200, 1.0, rng);
        Rng r(9);
        const PemFit fit = fit_oe(data, 3, 0, r);
        const Matrix phi = oracle::regressor(data.u, 3);
        const Vector mean = (phi.transpose() * phi).ldlt().solve(phi.transpose() * data.y);
        const ParameterChain chain = sample_parameter_chain(fit, data, 1.0, 20000, r);
        for (Index j = 0; j < 3; ++j) {
            std::vector<double> xs;
            for (Index i = 0; i < chain.samples.cols(); ++i)
                xs.push_back(chain.samples(j, i));
            const double m = chain.samples.row(j).mean();
            CHECK(std::abs(m - mean[j]) < 3 * oracle::batch_means_se(xs));
        }
        CHECK(chain.acceptance_rate > 0.1);
    }
    SUBCASE("noiseless data concentrate the chain")
    {
        std::mt19937_64 rng(47);
        const OEParams truth{Vector{{1.0, 0.5}}, Vector{{-0.5}}};
        const Dataset data = noiseless(truth, 300, rng);
        Rng r(10);
        const PemFit fit = fit_oe(data, 2, 1, r);
        const ConfidenceSet set = sample_likelihood_confidence(fit, data, 1e-10, 2000, 0.95, 100, r);
        CHECK(set_size_index(set) < 1e-2);
    }
}

TEST_CASE("least-squares noise variance")
{
    SUBCASE("pure noise output")
    {
        std::mt19937_64 rng(50);
        Dataset data;
        data.u = oracle::random_vector(500, rng);
        data.y = oracle::random_vector(500, rng, std::sqrt(2.0));
        CHECK(estimate_noise_variance_ls(data, 100) == doctest::Approx(2.0).epsilon(0.2));
    }
    SUBCASE("noiseless FIR")
    {
        std::mt19937_64 rng(51);
        Dataset data;
        data.u = oracle::random_vector(500, rng);
        data.y = oracle::convolve(oracle::random_vector(100, rng), data.u);
        const double s = estimate_noise_variance_ls(data, 100);
        CHECK(s < 1e-10);
        CHECK(s >= 0.0);
    }
}
