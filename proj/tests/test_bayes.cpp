#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "oracles.hpp"
#include "sysid/bayes.hpp"
#include "sysid/chi2.hpp"
#include "sysid/errors.hpp"

using namespace sysid;

namespace {

Hyperparams random_eta(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> c(0.05, 3.0), rho(-0.95, 0.95), lam(0.3, 0.97);
    return {c(rng), rho(rng), lam(rng)};
}

struct Instance {
    Vector y;
    Matrix phi;
    double sigma2;
};

Instance random_instance(Index T, Index n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> s(0.05, 2.0);
    const Vector u = oracle::random_vector(T, rng);
    return {oracle::random_vector(T, rng), oracle::regressor(u, n), s(rng)};
}

} // namespace

TEST_CASE("DC kernel")
{
    CHECK(dc_kernel({1, 1, 1}, 4).k == Matrix::Ones(4, 4));
    CHECK(dc_kernel({2, 0.5, 0.81}, 3).k(0, 1) == doctest::Approx(0.729));
    const Matrix diag = dc_kernel({1.5, 0, 0.8}, 5).k;
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j)
            CHECK(diag(i, j) == doctest::Approx(i == j ? 1.5 * std::pow(0.8, i + 1) : 0.0));

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> c(0, 10), rho(-1, 1), lam(0, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        const Hyperparams eta{c(rng), rho(rng), lam(rng)};
        const Matrix k = dc_kernel(eta, 20).k;
        CHECK((k - oracle::dc_kernel(eta.c, eta.rho, eta.lambda, 20)).cwiseAbs().maxCoeff() <= 1e-12);
        const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(k).eigenvalues().minCoeff();
        CHECK(lo >= -1e-10 * k.norm());
    }
}

TEST_CASE("closed-form kernel square root")
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const Hyperparams eta = random_eta(rng);
        const DcFactor g(eta, 12);
        const Matrix gd = g.dense();
        CHECK((gd * gd.transpose() - oracle::dc_kernel(eta.c, eta.rho, eta.lambda, 12)).norm() < 1e-12);
        const Vector x = oracle::random_vector(12, rng);
        CHECK((g.apply(x) - gd * x).norm() < 1e-12);
        CHECK((g.apply_transpose(x) - gd.transpose() * x).norm() < 1e-12);
        CHECK((gd * g.solve(x) - x).norm() < 1e-9 * x.norm());
        const Matrix a = oracle::random_spd(12, rng);
        CHECK((g.sandwich(a) - gd.transpose() * a * gd).norm() < 1e-10 * a.norm());
        CHECK(g.log_det() == doctest::Approx(std::log(gd.determinant())));
    }
    const DcFactor singular({1, 1, 0.9}, 5);
    CHECK_FALSE(singular.invertible());
    CHECK((singular.dense() * singular.dense().transpose() - oracle::dc_kernel(1, 1, 0.9, 5)).norm() < 1e-12);
}

TEST_CASE("marginal likelihood")
{
    SUBCASE("zero prior scale")
    {
        std::mt19937_64 rng(3);
        const Instance in = random_instance(15, 4, rng);
        const double T = 15;
        const double expected = -T / 2 * std::log(2 * std::numbers::pi * in.sigma2) - in.y.squaredNorm() / (2 * in.sigma2);
        CHECK(log_marginal_likelihood({0, 0.5, 0.9}, in.y, RegressorMatrix{in.phi}, in.sigma2) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("scalar case")
    {
        const Vector y{{0.7}};
        const Matrix phi = Matrix::Ones(1, 1);
        const double k = 0.9, s2 = 0.3;
        const double expected = -0.5 * std::log(2 * std::numbers::pi * (k + s2)) - 0.49 / (2 * (k + s2));
        CHECK(log_marginal_likelihood({1, 0, 0.9}, y, RegressorMatrix{phi}, s2) == doctest::Approx(expected));
    }
    SUBCASE("reduced form matches the dense T x T density")
    {
        std::mt19937_64 rng(4);
        for (int trial = 0; trial < 100; ++trial) {
            const Instance in = random_instance(8, 3, rng);
            const Hyperparams eta = random_eta(rng);
            const double got = log_marginal_likelihood(eta, in.y, RegressorMatrix{in.phi}, in.sigma2);
            const double want = oracle::marginal_likelihood_txt(oracle::dc_kernel(eta.c, eta.rho, eta.lambda, 3),
                                                                in.phi, in.y, in.sigma2);
            CHECK(std::abs(got - want) < 1e-10);
        }
    }
    SUBCASE("boundary hyperparameters")
    {
        std::mt19937_64 rng(5);
        const Instance in = random_instance(10, 4, rng);
        for (const Hyperparams eta : {Hyperparams{1, 1, 0.9}, Hyperparams{1, -1, 0.9}, Hyperparams{1, 0.3, 0},
                                      Hyperparams{1, 0.3, 1}}) {
            const double got = log_marginal_likelihood(eta, in.y, RegressorMatrix{in.phi}, in.sigma2);
            const double want = oracle::marginal_likelihood_txt(oracle::dc_kernel(eta.c, eta.rho, eta.lambda, 4),
                                                                in.phi, in.y, in.sigma2);
            CHECK(got == doctest::Approx(want).epsilon(1e-10));
        }
    }
    SUBCASE("invalid noise variance")
    {
        std::mt19937_64 rng(6);
        const Instance in = random_instance(10, 4, rng);
        CHECK_THROWS_AS(log_marginal_likelihood({1, 0, 0.9}, in.y, RegressorMatrix{in.phi}, 0.0), NonPositiveDefinite);
    }
}

TEST_CASE("posterior")
{
    SUBCASE("identity regressor and prior")
    {
        const Vector y{{1.0, -2.0, 4.0}};
        const GaussianPosterior p = posterior({1, 0, 1}, y, RegressorMatrix{Matrix::Identity(3, 3)}, 1.0);
        CHECK((p.mean - y / 2).norm() < 1e-12);
        CHECK((p.cov - Matrix::Identity(3, 3) / 2).norm() < 1e-12);
    }
    SUBCASE("zero prior")
    {
        std::mt19937_64 rng(7);
        const Instance in = random_instance(10, 4, rng);
        const GaussianPosterior p = posterior({0, 0.5, 0.9}, in.y, RegressorMatrix{in.phi}, in.sigma2);
        CHECK(p.mean.isZero());
        CHECK(p.cov.isZero());
    }
    SUBCASE("regularized least squares and the T x T form")
    {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 100; ++trial) {
            std::uniform_int_distribution<int> nd(1, 10), td(10, 30);
            const Index n = nd(rng), T = td(rng);
            const Instance in = random_instance(T, n, rng);
            const Hyperparams eta = random_eta(rng);
            const Matrix k = oracle::dc_kernel(eta.c, eta.rho, eta.lambda, n);
            const GaussianPosterior p = posterior(eta, in.y, RegressorMatrix{in.phi}, in.sigma2);
            const Vector rls = oracle::regularized_ls(k, in.phi, in.y, in.sigma2);
            CHECK((p.mean - rls).norm() <= 1e-8 * rls.norm());
            const auto txt = oracle::posterior_txt(k, in.phi, in.y, in.sigma2);
            CHECK((p.cov - txt.cov).norm() <= 1e-8 * txt.cov.norm());
            CHECK((p.cov.diagonal() - k.diagonal()).maxCoeff() <= 1e-10);
        }
    }
    SUBCASE("singular prior")
    {
        std::mt19937_64 rng(9);
        const Instance in = random_instance(20, 5, rng);
        const Hyperparams eta{0.8, 1.0, 0.9};
        const GaussianPosterior p = posterior(eta, in.y, RegressorMatrix{in.phi}, in.sigma2);
        const auto txt = oracle::posterior_txt(oracle::dc_kernel(0.8, 1.0, 0.9, 5), in.phi, in.y, in.sigma2);
        CHECK((p.mean - txt.mean).norm() <= 1e-8 * txt.mean.norm());
        CHECK((p.cov - txt.cov).norm() <= 1e-8 * txt.cov.norm());
    }
    SUBCASE("factor sampling and density")
    {
        std::mt19937_64 rng(10);
        const Instance in = random_instance(25, 6, rng);
        const Hyperparams eta = random_eta(rng);
        const GramData gram = GramData::from(in.y, RegressorMatrix{in.phi});
        const PosteriorFactor f(eta, gram, in.sigma2);
        const Matrix cov = f.covariance();
        const Vector h = oracle::random_vector(6, rng, 0.3);
        const Vector d = h - f.mean();
        const Eigen::LLT<Matrix> llt(cov);
        const Matrix l = llt.matrixL();
        const double log_det = 2 * l.diagonal().array().log().sum();
        CHECK(f.log_det_cov() == doctest::Approx(log_det));
        const double want = -0.5 * (6 * std::log(2 * std::numbers::pi) + log_det + d.dot(llt.solve(d)));
        CHECK(f.log_density(h) == doctest::Approx(want).epsilon(1e-10));

        Rng r(4);
        Matrix draws(6, 40000);
        for (Index i = 0; i < draws.cols(); ++i)
            draws.col(i) = f.sample(r);
        const Vector m = draws.rowwise().mean();
        const Matrix centered = draws.colwise() - m;
        const Matrix emp = centered * centered.transpose() / (draws.cols() - 1.0);
        CHECK((emp - cov).norm() < 0.05 * cov.norm());
    }
}

TEST_CASE("empirical Bayes hyperparameters")
{
    SUBCASE("no signal drives the scale to zero")
    {
        std::mt19937_64 rng(11);
        const Vector u = oracle::random_vector(200, rng);
        const GramData gram = GramData::from(Vector::Zero(200), RegressorMatrix{oracle::regressor(u, 20)});
        // Once lambda reaches zero the scale c no longer matters; the prior
        // variance c * lambda^k is what must vanish.
        const Hyperparams eta = maximize_marginal_likelihood(gram, 1.0);
        CHECK(dc_kernel(eta, 20).k.diagonal().maxCoeff() < 1e-4);
    }
    SUBCASE("ascent from the initial point")
    {
        std::mt19937_64 rng(12);
        const Instance in = random_instance(100, 15, rng);
        const GramData gram = GramData::from(in.y, RegressorMatrix{in.phi});
        const Hyperparams init{0.5, 0.2, 0.7};
        const Hyperparams best = maximize_marginal_likelihood(gram, in.sigma2, init);
        CHECK(best.in_box());
        CHECK(log_marginal_likelihood(best, gram, in.sigma2) >= log_marginal_likelihood(init, gram, in.sigma2));
        for (double rho : {-0.5, 0.5})
            for (double lam : {0.8, 0.95})
                CHECK(log_marginal_likelihood(best, gram, in.sigma2) >=
                      log_marginal_likelihood({1, rho, lam}, gram, in.sigma2));
    }
    SUBCASE("recovers the decay rate of prior draws")
    {
        const Hyperparams truth{1.0, 0.5, 0.8};
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            std::mt19937_64 rng(seed);
            const Index n = 30, T = 1000;
            const Matrix k = oracle::dc_kernel(truth.c, truth.rho, truth.lambda, n);
            const Vector h = Eigen::LLT<Matrix>(k + 1e-12 * Matrix::Identity(n, n)).matrixL() *
                             oracle::random_vector(n, rng);
            const Vector u = oracle::random_vector(T, rng);
            const Matrix phi = oracle::regressor(u, n);
            const Vector y = phi * h + oracle::random_vector(T, rng, 0.1);
            const Hyperparams eta = maximize_marginal_likelihood(GramData::from(y, RegressorMatrix{phi}), 0.01);
            hits += eta.lambda >= 0.8 * truth.lambda && eta.lambda <= std::min(1.0, 1.2 * truth.lambda) ? 1 : 0;
        }
        CHECK(hits > 10);
    }
}

TEST_CASE("empirical Bayes estimate")
{
    SUBCASE("noiseless data")
    {
        std::mt19937_64 rng(13);
        const Vector h = oracle::dc_kernel(1, 0, 0.8, 30).diagonal().cwiseSqrt().cwiseProduct(oracle::random_vector(30, rng));
        Dataset data;
        data.u = oracle::random_vector(300, rng);
        data.y = oracle::convolve(h, data.u) + oracle::random_vector(300, rng, 1e-4);
        const EbEstimate eb = eb_estimate(data, 30, 1e-8);
        CHECK(100 * (1 - (eb.h.taps - h).norm() / h.norm()) > 95);
        const EbEstimate again = eb_estimate(data, 30, 1e-8);
        CHECK(again.h.taps == eb.h.taps);
        CHECK(again.eta == eb.eta);
    }
}

TEST_CASE("chi-square quantile")
{
    CHECK(chi2_quantile(0.95, 1) == doctest::Approx(3.841459).epsilon(1e-7));
    CHECK(chi2_quantile(0.5, 2) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-10));
    CHECK(chi2_quantile(0.5, 2) == doctest::Approx(1.386294).epsilon(1e-6));
    for (int dof : {1, 10, 100})
        for (int i = 1; i <= 99; ++i) {
            const double a = i / 100.0;
            const double q = chi2_quantile(a, dof);
            CHECK(std::abs(chi2_cdf(q, dof) - a) < 1e-8);
            CHECK(q == doctest::Approx(boost::math::quantile(boost::math::chi_squared(dof), a)).epsilon(1e-8));
        }
}

TEST_CASE("EB ellipsoid confidence set")
{
    SUBCASE("retained fraction")
    {
        std::mt19937_64 rng(14);
        const Matrix cov = oracle::random_spd(8, rng);
        const GaussianPosterior post{oracle::random_vector(8, rng), cov, {}};
        Rng r(1);
        const ConfidenceSet set = eb_confidence_set(post, 7200, 0.95, r);
        const double frac = static_cast<double>(set.size()) / 7200.0;
        CHECK(frac >= 0.93);
        CHECK(frac <= 0.97);
        const double sd = std::sqrt(7200 * 0.95 * 0.05);
        CHECK(std::abs(static_cast<double>(set.size()) - 6840) <= 3 * sd);
        for (double s : set.scores)
            CHECK(s >= set.threshold);
    }
    SUBCASE("scalar standard normal")
    {
        const GaussianPosterior post{Vector::Zero(1), Matrix::Identity(1, 1), {}};
        Rng r(2);
        const ConfidenceSet set = eb_confidence_set(post, 5000, 0.95, r);
        for (const auto& m : set.members)
            CHECK(std::abs(m.taps[0]) <= 1.959964 + 1e-6);
    }
    SUBCASE("members are a density superlevel set")
    {
        std::mt19937_64 rng(15);
        const Matrix cov = oracle::random_spd(4, rng);
        const GaussianPosterior post{Vector::Zero(4), cov, {}};
        Rng r(3);
        const ConfidenceSet set = eb_confidence_set(post, 2000, 0.9, r);
        const double bound = chi2_quantile(0.9, 4);
        double worst_in = 0;
        for (const auto& m : set.members)
            worst_in = std::max(worst_in, mahalanobis(post, m.taps));
        CHECK(worst_in <= bound + 1e-9);
        CHECK(set.raw_count == 2000);
        const double score_floor = *std::min_element(set.scores.begin(), set.scores.end());
        CHECK(score_floor >= -0.5 * bound - 1e-9);
    }
}
