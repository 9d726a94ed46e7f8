// Serial reference vs OpenMP kernels at benchmark sizes (n = 100 taps).

#include <benchmark/benchmark.h>

#include <omp.h>

#include "sysid/kernels.hpp"
#include "sysid/polynomial.hpp"
#include "sysid/system.hpp"

using namespace sysid;

namespace {

Matrix oe_thetas(Index nb, Index nf, Index N)
{
    Rng rng(1);
    Matrix t(nb + nf, N);
    for (Index i = 0; i < N; ++i)
        t.col(i) << standard_normal(nb, rng), poly::from_roots(poly::random_disk_roots(static_cast<int>(nf), 0.9, rng)).tail(nf);
    return t;
}

struct MixtureCase {
    std::vector<PosteriorFactor> comps;
    std::vector<double> logw;
    Matrix h;
};

MixtureCase mixture_case(Index components, Index N)
{
    Rng rng(2);
    const Index n = 100;
    const Vector u = generate_bandlimited_input(500, 0.8, rng);
    const GramData gram = GramData::from(standard_normal(500, rng), build_regressor(u, n));
    MixtureCase mc;
    std::uniform_real_distribution<double> rho(0.5, 0.95), lam(0.8, 0.95);
    for (Index j = 0; j < components; ++j) {
        mc.comps.emplace_back(Hyperparams{0.5, rho(rng), lam(rng)}, gram, 0.5);
        mc.logw.push_back(-std::log(static_cast<double>(components)));
    }
    mc.h.resize(n, N);
    for (Index i = 0; i < N; ++i)
        mc.h.col(i) = mc.comps[static_cast<std::size_t>(i % components)].sample(rng);
    return mc;
}

void BM_impulse_serial(benchmark::State& st)
{
    const Matrix t = oe_thetas(10, 10, st.range(0));
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::impulse_responses_serial(t, 10, 10, 100));
}

void BM_impulse_omp(benchmark::State& st)
{
    omp_set_num_threads(static_cast<int>(st.range(1)));
    const Matrix t = oe_thetas(10, 10, st.range(0));
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::impulse_responses(t, 10, 10, 100));
}

void BM_mixture_serial(benchmark::State& st)
{
    const MixtureCase mc = mixture_case(st.range(0), 2000);
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::mixture_log_density_serial(mc.comps, mc.logw, mc.h));
}

void BM_mixture_omp(benchmark::State& st)
{
    omp_set_num_threads(static_cast<int>(st.range(1)));
    const MixtureCase mc = mixture_case(st.range(0), 2000);
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::mixture_log_density(mc.comps, mc.logw, mc.h));
}

const int kMaxThreads = omp_get_num_procs();

} // namespace

BENCHMARK(BM_impulse_serial)->Arg(7200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_impulse_omp)->ArgsProduct({{7200}, benchmark::CreateRange(1, std::max(1, kMaxThreads), 2)})
    ->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_mixture_serial)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mixture_omp)->ArgsProduct({{200}, benchmark::CreateRange(1, std::max(1, kMaxThreads), 2)})
    ->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
