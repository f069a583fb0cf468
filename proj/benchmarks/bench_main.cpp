#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include <mvcone/cones.hpp>
#include <mvcone/market.hpp>
#include <mvcone/policy.hpp>
#include <mvcone/sim.hpp>
#include <mvcone/solver.hpp>

using namespace mvcone;

namespace {

ExcessMoments example_moments() {
    Vector er(3), vol(3);
    er << 0.14, 0.16, 0.17;
    vol << 0.185, 0.30, 0.24;
    Matrix corr(3, 3);
    corr << 1.0, 0.64, 0.79, 0.64, 1.0, 0.75, 0.79, 0.75, 1.0;
    return moments_from_annual_table(er, vol, corr, 0.05);
}

Market example_market() {
    const auto m = example_moments();
    return Market(iid_market_spec(3, 1.05, PeriodDistribution::gaussian(m.mean, m.covariance)));
}

ConvexCone half_space() { return ConvexCone::half_space(example_moments().mean); }

ExpectationBackend backend(const Market& market, std::size_t samples) {
    SaaOptions opts;
    opts.samples = samples;
    return ExpectationBackend::saa(market, opts);
}

void BM_EvalH(benchmark::State& state) {
    const Market market = example_market();
    const auto saa = backend(market, static_cast<std::size_t>(state.range(0)));
    const Vector k = market.unconstrained_direction(0);
    const NextCosts next{0.8, 0.9};
    for (auto _ : state) benchmark::DoNotOptimize(eval_h(saa, 0, Sign::plus, k, next));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EvalH)->Arg(10'000)->Arg(1'000'000)->Unit(benchmark::kMicrosecond);

void BM_Recursion(benchmark::State& state) {
    const Market market = example_market();
    const auto saa = backend(market, static_cast<std::size_t>(state.range(0)));
    const std::vector<ConvexCone> cones(3, half_space());
    for (auto _ : state) benchmark::DoNotOptimize(backward_recursion(market, cones, saa));
}
BENCHMARK(BM_Recursion)->Arg(10'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
    const Market market = example_market();
    const std::vector<ConvexCone> cones(3, half_space());
    auto table = std::make_shared<RecursionTable>(backward_recursion(market, cones, backend(market, 100'000)));
    const Policy policy = Policy::precommitted(table, 1.0, 1.35);
    SimulationOptions opts;
    opts.keep_returns = false;
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate(policy, market, static_cast<std::size_t>(state.range(0)), 11, opts));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_Projection(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    const int n = static_cast<int>(state.range(0));
    Matrix a(n + 2, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    const ConvexCone cone = ConvexCone::polyhedral(a);
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng);
    ProjectionOptions opts;
    opts.method = state.range(1) ? ProjectionOptions::Method::moreau_nnls : ProjectionOptions::Method::dykstra;
    for (auto _ : state) benchmark::DoNotOptimize(cone.project(v, opts));
}
BENCHMARK(BM_Projection)->Args({3, 0})->Args({3, 1})->Args({8, 0})->Args({8, 1});

}  // namespace

BENCHMARK_MAIN();
