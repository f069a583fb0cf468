#include <doctest.h>

#include <cmath>
#include <memory>

#include <mvcone/policy.hpp>
#include <mvcone/sim.hpp>
#include <mvcone/solver.hpp>
#include <mvcone/tcie.hpp>
#include <mvcone/vssm.hpp>

#include "oracles.hpp"

using namespace mvcone;

namespace {

std::shared_ptr<RecursionTable> saa_table(const Market& market, const std::vector<ConvexCone>& cones, std::size_t n) {
    SaaOptions opts;
    opts.samples = n;
    return std::make_shared<RecursionTable>(backward_recursion(market, cones, ExpectationBackend::saa(market, opts)));
}

std::shared_ptr<RecursionTable> case1_table() {
    static const auto table =
        saa_table(oracle::example_market(false), std::vector<ConvexCone>(3, ConvexCone::whole_space(3)), 20000);
    return table;
}

}  // namespace

TEST_CASE("minimum variance paths grow at the riskless rate") {
    const Market market = oracle::example_market(false);
    const Policy mv = Policy::minimum_variance(case1_table(), 1.0);
    const auto ens = simulate(mv, market, 5000, 1);
    for (std::size_t i = 0; i < ens.size(); ++i) CHECK(ens.wealth(i, 3) == market.rho(0));
    const auto stats = terminal_stats(ens);
    CHECK(stats.variance == 0.0);
    CHECK(stats.mean == doctest::Approx(market.rho(0)).epsilon(1e-15));
    CHECK(ens.thresholds().empty());
    CHECK_THROWS_AS(exceedance_prob(ens), std::logic_error);
}

TEST_CASE("precommitted terminal moments") {
    const Market market = oracle::example_market(false);
    const auto table = case1_table();
    const Policy p = Policy::precommitted(table, 1.0, 1.35);
    const auto ens = simulate(p, market, 400000, 11);
    const auto stats = terminal_stats(ens);
    CHECK(std::abs(stats.mean - 1.35) < 4.0 * stats.mean_std_error);
    const double frontier = frontier_point(*table, 1.0, 1.35).variance;
    CHECK(std::abs(stats.variance - frontier) < 4.0 * stats.variance_std_error);
    CHECK(std::abs(frontier - 0.0348) < 2e-4);
}

TEST_CASE("time consistent terminal variance") {
    const Market market = oracle::example_market(false);
    const auto aux = std::make_shared<TimeConsistentAux>(time_consistent_aux(market));
    const Policy tc = Policy::time_consistent(aux, 1.0, 1.35);
    const auto stats = terminal_stats(simulate(tc, market, 400000, 13));
    CHECK(std::abs(stats.mean - 1.35) < 4.0 * stats.mean_std_error);
    const double expected = tc_frontier_point(*aux, 1.0, 1.35);
    CHECK(std::abs(expected - 1.815) < 2e-3);
    CHECK(std::abs(stats.variance - expected) < 4.0 * stats.variance_std_error);
}

TEST_CASE("ensembles are deterministic and thread independent") {
    const Market market = oracle::example_market(true);
    const Policy p = Policy::precommitted(case1_table(), 1.0, 1.35);
    SimulationOptions one;
    one.threads = 1;
    SimulationOptions four;
    four.threads = 4;
    const auto a = simulate(p, market, 40000, 5, one);
    const auto b = simulate(p, market, 40000, 5, four);
    for (std::size_t i = 0; i < a.size(); i += 7)
        for (int t = 0; t <= 3; ++t) REQUIRE(a.wealth(i, t) == b.wealth(i, t));
    CHECK(terminal_stats(a).variance == terminal_stats(b).variance);
    CHECK(exceedance_prob(a).probability == exceedance_prob(b).probability);
    CHECK(replay_max_error(a, p, market) == 0.0);
    // Same seed, different policy: same returns.
    const auto mv = simulate(Policy::minimum_variance(case1_table(), 1.0), market, 100, 5);
    for (std::size_t i = 0; i < 100; ++i) CHECK(mv.returns(i, 2) == a.returns(i, 2));
    CHECK(a.returns(3, 1) == sample_period(market, 1, 5, 3));
}

TEST_CASE("exceedance bookkeeping") {
    const Market market = oracle::example_market(false);
    const Policy p = Policy::precommitted(case1_table(), 1.0, 1.35);
    const auto ens = simulate(p, market, 100000, 21);
    const auto e = exceedance_prob(ens);
    std::size_t count = 0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        bool hit = false;
        for (int t = 1; t < 3; ++t) hit |= ens.wealth(i, t) > ens.thresholds()[static_cast<std::size_t>(t)];
        count += hit ? 1 : 0;
        CHECK_FALSE(ens.above(i, 0));
    }
    CHECK(e.probability == doctest::Approx(static_cast<double>(count) / 100000.0).epsilon(1e-15));
    double first = 0.0;
    for (double f : e.first_crossing) first += f;
    CHECK(first == doctest::Approx(e.probability).epsilon(1e-12));
    CHECK(e.first_crossing.front() == 0.0);
    CHECK(e.first_crossing.back() == 0.0);
    CHECK(e.std_error == doctest::Approx(std::sqrt(e.probability * (1 - e.probability) / 100000.0)).epsilon(1e-6));
    CHECK(std::abs(e.probability - 0.055) < 0.01);
}

TEST_CASE("after crossing under condition 19 the wealth is riskless") {
    const Market market = oracle::example_market(false);
    const auto table = saa_table(market, std::vector<ConvexCone>(3, ConvexCone::nonneg_orthant(3)), 20000);
    REQUIRE(check_tcie(*table, market).reason == TcieReason::condition_19);
    const Policy p = Policy::precommitted(table, 1.0, 1.35);
    const auto ens = simulate(p, market, 50000, 2);
    std::size_t crossed = 0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        for (int t = 1; t < 3; ++t) {
            if (!ens.above(i, t)) continue;
            ++crossed;
            CHECK(p.control(t, ens.wealth(i, t)).norm() == 0.0);
            CHECK(ens.wealth(i, t + 1) == 1.05 * ens.wealth(i, t));
        }
    }
    CHECK(crossed > 100);
}

TEST_CASE("discrete path replay matches the closed form") {
    std::mt19937_64 rng(41);
    const Market market = oracle::random_discrete_market(rng, 3, 2, 3, 3);
    const auto table = std::make_shared<RecursionTable>(
        backward_recursion(market, std::vector<ConvexCone>(3, ConvexCone::nonneg_orthant(2)), ExpectationBackend::exact(market)));
    REQUIRE(table->c_plus(0) < 1.0);
    const Policy p = Policy::precommitted(table, 1.0, table->rho(0) + 0.1);
    const auto ens = simulate(p, market, 2000, 6);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        std::vector<Vector> r;
        for (int t = 0; t < 3; ++t) r.push_back(ens.returns(i, t));
        const auto dp = density_along_path(*table, r);
        for (int t = 0; t <= 3; ++t) CHECK(std::abs(closed_form_wealth(p, dp, t) - ens.wealth(i, t)) < 1e-10);
    }
}

TEST_CASE("truncated ensembles start late") {
    const Market market = oracle::example_market(false);
    const auto table = case1_table();
    const Policy t = Policy::truncated(table, 1, 1.1, 1.3);
    const auto ens = simulate(t, market, 1000, 3);
    CHECK(ens.start() == 1);
    CHECK(std::isnan(ens.wealth(0, 0)));
    CHECK(ens.wealth(0, 1) == 1.1);
    CHECK(std::abs(terminal_stats(ens).mean - 1.3) < 0.05);
    SimulationOptions lean;
    lean.keep_returns = false;
    CHECK_FALSE(simulate(t, market, 10, 3, lean).has_returns());
}
