#include <doctest.h>

#include <cmath>
#include <memory>

#include <mvcone/errors.hpp>
#include <mvcone/policy.hpp>
#include <mvcone/solver.hpp>

#include "oracles.hpp"

using namespace mvcone;

namespace {

std::shared_ptr<const RecursionTable> solve(const Market& market, const std::vector<ConvexCone>& cones) {
    if (market.all_discrete())
        return std::make_shared<RecursionTable>(backward_recursion(market, cones, ExpectationBackend::exact(market)));
    SaaOptions opts;
    opts.samples = 20000;
    return std::make_shared<RecursionTable>(
        backward_recursion(market, cones, ExpectationBackend::saa(market, opts)));
}

std::shared_ptr<const RecursionTable> case1_table() {
    static const auto table = solve(oracle::example_market(false), std::vector<ConvexCone>(3, ConvexCone::whole_space(3)));
    return table;
}

}  // namespace

TEST_CASE("mu star") {
    const auto table = case1_table();
    CHECK(mu_star(*table, 1.0, table->rho(0)) == 0.0);
    CHECK(std::abs(mu_star(*table, 1.0, 1.35) - (-0.1808)) < 5e-4);

    Matrix rows(6, 3);
    rows << Matrix::Identity(3, 3), -Matrix::Identity(3, 3);
    const auto trivial = solve(oracle::example_market(false), std::vector<ConvexCone>(3, ConvexCone::polyhedral(rows)));
    CHECK(trivial->rho(0) == doctest::Approx(1.157625));
    CHECK_THROWS_AS(mu_star(*trivial, 1.0, 1.2), TargetUnattainable);
    CHECK(mu_star(*trivial, 1.0, trivial->rho(0)) == 0.0);
    CHECK_THROWS_AS(Policy::precommitted(trivial, 1.0, 1.2), TargetUnattainable);
}

TEST_CASE("precommitted control") {
    const auto table = case1_table();
    const Policy p = Policy::precommitted(table, 1.0, 1.35);
    for (int t = 0; t < 3; ++t) CHECK(p.control(t, p.threshold(t)).norm() < 1e-14);
    CHECK(p.threshold(3) == doctest::Approx(1.35 - p.mu_star()));
    CHECK(std::abs(p.threshold(3) - 1.5308) < 5e-4);
    const double gap = 1.35 - p.mu_star();
    const Vector below = p.control(1, 1.0);
    CHECK((below - 1.05 * (gap / table->rho(1) - 1.0) * table->k_plus(1)).norm() < 1e-14);
    const Vector above = p.control(1, 2.0);
    CHECK((above + 1.05 * (gap / table->rho(1) - 2.0) * table->k_minus(1)).norm() < 1e-14);
    CHECK(p.name() == "precommitted");
    CHECK(p.kind() == Policy::Kind::precommitted);
}

TEST_CASE("case 2 initial control") {
    const Market market = oracle::example_market(false);
    // Reported K_0^+ and threshold: the control formula itself.
    Vector k(3);
    k << 1.0589, -0.1212, 1.1086;
    const double expected_scale = 1.05 * (1.5310 / 1.157625 - 1.0);
    CHECK(expected_scale == doctest::Approx(0.33867).epsilon(1e-4));
    SaaOptions opts;
    opts.samples = 200000;
    const std::vector<ConvexCone> cones(3, ConvexCone::half_space(market.period(0).mean));
    const auto table = std::make_shared<RecursionTable>(backward_recursion(market, cones, ExpectationBackend::saa(market, opts)));
    const Policy p = Policy::precommitted(table, 1.0, 1.35);
    const Vector u0 = p.control(0, 1.0);
    CHECK((u0 - 1.05 * ((1.35 - p.mu_star()) / 1.157625 - 1.0) * table->k_plus(0)).norm() < 1e-14);
    CHECK((u0 - expected_scale * k).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("minimum variance and time consistent controls") {
    const auto table = case1_table();
    const Policy mv = Policy::minimum_variance(table, 1.0);
    CHECK(mv.control(0, 3.0).norm() == 0.0);
    const auto aux = std::make_shared<TimeConsistentAux>(time_consistent_aux(oracle::example_market(false)));
    const Policy tc = Policy::time_consistent(aux, 1.0, 1.35);
    for (int t = 0; t < 3; ++t) CHECK(tc.control(t, 1.35 / aux->rho[static_cast<std::size_t>(t)]).norm() < 1e-14);
    CHECK(aux->d_factor[0] == doctest::Approx(49.05).epsilon(2e-3));
    CHECK(aux->d_factor[3] == 1.0);
    CHECK(tc.name() == "time_consistent");
}

TEST_CASE("frontier points") {
    const auto table = case1_table();
    const double r0 = table->rho(0);
    CHECK(frontier_point(*table, 1.0, r0).variance == 0.0);
    CHECK(std::abs(frontier_point(*table, 1.0, 1.35).variance - 0.0348) < 2e-4);
    CHECK(frontier_point(*table, 1.0, 1.35).efficient);
    CHECK_FALSE(frontier_point(*table, 1.0, 1.0).efficient);

    const Market market = oracle::example_market(false);
    SaaOptions opts;
    opts.samples = 20000;
    const auto orth = backward_recursion(market, std::vector<ConvexCone>(3, ConvexCone::nonneg_orthant(3)),
                                         ExpectationBackend::saa(market, opts));
    CHECK(orth.c_minus(0) == 1.0);
    CHECK_THROWS_AS(frontier_point(orth, 1.0, 1.0), TargetUnattainable);

    const auto aux = time_consistent_aux(market);
    CHECK(tc_frontier_point(aux, 1.0, r0) == 0.0);
    CHECK(std::abs(tc_frontier_point(aux, 1.0, 1.35) - 1.815) < 2e-3);
    CHECK_THROWS_AS(tc_frontier_point(aux, 1.0, 1.0), InvalidTarget);
    for (int i = 0; i <= 50; ++i) {
        const double mean = r0 + 0.5 * i / 50.0;
        CHECK(frontier_point(*table, 1.0, mean).variance <= tc_frontier_point(aux, 1.0, mean));
    }
}

TEST_CASE("dual maximized at mu star") {
    const auto table = case1_table();
    const double mu = mu_star(*table, 1.0, 1.35);
    const double best = dual_value(*table, 1.0, 1.35, mu);
    CHECK(best == doctest::Approx(frontier_point(*table, 1.0, 1.35).variance).epsilon(1e-12));
    for (int i = -20; i <= 20; ++i) CHECK(dual_value(*table, 1.0, 1.35, mu + 0.01 * i) <= best + 1e-15);
}

TEST_CASE("induced target") {
    std::mt19937_64 rng(17);
    // A market where C_1^- < 1 so that both branches are live.
    const Market market = oracle::random_discrete_market(rng, 3, 2, 3, 3);
    const auto table = solve(market, std::vector<ConvexCone>(3, ConvexCone::whole_space(2)));
    const double d = table->rho(0) + 0.2;
    const double mu = mu_star(*table, 1.0, d);
    const double at = (d - mu) / table->rho(1);
    const auto boundary = induced_target(*table, 1, at, d, mu);
    CHECK(boundary.d_k == doctest::Approx(table->rho(1) * at).epsilon(1e-14));
    CHECK(boundary.efficient);

    std::uniform_real_distribution<double> xs(0.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const int k = 1 + i % 2;
        const double x = xs(rng);
        const auto it = induced_target(*table, k, x, d, mu);
        const bool node_rule = (d - mu >= table->rho(k) * x) || table->c_minus(k) == 1.0;
        CHECK(it.efficient == node_rule);
    }
}

TEST_CASE("truncated policy solves the induced problem") {
    std::mt19937_64 rng(23);
    int checked = 0;
    for (int attempt = 0; attempt < 40 && checked < 6; ++attempt) {
        const Market market = oracle::random_discrete_market(rng, 2, 2, 3, 3);
        const int kind = attempt % 3;
        const std::vector<ConvexCone> cones{oracle::random_simple_cone(rng, kind, 2),
                                            oracle::random_simple_cone(rng, kind, 2)};
        const auto table = solve(market, cones);
        if (table->c_plus(0) > 1.0 - 1e-6) continue;
        const double d = table->rho(0) + 0.15;
        const double mu = mu_star(*table, 1.0, d);
        for (double x1 : {0.8, 1.3, 2.5}) {
            const auto it = induced_target(*table, 1, x1, d, mu);
            const double rk = table->rho(1);
            const double c = it.d_k >= rk * x1 ? table->c_plus(1) : table->c_minus(1);
            if (c > 1.0 - 1e-9) continue;
            const Policy trunc = Policy::truncated(table, 1, x1, it.d_k);
            CHECK(trunc.start() == 1);
            CHECK((it.d_k - trunc.mu_star()) == doctest::Approx(d - mu).epsilon(1e-12));
            // One-period tail problem from x1 with the period-1 distribution.
            mvcone::MarketSpec tail;
            tail.horizon = 1;
            tail.riskless_rates = {market.riskless_rate(1)};
            tail.periods = {market.period(1)};
            const Market tail_market(tail);
            const auto brute = oracle::brute_force_tree(tail_market, {cones[1]}, x1, it.d_k);
            // Exact moments of the truncated policy over period 1.
            double m1 = 0.0, m2 = 0.0;
            for (const auto& atom : market.period(1).atoms) {
                const double w = market.riskless_rate(1) * x1 + atom.value.dot(trunc.control(1, x1));
                m1 += atom.probability * w;
                m2 += atom.probability * w * w;
            }
            CHECK(m1 == doctest::Approx(it.d_k).epsilon(1e-9));
            CHECK(std::abs((m2 - m1 * m1) - brute.variance) < 1e-6);
        }
        ++checked;
    }
    CHECK(checked == 6);
}

TEST_CASE("time consistent conditional mean on a tree") {
    std::mt19937_64 rng(29);
    const Market market = oracle::random_discrete_market(rng, 3, 2, 3, 3);
    const auto aux = std::make_shared<TimeConsistentAux>(time_consistent_aux(market));
    const double d = market.rho(0) + 0.3;
    const Policy tc = Policy::time_consistent(aux, 1.0, d);
    for (double x : {0.5, 1.0, 2.0}) {
        for (int start = 0; start < 3; ++start) {
            double mean = 0.0;
            double total = 0.0;
            for (const auto& path : enumerate_paths(market)) {
                double w = x;
                for (int t = start; t < 3; ++t) {
                    const auto& atom = market.period(t).atoms[path.atoms[static_cast<std::size_t>(t)]];
                    w = market.riskless_rate(t) * w + atom.value.dot(tc.control(t, w));
                }
                mean += path.probability * w;
                total += path.probability;
            }
            CHECK(mean / total == doctest::Approx(d).epsilon(1e-12));
        }
    }
}
