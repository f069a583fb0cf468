#include <doctest.h>

#include <nlohmann/json.hpp>

#include <mvcone/config.hpp>
#include <mvcone/errors.hpp>

using namespace mvcone;
using nlohmann::json;

namespace {

json gaussian_market() {
    return json::parse(R"({
        "horizon": 2, "riskless_rates": [1.02, 1.03], "family": "gaussian",
        "mean": [0.05, 0.08], "covariance": [[0.04, 0.01], [0.01, 0.09]]
    })");
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
    const auto cfg = parse_run_config(json{{"market", gaussian_market()}});
    CHECK(cfg.market.horizon == 2);
    CHECK(cfg.market.riskless_rates[1] == 1.03);
    CHECK(cfg.cones.size() == 2);
    CHECK(cfg.cones[0].kind() == ConvexCone::Kind::whole_space);
    CHECK(cfg.policy.kind == Policy::Kind::precommitted);
    CHECK(cfg.policy.x0 == 1.0);
    CHECK(cfg.policy.d == 1.35);
    CHECK(cfg.numerics.backend == ExpectationBackend::Mode::saa);
    CHECK(cfg.numerics.saa.samples == 1'000'000);
    CHECK(cfg.simulation.paths == 1'000'000);
}

TEST_CASE("annual returns and scalar riskless rate") {
    const auto j = json::parse(R"({"market": {
        "horizon": 3, "riskless_rate": 1.05, "family": "student_t", "df": 5,
        "annual_returns": {"expected": [0.14, 0.16], "volatility": [0.185, 0.3],
                           "correlation": [[1, 0.64], [0.64, 1]], "riskless": 0.05}}})");
    const auto cfg = parse_run_config(j);
    CHECK(cfg.market.riskless_rates == std::vector<double>{1.05, 1.05, 1.05});
    CHECK(cfg.market.periods[2].family == Family::student_t);
    CHECK(cfg.market.periods[0].mean[1] == doctest::Approx(0.11));
    CHECK(cfg.market.periods[0].covariance(0, 1) == doctest::Approx(0.64 * 0.185 * 0.3));
}

TEST_CASE("discrete markets default to the exact backend") {
    const auto j = json::parse(R"({"market": {"horizon": 1, "riskless_rate": 1.0, "family": "discrete",
        "atoms": [{"value": [-0.1], "probability": 0.5}, {"value": [0.2], "probability": 0.5}]}})");
    const auto cfg = parse_run_config(j);
    CHECK(cfg.numerics.backend == ExpectationBackend::Mode::exact_discrete);
    const Market m(cfg.market);
    CHECK(m.second_moment(0)(0, 0) == doctest::Approx(0.025));
}

TEST_CASE("cones sections") {
    CHECK(cones_from_json(json::parse(R"({"type": "orthant"})"), 3, 2)[2].kind() == ConvexCone::Kind::nonneg_orthant);
    const auto list = cones_from_json(json::parse(R"([{"type": "whole_space"}, {"type": "half_space", "normal": [1, 2]}])"), 2, 2);
    CHECK(list[1].kind() == ConvexCone::Kind::half_space);
    CHECK(list[1].normal()[1] == 2.0);
    CHECK_THROWS_AS(cones_from_json(json::parse(R"([{"type": "whole_space"}])"), 2, 2), ConfigError);
    CHECK_THROWS_AS(cone_from_json(json::parse(R"({"type": "cylinder"})"), 2), ConfigError);
    CHECK_THROWS_AS(cone_from_json(json::parse(R"({"type": "half_space", "normal": [1, 2, 3]})"), 2), ConfigError);
    CHECK_THROWS_AS(cone_from_json(json::parse(R"({"type": "orthant", "normal": [1, 2]})"), 2), ConfigError);
    const auto poly = cone_from_json(json::parse(R"({"type": "polyhedral", "A": [[0, 1], [1, 1]]})"), 2);
    CHECK(poly.rows().rows() == 2);
    // Round trip.
    for (const auto& c : {poly, list[1], ConvexCone::nonneg_orthant(2), ConvexCone::whole_space(2)}) {
        const auto back = cone_from_json(cone_to_json(c), 2);
        CHECK(back.kind() == c.kind());
        CHECK(back.rows() == c.rows());
    }
}

TEST_CASE("unknown or malformed keys are rejected") {
    json j{{"market", gaussian_market()}};
    j["extra"] = 1;
    CHECK_THROWS_AS(parse_run_config(j), ConfigError);
    json m = gaussian_market();
    m["volatility"] = 0.1;
    CHECK_THROWS_AS(parse_run_config(json{{"market", m}}), ConfigError);
    json p{{"market", gaussian_market()}, {"policy", {{"kind", "greedy"}}}};
    CHECK_THROWS_AS(parse_run_config(p), ConfigError);
    json n{{"market", gaussian_market()}, {"numerics", {{"samples", "many"}}}};
    CHECK_THROWS_AS(parse_run_config(n), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json::object()), ConfigError);
    json bad = gaussian_market();
    bad["covariance"] = json::parse("[[0.04, 0.01]]");
    CHECK_THROWS_AS(Market(parse_run_config(json{{"market", bad}}).market), Error);
    CHECK_THROWS_AS(load_run_config("/nonexistent/file.json"), ConfigError);
}

TEST_CASE("market invariants are left to the market") {
    json m = gaussian_market();
    m["covariance"] = json::parse("[[0.04, 0.2], [0.2, 0.09]]");
    const auto cfg = parse_run_config(json{{"market", m}});
    CHECK_THROWS_AS(Market{cfg.market}, InvalidMarket);
}

TEST_CASE("numerics and backends") {
    const auto j = json::parse(R"({"backend": "saa", "samples": 1000, "seed": 3, "moment_matching": false,
                                   "optimizer": "penalty", "tol": 1e-9, "max_iter": 77})");
    const auto cfg = parse_run_config(json{{"market", gaussian_market()}, {"numerics", j}});
    CHECK(cfg.numerics.saa.samples == 1000);
    CHECK(cfg.numerics.saa.seed == 3);
    CHECK_FALSE(cfg.numerics.saa.moment_matching);
    CHECK(cfg.numerics.recursion.minimize.optimizer == Optimizer::penalty);
    CHECK(cfg.numerics.recursion.minimize.tol == 1e-9);
    CHECK(cfg.numerics.recursion.minimize.max_iter == 77);
    const Market market(cfg.market);
    const auto backend = make_backend(market, cfg.numerics);
    CHECK(backend.period(0).size() == 1000);
    NumericsConfig exact;
    exact.backend = ExpectationBackend::Mode::exact_discrete;
    CHECK_THROWS_AS(make_backend(market, exact), BackendMismatch);
}

TEST_CASE("vector and matrix helpers") {
    CHECK(vector_from_json(json::parse("[1, 2]"), "v")[1] == 2.0);
    CHECK_THROWS_AS(vector_from_json(json::parse("[1, \"x\"]"), "v"), ConfigError);
    CHECK_THROWS_AS(matrix_from_json(json::parse("[[1, 2], [3]]"), "m"), ConfigError);
    Matrix m(2, 2);
    m << 1, 2, 3, 4;
    CHECK(matrix_from_json(to_json(m), "m") == m);
}
