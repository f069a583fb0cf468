#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvcone/cones.hpp"
#include "mvcone/market.hpp"
#include "mvcone/policy.hpp"
#include "mvcone/solver.hpp"

namespace mvcone {

struct PolicyConfig {
    Policy::Kind kind = Policy::Kind::precommitted;
    double x0 = 1.0;
    double d = 1.35;
};

struct NumericsConfig {
    ExpectationBackend::Mode backend = ExpectationBackend::Mode::saa;
    SaaOptions saa;
    RecursionOptions recursion;
};

struct SimulationConfig {
    std::size_t paths = 1'000'000;
    std::uint64_t seed = 11;
};

/// A complete run description. Every section except "market" is optional.
struct RunConfig {
    MarketSpec market;
    std::vector<ConvexCone> cones;  // one per period
    PolicyConfig policy;
    NumericsConfig numerics;
    SimulationConfig simulation;
    std::string output;
};

/// All parse functions throw ConfigError on unknown keys, wrong types or
/// missing fields. Market invariants are checked later by Market itself.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

MarketSpec market_from_json(const nlohmann::json& j);
ConvexCone cone_from_json(const nlohmann::json& j, Eigen::Index dimension);
/// A single cone object is broadcast to every period; a list must have one
/// entry per period. A missing section means the whole space.
std::vector<ConvexCone> cones_from_json(const nlohmann::json& j, int horizon, Eigen::Index dimension);
nlohmann::json cone_to_json(const ConvexCone& cone);

ExpectationBackend make_backend(const Market& market, const NumericsConfig& numerics);

Vector vector_from_json(const nlohmann::json& j, const std::string& what);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Matrix& m);

}  // namespace mvcone
