#pragma once

#include <nlohmann/json.hpp>

#include "mvcone/sim.hpp"
#include "mvcone/solver.hpp"
#include "mvcone/tcie.hpp"
#include "mvcone/vssm.hpp"

namespace mvcone {

nlohmann::json to_json(const RecursionTable& table);
/// Inverse of to_json(RecursionTable); diagnostics are restored as far as
/// they were serialized.
RecursionTable table_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TcieVerdict& verdict);
nlohmann::json to_json(const DensityMoments& moments);
nlohmann::json to_json(const Exceedance& exceedance);
nlohmann::json to_json(const TerminalStats& stats);
nlohmann::json to_json(const TransitionProbs& probs);
nlohmann::json to_json(const ConditionalCheckReport& report);

}  // namespace mvcone
