#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvcone/market.hpp"
#include "mvcone/sim.hpp"
#include "mvcone/solver.hpp"

namespace mvcone {

/// P'K^+ counts as exceeding one only beyond this slack, so that atoms
/// sitting exactly on the boundary follow the "<=" convention.
inline constexpr double kFlipTol = 1e-10;

enum class TcieReason { condition_18, condition_19, violated };

std::string to_string(TcieReason reason);

struct TciePeriodDiagnostics {
    int t = 0;
    /// Essential supremum of P_t'K_t^+: exact for discrete periods, +inf for
    /// unbounded families with K_t^+ != 0.
    double ess_sup = 0.0;
    /// Largest P_t'K_t^+ among backend samples (NaN when no backend given).
    double sample_max = 0.0;
    bool can_flip = false;
    double c_minus = 1.0;
    double k_minus_norm = 0.0;
};

struct TcieVerdict {
    bool is_tcie = true;
    TcieReason reason = TcieReason::condition_18;
    /// First t <= T-2 at which P_t'K_t^+ > 1 has positive probability.
    std::optional<int> flip_period;
    /// For violated verdicts: first period whose K^- is nonzero after the flip.
    std::optional<int> first_period;
    std::string evidence;
    std::vector<TciePeriodDiagnostics> periods;
};

/// Decides whether every pre-committed efficient policy on this market is
/// efficient for all its truncations. `backend` only feeds the sample
/// maxima in the diagnostics.
TcieVerdict check_tcie(const RecursionTable& table, const Market& market,
                       const ExpectationBackend* backend = nullptr);

/// (d - mu*) / rho_t. Throws TargetUnattainable.
double threshold(const RecursionTable& table, double x0, double d, int t);

struct TransitionProbs {
    double plus_stay = 0.0;    // Pr(P'K^+ <= 1)
    double plus_cross = 0.0;   // Pr(P'K^+ > 1)
    double minus_cross = 0.0;  // Pr(P'K^- <= -1)
    double minus_stay = 0.0;   // Pr(P'K^- > -1)
    double plus_std_error = 0.0;
    double minus_std_error = 0.0;
    bool exact = true;
};

/// Exact on discrete periods, otherwise averaged over the backend's
/// scenarios with binomial standard errors.
TransitionProbs transition_probs(const RecursionTable& table, const Market& market, int t,
                                 const ExpectationBackend& backend);

struct ConditionalCheckRow {
    int t = 0;
    /// "below", "above" or "at" the threshold at time t.
    std::string condition;
    std::size_t conditioning_paths = 0;
    double frequency = 0.0;  // of being at or below the threshold at t+1 ("at": staying at it)
    double expected = 0.0;
    double std_error = 0.0;
    bool evaluated = false;
    bool passed = true;
};

struct ConditionalCheckReport {
    bool passed = true;
    std::size_t evaluated = 0;
    std::vector<ConditionalCheckRow> rows;
};

/// Compares threshold-crossing frequencies of a pre-committed ensemble with
/// `probs[t]` within `std_errors` binomial standard errors. Conditioning
/// sets with fewer than `min_paths` paths are reported but not evaluated;
/// throws InsufficientConditioningEvents when no set is evaluable.
ConditionalCheckReport conditional_consistency_check(const PathEnsemble& ensemble, const RecursionTable& table,
                                                     double d, double mu_star,
                                                     const std::vector<TransitionProbs>& probs,
                                                     double std_errors = 4.0, std::size_t min_paths = 100);

}  // namespace mvcone
