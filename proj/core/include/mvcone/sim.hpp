#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvcone/market.hpp"
#include "mvcone/policy.hpp"

namespace mvcone {

struct SimulationOptions {
    /// Keep every P_t draw (needed for replay and the density identities).
    bool keep_returns = true;
    /// 0 picks the hardware concurrency. Results do not depend on it.
    unsigned threads = 0;
};

/// Monte Carlo wealth paths of one policy. Path i in period t always uses
/// the stream (seed, i, t), so any two ensembles with the same seed share
/// their randomness.
class PathEnsemble {
public:
    std::size_t size() const noexcept { return n_paths_; }
    std::uint64_t seed() const noexcept { return seed_; }
    int horizon() const noexcept { return horizon_; }
    Eigen::Index dimension() const noexcept { return dimension_; }
    int start() const noexcept { return start_; }
    const std::string& policy_name() const noexcept { return policy_name_; }

    /// x_t of path i; NaN for t before the policy start.
    double wealth(std::size_t i, int t) const { return wealth_[i * stride() + static_cast<std::size_t>(t)]; }
    bool has_returns() const noexcept { return !returns_.empty(); }
    /// P_t of path i.
    Eigen::Map<const Vector> returns(std::size_t i, int t) const;

    /// Thresholds (d - mu*)/rho_t for t = 0 .. T; empty unless the policy
    /// is pre-committed or truncated.
    const std::vector<double>& thresholds() const noexcept { return thresholds_; }
    /// x_t > threshold_t; false everywhere when thresholds are empty.
    bool above(std::size_t i, int t) const;

private:
    friend PathEnsemble simulate(const Policy&, const Market&, std::size_t, std::uint64_t, const SimulationOptions&);
    std::size_t stride() const noexcept { return static_cast<std::size_t>(horizon_) + 1; }

    std::size_t n_paths_ = 0;
    std::uint64_t seed_ = 0;
    int horizon_ = 0;
    Eigen::Index dimension_ = 0;
    int start_ = 0;
    std::string policy_name_;
    std::vector<double> wealth_;
    std::vector<double> returns_;
    std::vector<double> thresholds_;
};

PathEnsemble simulate(const Policy& policy, const Market& market, std::size_t n_paths, std::uint64_t seed,
                      const SimulationOptions& opts = {});

struct Exceedance {
    double probability = 0.0;
    double std_error = 0.0;
    /// first_crossing[t] = fraction of paths whose first exceedance is at t
    /// (entries 0 and T stay zero).
    std::vector<double> first_crossing;
    /// Fraction of paths above the threshold at each t.
    std::vector<double> per_period;
};

/// Fraction of paths with x_t > thresholds[t] for some t in 1 .. T-1.
Exceedance exceedance_prob(const PathEnsemble& ensemble, const std::vector<double>& thresholds);
/// Same with the ensemble's own thresholds.
Exceedance exceedance_prob(const PathEnsemble& ensemble);

struct TerminalStats {
    std::size_t paths = 0;
    double mean = 0.0;
    double variance = 0.0;
    double mean_std_error = 0.0;
    double variance_std_error = 0.0;
};

TerminalStats terminal_stats(const PathEnsemble& ensemble);

/// Recomputes every transition from stored wealth and returns; returns the
/// largest absolute discrepancy (0 means bit-exact). Needs stored returns.
double replay_max_error(const PathEnsemble& ensemble, const Policy& policy, const Market& market);

}  // namespace mvcone
