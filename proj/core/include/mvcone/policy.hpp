#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mvcone/market.hpp"
#include "mvcone/solver.hpp"

namespace mvcone {

/// Lagrange shift mu* of the pre-committed policy for target d. Throws
/// TargetUnattainable when the applicable C_0 is one and d != rho_0 x0.
double mu_star(const RecursionTable& table, double x0, double d);

/// Per-period quantities of the unconstrained time-consistent benchmark.
struct TimeConsistentAux {
    std::vector<Vector> direction;  // E^{-1}[PP'] E[P]
    std::vector<double> b;          // E[P]' E^{-1}[PP'] E[P]
    std::vector<double> d_factor;   // prod_{j>=t} (1 - b_j) / b_j, with d_factor[T] = 1
    std::vector<double> rho;

    int horizon() const noexcept { return static_cast<int>(b.size()); }
};

TimeConsistentAux time_consistent_aux(const Market& market);

/// A wealth-feedback control rule u_t = f(t, x_t).
class Policy {
public:
    enum class Kind { precommitted, minimum_variance, time_consistent, truncated };

    /// Throws TargetUnattainable (see mu_star).
    static Policy precommitted(std::shared_ptr<const RecursionTable> table, double x0, double d);
    static Policy minimum_variance(std::shared_ptr<const RecursionTable> table, double x0);
    static Policy time_consistent(std::shared_ptr<const TimeConsistentAux> aux, double x0, double d);
    /// Pre-committed policy of the problem that starts at time k with
    /// wealth x_k and target d_k. k = 0 is the untruncated problem.
    static Policy truncated(std::shared_ptr<const RecursionTable> table, int k, double x_k, double d_k);

    Kind kind() const noexcept { return kind_; }
    std::string name() const;
    int horizon() const noexcept;
    Eigen::Index dimension() const noexcept;

    /// First period at which the policy is applied (k for truncated, else 0).
    int start() const noexcept { return start_; }
    double initial_wealth() const noexcept { return x0_; }
    double target() const noexcept { return d_; }
    double mu_star() const noexcept { return mu_; }

    double riskless_rate(int t) const;
    double rho(int t) const;

    /// Risky holdings at time t given wealth x_t.
    Vector control(int t, double x) const;

    /// (d - mu*) / rho_t; the breakpoint of the two-piece rule. Only for
    /// precommitted and truncated kinds.
    double threshold(int t) const;

    const RecursionTable* table() const noexcept { return table_.get(); }
    const TimeConsistentAux* aux() const noexcept { return aux_.get(); }

private:
    Policy() = default;

    Kind kind_ = Kind::minimum_variance;
    std::shared_ptr<const RecursionTable> table_;
    std::shared_ptr<const TimeConsistentAux> aux_;
    double x0_ = 0.0;
    double d_ = 0.0;
    double mu_ = 0.0;
    int start_ = 0;
};

std::string to_string(Policy::Kind kind);

struct FrontierPoint {
    double variance = 0.0;
    /// False on the lower branch (mean below rho_0 x0).
    bool efficient = true;
};

/// Minimum variance attainable for expected terminal wealth `mean`.
/// Throws TargetUnattainable when the applicable C_0 is one.
FrontierPoint frontier_point(const RecursionTable& table, double x0, double mean);

/// Variance of the time-consistent policy with expected terminal wealth
/// `mean`. Throws InvalidTarget for mean < rho_0 x0.
double tc_frontier_point(const TimeConsistentAux& aux, double x0, double mean);

struct InducedTarget {
    double d_k = 0.0;
    bool efficient = true;
};

/// Target of the truncated problem at time k for which the tail of the
/// pre-committed policy is optimal, and whether that tail is efficient.
InducedTarget induced_target(const RecursionTable& table, int k, double x_k, double d, double mu_star);

}  // namespace mvcone
