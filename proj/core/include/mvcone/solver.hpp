#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvcone/cones.hpp"
#include "mvcone/market.hpp"

namespace mvcone {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Which of the two functions h_t^+ / h_t^- is meant.
enum class Sign { plus, minus };

std::string to_string(Sign sign);

/// Weighted scenarios of P_t for a single period. Each row is one
/// realization. Empty `weights` means equal weights 1/N.
struct ScenarioSet {
    RowMatrix returns;
    Vector weights;

    Eigen::Index size() const noexcept { return returns.rows(); }
    double weight(Eigen::Index i) const {
        return weights.size() == 0 ? 1.0 / static_cast<double>(returns.rows()) : weights[i];
    }
    Vector mean() const;
    Matrix second_moment() const;
};

struct SaaOptions {
    std::size_t samples = 1'000'000;
    std::uint64_t seed = 7;
    /// Affinely map each period's draws so their sample mean and covariance
    /// equal the declared moments.
    bool moment_matching = true;
};

/// How expectations over P_t are evaluated: exact sums over discrete atoms,
/// or a sample average over a sample set frozen at construction.
class ExpectationBackend {
public:
    enum class Mode { exact_discrete, saa };

    /// Throws BackendMismatch unless every period is discrete.
    static ExpectationBackend exact(const Market& market);
    static ExpectationBackend saa(const Market& market, const SaaOptions& opts);

    Mode mode() const noexcept { return mode_; }
    const SaaOptions& saa_options() const noexcept { return saa_; }
    int horizon() const noexcept { return static_cast<int>(periods_.size()); }
    Eigen::Index dimension() const noexcept { return dimension_; }
    const ScenarioSet& period(int t) const { return periods_.at(static_cast<std::size_t>(t)); }
    std::string describe() const;

private:
    ExpectationBackend() = default;

    Mode mode_ = Mode::exact_discrete;
    SaaOptions saa_;
    Eigen::Index dimension_ = 0;
    std::vector<ScenarioSet> periods_;
};

/// (C_{t+1}^+, C_{t+1}^-).
struct NextCosts {
    double plus = 1.0;
    double minus = 1.0;
};

/// Value, gradient and Hessian of h_t^{+/-} plus the piecewise-linear form
/// E[C (1 -/+ P'K)] and the standard error of the difference between the
/// quadratic and linear forms. Only the requested parts are filled.
struct HEvaluation {
    double value = 0.0;
    Vector gradient;
    Matrix hessian;
    double linear_value = 0.0;
    double difference_std_error = 0.0;
};

enum HParts : unsigned {
    kValue = 1u,
    kGradient = 2u,
    kHessian = 4u,
    kLinear = 8u,
};

HEvaluation evaluate_h(const ScenarioSet& scenarios, Sign sign, const Vector& k, NextCosts next,
                       unsigned parts);

double eval_h(const ExpectationBackend& backend, int t, Sign sign, const Vector& k, NextCosts next);
Vector grad_h(const ExpectationBackend& backend, int t, Sign sign, const Vector& k, NextCosts next);

enum class Optimizer { projected_gradient, penalty };

std::string to_string(Optimizer optimizer);
Optimizer optimizer_from_string(const std::string& name);

struct MinimizeOptions {
    Optimizer optimizer = Optimizer::projected_gradient;
    double tol = 1e-8;
    int max_iter = 5000;
    std::optional<Vector> init;
    double armijo_initial_step = 1.0;
    double armijo_shrink = 0.5;
    double armijo_slope = 1e-4;
    /// Feasible directions sampled for the variational-inequality residual.
    int vi_directions = 64;
    ProjectionOptions projection{ProjectionOptions::Method::moreau_nnls};
};

/// First-order optimality measures at a point K of the cone.
struct FirstOrderResiduals {
    /// ||K - proj(K - grad)||.
    double projected_gradient = 0.0;
    /// max(0, -min_u grad'(u - K)/||u - K||) over sampled feasible u.
    double variational_inequality = 0.0;
    /// |grad' K|.
    double complementarity = 0.0;
    double gradient_norm = 0.0;
};

FirstOrderResiduals first_order_residuals(const ConvexCone& cone, const Vector& k, const Vector& gradient,
                                          int vi_directions, const ProjectionOptions& projection = {});

struct MinimizeDiagnostics {
    int iterations = 0;
    FirstOrderResiduals residuals;
    std::string algorithm;
};

struct MinimizeResult {
    Vector k;
    double value = 0.0;
    MinimizeDiagnostics diagnostics;
};

/// Minimizes h_t^{sign} over `cone`. Throws NoConvergence (carrying the best
/// iterate) when the projected-gradient residual stays above `opts.tol`.
MinimizeResult minimize_over_cone(const ScenarioSet& scenarios, Sign sign, const ConvexCone& cone,
                                  NextCosts next, const MinimizeOptions& opts = {});
MinimizeResult minimize_over_cone(const ExpectationBackend& backend, int t, Sign sign,
                                  const ConvexCone& cone, NextCosts next, const MinimizeOptions& opts = {});

struct RecursionOptions {
    MinimizeOptions minimize;
    /// Allowed gap between the quadratic and piecewise-linear forms of C_t
    /// for the exact backend.
    double cross_tol_exact = 1e-6;
    /// For SAA the allowed gap is this many standard errors (but never
    /// below cross_tol_exact).
    double cross_tol_std_errors = 3.0;
    /// Relative factor of the zero tolerance 1e-7 (1 + ||E^-1[PP']E[P]||).
    double zero_tol_factor = 1e-7;
};

/// Optimal K_t^{+/-}, C_t^{+/-} for one period plus solver diagnostics.
struct PeriodSolution {
    Vector k_plus;
    Vector k_minus;
    double c_plus = 1.0;
    double c_minus = 1.0;
    /// C_t computed by the quadratic form, for the consistency check.
    double c_plus_quadratic = 1.0;
    double c_minus_quadratic = 1.0;
    double cross_tol = 0.0;
    double zero_tol = 0.0;
    MinimizeDiagnostics plus;
    MinimizeDiagnostics minus;
    bool origin_only_cone = false;
};

/// Output of the backward recursion: K_t^{+/-}, C_t^{+/-} for t < T and the
/// terminal C_T^{+/-} = 1, along with the riskless rates needed to turn the
/// table into a policy.
class RecursionTable {
public:
    RecursionTable(std::vector<double> riskless_rates, std::vector<PeriodSolution> periods,
                   std::string backend);

    int horizon() const noexcept { return static_cast<int>(periods_.size()); }
    Eigen::Index dimension() const noexcept { return periods_.empty() ? 0 : periods_.front().k_plus.size(); }

    double c_plus(int t) const;
    double c_minus(int t) const;
    const Vector& k_plus(int t) const { return period(t).k_plus; }
    const Vector& k_minus(int t) const { return period(t).k_minus; }
    const PeriodSolution& period(int t) const { return periods_.at(static_cast<std::size_t>(t)); }
    double zero_tol(int t) const { return period(t).zero_tol; }

    double riskless_rate(int t) const { return riskless_rates_.at(static_cast<std::size_t>(t)); }
    const std::vector<double>& riskless_rates() const noexcept { return riskless_rates_; }
    double rho(int t) const { return rho_.at(static_cast<std::size_t>(t)); }
    const std::string& backend() const noexcept { return backend_; }

private:
    std::vector<double> riskless_rates_;
    std::vector<double> rho_;
    std::vector<PeriodSolution> periods_;
    std::string backend_;
};

/// Runs the backward recursion from t = T-1 down to 0. `cones` holds one cone
/// per period. Throws NoConvergence or ConsistencyError.
RecursionTable backward_recursion(const Market& market, std::span<const ConvexCone> cones,
                                  const ExpectationBackend& backend, const RecursionOptions& opts = {});

/// Checks 0 < C_t <= C_{t+1}, equality iff K_t = 0, and K_t in the cone.
/// Returns an empty string when every invariant holds, otherwise a
/// description of the first violation.
std::string check_table_invariants(const RecursionTable& table, std::span<const ConvexCone> cones);

/// J_t(y) = 1/2 rho_t^2 [C_t^+ y^2 1{y <= 0} + C_t^- y^2 1{y > 0}].
double value_function(const RecursionTable& table, int t, double y);

/// Lagrangian dual g(mu) of the mean-variance problem.
double dual_value(const RecursionTable& table, double x0, double d, double mu);

}  // namespace mvcone
