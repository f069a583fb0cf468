#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvcone/cones.hpp"
#include "mvcone/market.hpp"
#include "mvcone/policy.hpp"
#include "mvcone/solver.hpp"

namespace mvcone {

/// The minimum-variance signed supermartingale density evaluated along one
/// return path.
struct DensityPath {
    std::vector<double> b_factors;
    /// partial_products[i] = B_0 ... B_i.
    std::vector<double> partial_products;
    double density = 0.0;
    /// m_1 .. m_T; filled only when requested.
    std::vector<double> step_ratios;
};

/// `returns` holds P_0 .. P_{T-1}.
DensityPath density_along_path(const RecursionTable& table, std::span<const Vector> returns,
                               bool with_step_ratios = false);

/// E[density | F_t] where t = b_prefix.size() and b_prefix = B_0 .. B_{t-1}.
double conditional_expectation(const RecursionTable& table, std::span<const double> b_prefix);

struct PolarViolation {
    int t = 0;
    std::vector<std::size_t> node;  // atom indices of periods 0 .. t-1
    Vector vector;                   // E[density P_t | node]
};

struct SupermartingaleReport {
    bool holds = true;
    std::size_t nodes_checked = 0;
    double max_norm = 0.0;  // largest ||E[density P_t | node]||
    std::vector<PolarViolation> violations;
};

/// Checks E[density P_t | node] in the polar cone of A_t at every time-t
/// node of the scenario tree. Throws BackendMismatch unless every period
/// is discrete.
SupermartingaleReport supermartingale_check(const RecursionTable& table, const Market& market,
                                            std::span<const ConvexCone> cones, int t, double tol = 1e-8);

/// The check above for every t = 0 .. T-1.
SupermartingaleReport supermartingale_check(const RecursionTable& table, const Market& market,
                                            std::span<const ConvexCone> cones, double tol = 1e-8);

/// Terminal wealth of the pre-committed policy implied by the density.
double duality_terminal_wealth(const Policy& policy, const DensityPath& path);

/// Pre-committed wealth at time t from the partial product B_0 .. B_{t-1}.
double closed_form_wealth(const Policy& policy, const DensityPath& path, int t);

struct DensityMoments {
    std::size_t paths = 0;
    double mean = 0.0;
    double mean_std_error = 0.0;
    double second_moment = 0.0;
    double second_moment_std_error = 0.0;
    double theoretical_second_moment = 0.0;
    std::size_t zero_density_paths = 0;
    /// Fraction of paths with E[density | F_t] < 0, t = 0 .. T.
    std::vector<double> negative_fraction;
};

/// Monte Carlo moments of the density using the simulation streams of
/// `seed`, so path i sees the same returns as path i of simulate().
DensityMoments density_moments(const RecursionTable& table, const Market& market, std::size_t n_paths,
                               std::uint64_t seed, unsigned threads = 0);

/// Exact moments over the full scenario tree of a discrete market.
DensityMoments exact_density_moments(const RecursionTable& table, const Market& market);

}  // namespace mvcone
