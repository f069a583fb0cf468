#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvcone/random.hpp"

namespace mvcone {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Family { gaussian, student_t, discrete };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

/// One support point of a discrete excess-return distribution.
struct Atom {
    Vector value;
    double probability = 0.0;
};

/// Distribution of the excess-return vector P_t for a single period.
///
/// `mean` and `covariance` are the true first two moments for every family.
/// For student_t the sampler scales the covariance by (df-2)/df so that the
/// declared covariance is the covariance of the draws.
struct PeriodDistribution {
    Family family = Family::gaussian;
    Vector mean;
    Matrix covariance;
    int df = 0;
    std::vector<Atom> atoms;

    static PeriodDistribution gaussian(Vector mean, Matrix covariance);
    static PeriodDistribution student_t(Vector mean, Matrix covariance, int df);
    /// Moments are computed from the atoms.
    static PeriodDistribution discrete(std::vector<Atom> atoms);

    Eigen::Index dimension() const { return mean.size(); }
};

/// Unvalidated market description: horizon, gross riskless rates s_t and
/// per-period excess-return distributions (independent across periods).
struct MarketSpec {
    int horizon = 0;
    std::vector<double> riskless_rates;
    std::vector<PeriodDistribution> periods;
};

/// Same distribution and riskless rate in every period.
MarketSpec iid_market_spec(int horizon, double riskless_rate, const PeriodDistribution& period);

/// First two moments of the excess return.
struct ExcessMoments {
    Vector mean;
    Matrix covariance;
};

/// Converts an annual-return table (net expected returns, volatilities,
/// correlation matrix) and a net riskless return into excess-return moments.
ExcessMoments moments_from_annual_table(const Vector& expected_returns, const Vector& volatilities,
                                        const Matrix& correlation, double riskless_return);

/// A validated, immutable market. Construction throws InvalidMarket.
class Market {
public:
    explicit Market(MarketSpec spec);

    int horizon() const noexcept { return spec_.horizon; }
    Eigen::Index dimension() const noexcept { return dimension_; }
    const MarketSpec& spec() const noexcept { return spec_; }

    double riskless_rate(int t) const { return spec_.riskless_rates.at(static_cast<std::size_t>(t)); }
    const PeriodDistribution& period(int t) const { return spec_.periods.at(static_cast<std::size_t>(t)); }

    /// E[P_t P_t'] = Cov + mean mean'.
    const Matrix& second_moment(int t) const { return cache_.at(static_cast<std::size_t>(t)).second_moment; }

    /// E^{-1}[P_t P_t'] E[P_t], the unconstrained risky direction.
    const Vector& unconstrained_direction(int t) const {
        return cache_.at(static_cast<std::size_t>(t)).direction;
    }

    /// E[P_t]' E^{-1}[P_t P_t'] E[P_t], always in (0, 1) for a valid market.
    double projected_sharpe(int t) const { return cache_.at(static_cast<std::size_t>(t)).sharpe; }

    /// rho_t = prod_{l=t}^{T-1} s_l, with rho_T = 1.
    double rho(int t) const;

    bool all_discrete() const noexcept;

    /// Draws one realization of P_t from `stream`.
    void sample_into(int t, CounterStream& stream, Eigen::Ref<Vector> out) const;
    Vector sample(int t, CounterStream& stream) const;

private:
    struct PeriodCache {
        Matrix second_moment;
        Vector direction;
        double sharpe = 0.0;
        Matrix sampling_factor;           // lower Cholesky factor of the sampling scale matrix
        std::vector<double> cumulative;   // discrete inverse-CDF table
    };

    MarketSpec spec_;
    Eigen::Index dimension_ = 0;
    std::vector<PeriodCache> cache_;
    std::vector<double> rho_;
};

/// Validates `spec` and returns the immutable market; throws InvalidMarket
/// naming the failing period and invariant.
Market validate(MarketSpec spec);

/// One draw of P_t keyed by (seed, path, t) in the simulation domain.
Vector sample_period(const Market& market, int t, std::uint64_t seed, std::uint64_t path);

/// rho_t of `market`.
double rho(const Market& market, int t);

/// One full scenario of a discrete market: the atom index chosen in every
/// period and the path probability.
struct ScenarioPath {
    std::vector<std::size_t> atoms;
    double probability = 1.0;
};

/// Enumerates every path of a market whose periods are all discrete.
/// Throws BackendMismatch otherwise, and Error when the tree would exceed
/// `max_paths` leaves.
std::vector<ScenarioPath> enumerate_paths(const Market& market, std::size_t max_paths = 1u << 22);

}  // namespace mvcone
