#include "mvcone/market.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mvcone/errors.hpp"

namespace mvcone {

namespace {

constexpr double kProbabilitySumTol = 1e-12;
constexpr double kAtomMomentTol = 1e-10;

bool is_symmetric(const Matrix& m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

// Smallest eigenvalue must be clearly positive relative to the largest.
bool is_positive_definite(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) return false;
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    return lo > 1e-12 * std::max(1.0, hi);
}

void atom_moments(const std::vector<Atom>& atoms, Vector& mean, Matrix& cov) {
    const Eigen::Index n = atoms.front().value.size();
    mean = Vector::Zero(n);
    for (const Atom& a : atoms) mean += a.probability * a.value;
    cov = Matrix::Zero(n, n);
    for (const Atom& a : atoms) {
        const Vector c = a.value - mean;
        cov.noalias() += a.probability * c * c.transpose();
    }
}

}  // namespace

std::string to_string(Family family) {
    switch (family) {
        case Family::gaussian: return "gaussian";
        case Family::student_t: return "student_t";
        case Family::discrete: return "discrete";
    }
    return "unknown";
}

Family family_from_string(const std::string& name) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "student_t") return Family::student_t;
    if (name == "discrete") return Family::discrete;
    throw ConfigError("unknown distribution family '" + name + "'");
}

PeriodDistribution PeriodDistribution::gaussian(Vector mean, Matrix covariance) {
    PeriodDistribution d;
    d.family = Family::gaussian;
    d.mean = std::move(mean);
    d.covariance = std::move(covariance);
    return d;
}

PeriodDistribution PeriodDistribution::student_t(Vector mean, Matrix covariance, int df) {
    PeriodDistribution d = gaussian(std::move(mean), std::move(covariance));
    d.family = Family::student_t;
    d.df = df;
    return d;
}

PeriodDistribution PeriodDistribution::discrete(std::vector<Atom> atoms) {
    PeriodDistribution d;
    d.family = Family::discrete;
    d.atoms = std::move(atoms);
    if (!d.atoms.empty()) atom_moments(d.atoms, d.mean, d.covariance);
    return d;
}

MarketSpec iid_market_spec(int horizon, double riskless_rate, const PeriodDistribution& period) {
    MarketSpec spec;
    spec.horizon = horizon;
    spec.riskless_rates.assign(static_cast<std::size_t>(std::max(horizon, 0)), riskless_rate);
    spec.periods.assign(static_cast<std::size_t>(std::max(horizon, 0)), period);
    return spec;
}

ExcessMoments moments_from_annual_table(const Vector& expected_returns, const Vector& volatilities,
                                        const Matrix& correlation, double riskless_return) {
    const Eigen::Index n = expected_returns.size();
    if (volatilities.size() != n || correlation.rows() != n || correlation.cols() != n)
        throw DimensionMismatch("annual table: inconsistent dimensions");
    ExcessMoments m;
    m.mean = expected_returns.array() - riskless_return;
    m.covariance = correlation.array() * (volatilities * volatilities.transpose()).array();
    return m;
}

Market::Market(MarketSpec spec) : spec_(std::move(spec)) {
    const int T = spec_.horizon;
    if (T < 1) throw InvalidMarket(-1, "horizon must be at least 1");
    if (spec_.riskless_rates.size() != static_cast<std::size_t>(T))
        throw InvalidMarket(-1, "expected " + std::to_string(T) + " riskless rates");
    if (spec_.periods.size() != static_cast<std::size_t>(T))
        throw InvalidMarket(-1, "expected " + std::to_string(T) + " period distributions");

    dimension_ = spec_.periods.front().dimension();
    if (spec_.periods.front().family == Family::discrete && !spec_.periods.front().atoms.empty())
        dimension_ = spec_.periods.front().atoms.front().value.size();
    if (dimension_ < 1) throw InvalidMarket(0, "at least one risky asset is required");

    cache_.resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        const double s = spec_.riskless_rates[static_cast<std::size_t>(t)];
        if (!(s > 0.0) || !std::isfinite(s)) throw InvalidMarket(t, "riskless rate must be positive");

        PeriodDistribution& p = spec_.periods[static_cast<std::size_t>(t)];
        PeriodCache& c = cache_[static_cast<std::size_t>(t)];
        const Eigen::Index n = dimension_;

        if (p.family == Family::discrete) {
            if (p.atoms.empty()) throw InvalidMarket(t, "discrete distribution has no atoms");
            double total = 0.0;
            for (const Atom& a : p.atoms) {
                if (a.value.size() != n) throw InvalidMarket(t, "atom dimension mismatch");
                if (!(a.probability > 0.0)) throw InvalidMarket(t, "atom probabilities must be positive");
                total += a.probability;
            }
            if (std::abs(total - 1.0) > kProbabilitySumTol)
                throw InvalidMarket(t, "atom probabilities must sum to 1");
            Vector mean;
            Matrix cov;
            atom_moments(p.atoms, mean, cov);
            if (p.mean.size() == 0) p.mean = mean;
            if (p.covariance.size() == 0) p.covariance = cov;
            if (p.mean.size() != n || (p.mean - mean).cwiseAbs().maxCoeff() > kAtomMomentTol)
                throw InvalidMarket(t, "declared mean differs from atom-weighted mean");
            if (p.covariance.rows() != n || p.covariance.cols() != n ||
                (p.covariance - cov).cwiseAbs().maxCoeff() > kAtomMomentTol)
                throw InvalidMarket(t, "declared covariance differs from atom-weighted covariance");
            c.cumulative.reserve(p.atoms.size());
            double acc = 0.0;
            for (const Atom& a : p.atoms) c.cumulative.push_back(acc += a.probability);
        } else {
            if (p.mean.size() != n) throw InvalidMarket(t, "mean dimension mismatch");
            if (p.covariance.rows() != n || p.covariance.cols() != n)
                throw InvalidMarket(t, "covariance must be " + std::to_string(n) + "x" + std::to_string(n));
            if (p.family == Family::student_t && p.df <= 2)
                throw InvalidMarket(t, "student_t degrees of freedom must exceed 2");
        }
        if (!p.mean.allFinite() || !p.covariance.allFinite())
            throw InvalidMarket(t, "moments must be finite");
        if (!is_symmetric(p.covariance)) throw InvalidMarket(t, "covariance is not symmetric");
        if (!is_positive_definite(p.covariance))
            throw InvalidMarket(t, "covariance is not positive definite");

        c.second_moment = p.covariance + p.mean * p.mean.transpose();
        Eigen::LLT<Matrix> llt(c.second_moment);
        if (llt.info() != Eigen::Success || !is_positive_definite(c.second_moment))
            throw InvalidMarket(t, "second moment E[PP'] is not positive definite");
        c.direction = llt.solve(p.mean);
        c.sharpe = p.mean.dot(c.direction);
        if (!(1.0 - c.sharpe > 0.0)) throw InvalidMarket(t, "1 - E[P]'E^-1[PP']E[P] must be positive");

        if (p.family != Family::discrete) {
            Eigen::LLT<Matrix> chol(p.covariance);
            c.sampling_factor = chol.matrixL();
        }
    }

    rho_.assign(static_cast<std::size_t>(T) + 1, 1.0);
    for (int t = T - 1; t >= 0; --t)
        rho_[static_cast<std::size_t>(t)] = spec_.riskless_rates[static_cast<std::size_t>(t)] * rho_[static_cast<std::size_t>(t) + 1];
}

double Market::rho(int t) const {
    if (t < 0 || t > horizon()) throw std::out_of_range("rho: period out of range");
    return rho_[static_cast<std::size_t>(t)];
}

bool Market::all_discrete() const noexcept {
    return std::all_of(spec_.periods.begin(), spec_.periods.end(),
                       [](const PeriodDistribution& p) { return p.family == Family::discrete; });
}

void Market::sample_into(int t, CounterStream& stream, Eigen::Ref<Vector> out) const {
    const PeriodDistribution& p = period(t);
    const PeriodCache& c = cache_[static_cast<std::size_t>(t)];
    if (p.family == Family::discrete) {
        const double u = stream.uniform();
        auto it = std::lower_bound(c.cumulative.begin(), c.cumulative.end(), u,
                                   [](double cum, double v) { return cum <= v; });
        std::size_t idx = static_cast<std::size_t>(it - c.cumulative.begin());
        if (idx >= p.atoms.size()) idx = p.atoms.size() - 1;
        out = p.atoms[idx].value;
        return;
    }
    std::normal_distribution<double> normal;
    Vector z(dimension_);
    for (Eigen::Index i = 0; i < dimension_; ++i) z[i] = normal(stream);
    if (p.family == Family::student_t) {
        std::chi_squared_distribution<double> chi2(static_cast<double>(p.df));
        const double w = chi2(stream);
        z *= std::sqrt((p.df - 2.0) / w);
    }
    out.noalias() = p.mean + c.sampling_factor.triangularView<Eigen::Lower>() * z;
}

Vector Market::sample(int t, CounterStream& stream) const {
    Vector out(dimension_);
    sample_into(t, stream, out);
    return out;
}

Market validate(MarketSpec spec) { return Market(std::move(spec)); }

Vector sample_period(const Market& market, int t, std::uint64_t seed, std::uint64_t path) {
    if (t < 0 || t >= market.horizon()) throw std::out_of_range("sample_period: period out of range");
    CounterStream stream(seed, path, static_cast<std::uint32_t>(t), StreamDomain::simulation);
    return market.sample(t, stream);
}

double rho(const Market& market, int t) { return market.rho(t); }

std::vector<ScenarioPath> enumerate_paths(const Market& market, std::size_t max_paths) {
    if (!market.all_discrete()) throw BackendMismatch("scenario enumeration requires discrete periods");
    std::size_t leaves = 1;
    for (int t = 0; t < market.horizon(); ++t) {
        leaves *= market.period(t).atoms.size();
        if (leaves > max_paths) throw Error("scenario tree too large to enumerate");
    }
    std::vector<ScenarioPath> paths(1);
    for (int t = 0; t < market.horizon(); ++t) {
        const auto& atoms = market.period(t).atoms;
        std::vector<ScenarioPath> next;
        next.reserve(paths.size() * atoms.size());
        for (const ScenarioPath& p : paths) {
            for (std::size_t a = 0; a < atoms.size(); ++a) {
                ScenarioPath q = p;
                q.atoms.push_back(a);
                q.probability *= atoms[a].probability;
                next.push_back(std::move(q));
            }
        }
        paths = std::move(next);
    }
    return paths;
}

}  // namespace mvcone
