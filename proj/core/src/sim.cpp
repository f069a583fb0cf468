#include "mvcone/sim.hpp"

#include <cmath>
#include <limits>

#include "mvcone/errors.hpp"
#include "parallel.hpp"

namespace mvcone {

namespace {

constexpr std::size_t kPathBlock = 1u << 14;

}  // namespace

Eigen::Map<const Vector> PathEnsemble::returns(std::size_t i, int t) const {
    if (returns_.empty()) throw std::logic_error("ensemble was simulated without keeping returns");
    const std::size_t offset = (i * static_cast<std::size_t>(horizon_) + static_cast<std::size_t>(t)) *
                               static_cast<std::size_t>(dimension_);
    return Eigen::Map<const Vector>(returns_.data() + offset, dimension_);
}

bool PathEnsemble::above(std::size_t i, int t) const {
    if (thresholds_.empty()) return false;
    return wealth(i, t) > thresholds_[static_cast<std::size_t>(t)];
}

PathEnsemble simulate(const Policy& policy, const Market& market, std::size_t n_paths, std::uint64_t seed,
                      const SimulationOptions& opts) {
    if (policy.horizon() != market.horizon() || policy.dimension() != market.dimension())
        throw DimensionMismatch("simulate: policy and market disagree on horizon or dimension");
    PathEnsemble e;
    e.n_paths_ = n_paths;
    e.seed_ = seed;
    e.horizon_ = market.horizon();
    e.dimension_ = market.dimension();
    e.start_ = policy.start();
    e.policy_name_ = policy.name();
    e.wealth_.assign(n_paths * e.stride(), std::numeric_limits<double>::quiet_NaN());
    if (opts.keep_returns)
        e.returns_.assign(n_paths * static_cast<std::size_t>(e.horizon_) * static_cast<std::size_t>(e.dimension_), 0.0);
    if (policy.kind() == Policy::Kind::precommitted || policy.kind() == Policy::Kind::truncated)
        for (int t = 0; t <= e.horizon_; ++t) e.thresholds_.push_back(policy.threshold(t));

    const int horizon = e.horizon_;
    const Eigen::Index n = e.dimension_;
    detail::for_blocks(n_paths, kPathBlock, detail::worker_count(opts.threads), [&](std::size_t begin, std::size_t end, std::size_t) {
        Vector p(n);
        for (std::size_t i = begin; i < end; ++i) {
            double* w = e.wealth_.data() + i * e.stride();
            double x = policy.initial_wealth();
            w[e.start_] = x;
            for (int t = e.start_; t < horizon; ++t) {
                CounterStream stream(seed, i, static_cast<std::uint32_t>(t));
                market.sample_into(t, stream, p);
                if (opts.keep_returns)
                    std::copy(p.data(), p.data() + n,
                              e.returns_.data() + (i * static_cast<std::size_t>(horizon) + static_cast<std::size_t>(t)) *
                                                      static_cast<std::size_t>(n));
                x = market.riskless_rate(t) * x + p.dot(policy.control(t, x));
                w[t + 1] = x;
            }
        }
    });
    return e;
}

Exceedance exceedance_prob(const PathEnsemble& ensemble, const std::vector<double>& thresholds) {
    const int horizon = ensemble.horizon();
    if (static_cast<int>(thresholds.size()) < horizon)
        throw DimensionMismatch("exceedance_prob: need thresholds for t = 0 .. T-1");
    Exceedance out;
    out.first_crossing.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
    out.per_period.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
    std::vector<std::size_t> first(static_cast<std::size_t>(horizon) + 1, 0), above(first);
    std::size_t any = 0;
    const int from = std::max(1, ensemble.start() + 1);
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        bool crossed = false;
        for (int t = from; t < horizon; ++t) {
            if (!(ensemble.wealth(i, t) > thresholds[static_cast<std::size_t>(t)])) continue;
            ++above[static_cast<std::size_t>(t)];
            if (!crossed) {
                crossed = true;
                ++first[static_cast<std::size_t>(t)];
            }
        }
        if (crossed) ++any;
    }
    const double n = static_cast<double>(ensemble.size());
    out.probability = static_cast<double>(any) / n;
    out.std_error = std::sqrt(out.probability * (1.0 - out.probability) / n);
    for (std::size_t t = 0; t < first.size(); ++t) {
        out.first_crossing[t] = static_cast<double>(first[t]) / n;
        out.per_period[t] = static_cast<double>(above[t]) / n;
    }
    return out;
}

Exceedance exceedance_prob(const PathEnsemble& ensemble) {
    if (ensemble.thresholds().empty())
        throw std::logic_error("exceedance_prob: ensemble policy has no wealth threshold");
    return exceedance_prob(ensemble, ensemble.thresholds());
}

TerminalStats terminal_stats(const PathEnsemble& ensemble) {
    TerminalStats out;
    const std::size_t n = ensemble.size();
    out.paths = n;
    if (n == 0) return out;
    const int T = ensemble.horizon();
    // Accumulate around the first path so a constant ensemble is exact.
    const double shift = ensemble.wealth(0, T);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += ensemble.wealth(i, T) - shift;
    const double nn = static_cast<double>(n);
    const double offset = sum / nn;
    out.mean = shift + offset;
    double m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = (ensemble.wealth(i, T) - shift) - offset;
        m2 += c * c;
        m4 += c * c * c * c;
    }
    if (n < 2) return out;
    out.variance = m2 / (nn - 1.0);
    out.mean_std_error = std::sqrt(out.variance / nn);
    const double pop2 = m2 / nn;
    out.variance_std_error = std::sqrt(std::max(0.0, (m4 / nn - pop2 * pop2) / nn));
    return out;
}

double replay_max_error(const PathEnsemble& ensemble, const Policy& policy, const Market& market) {
    double worst = 0.0;
    Vector p(ensemble.dimension());
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        for (int t = ensemble.start(); t < ensemble.horizon(); ++t) {
            const double x = ensemble.wealth(i, t);
            p = ensemble.returns(i, t);
            const double next = market.riskless_rate(t) * x + p.dot(policy.control(t, x));
            worst = std::max(worst, std::abs(next - ensemble.wealth(i, t + 1)));
        }
    }
    return worst;
}

}  // namespace mvcone
