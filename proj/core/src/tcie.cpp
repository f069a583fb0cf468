#include "mvcone/tcie.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mvcone/errors.hpp"
#include "mvcone/policy.hpp"

namespace mvcone {

std::string to_string(TcieReason reason) {
    switch (reason) {
        case TcieReason::condition_18: return "condition_18";
        case TcieReason::condition_19: return "condition_19";
        case TcieReason::violated: return "violated";
    }
    return "unknown";
}

TcieVerdict check_tcie(const RecursionTable& table, const Market& market, const ExpectationBackend* backend) {
    const int horizon = table.horizon();
    TcieVerdict v;
    for (int t = 0; t < horizon; ++t) {
        TciePeriodDiagnostics d;
        d.t = t;
        const Vector& k = table.k_plus(t);
        const PeriodDistribution& period = market.period(t);
        const bool zero = k.norm() <= table.zero_tol(t);
        if (period.family == Family::discrete) {
            d.ess_sup = -std::numeric_limits<double>::infinity();
            for (const Atom& a : period.atoms) d.ess_sup = std::max(d.ess_sup, a.value.dot(k));
        } else {
            d.ess_sup = zero ? 0.0 : std::numeric_limits<double>::infinity();
        }
        d.can_flip = d.ess_sup > 1.0 + kFlipTol;
        d.sample_max = std::numeric_limits<double>::quiet_NaN();
        if (backend) d.sample_max = (backend->period(t).returns * k).maxCoeff();
        d.c_minus = table.c_minus(t);
        d.k_minus_norm = table.k_minus(t).norm();
        v.periods.push_back(d);
    }

    // A flip in the last period cannot change any conditional expectation
    // before the terminal time.
    for (int t = 0; t + 1 < horizon; ++t) {
        if (v.periods[static_cast<std::size_t>(t)].can_flip) {
            v.flip_period = t;
            break;
        }
    }
    std::ostringstream ev;
    if (!v.flip_period) {
        v.reason = TcieReason::condition_18;
        ev << "P'K+ <= 1 almost surely in every period before the last";
        v.evidence = ev.str();
        return v;
    }
    const int flip = *v.flip_period;
    for (int s = flip + 1; s < horizon; ++s) {
        if (table.k_minus(s).norm() > table.zero_tol(s)) {
            v.is_tcie = false;
            v.reason = TcieReason::violated;
            v.first_period = s;
            ev << "P'K+ > 1 with positive probability at t = " << flip << " and ||K-_" << s
               << "|| = " << table.k_minus(s).norm() << " with C-_" << s << " = " << table.c_minus(s);
            v.evidence = ev.str();
            return v;
        }
    }
    v.reason = TcieReason::condition_19;
    ev << "P'K+ > 1 with positive probability at t = " << flip << " but K- = 0 afterwards";
    v.evidence = ev.str();
    return v;
}

double threshold(const RecursionTable& table, double x0, double d, int t) {
    return (d - mu_star(table, x0, d)) / table.rho(t);
}

TransitionProbs transition_probs(const RecursionTable& table, const Market& market, int t,
                                 const ExpectationBackend& backend) {
    if (t < 0 || t >= table.horizon()) throw std::out_of_range("transition_probs: t out of range");
    TransitionProbs out;
    const Vector& kp = table.k_plus(t);
    const Vector& km = table.k_minus(t);
    const PeriodDistribution& period = market.period(t);
    if (period.family == Family::discrete) {
        for (const Atom& a : period.atoms) {
            if (a.value.dot(kp) <= 1.0) out.plus_stay += a.probability;
            if (a.value.dot(km) <= -1.0) out.minus_cross += a.probability;
        }
        out.plus_cross = 1.0 - out.plus_stay;
        out.minus_stay = 1.0 - out.minus_cross;
        return out;
    }
    const ScenarioSet& s = backend.period(t);
    const Vector pk = s.returns * kp;
    const Vector mk = s.returns * km;
    std::size_t stay = 0, cross = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (pk[i] <= 1.0) ++stay;
        if (mk[i] <= -1.0) ++cross;
    }
    const double n = static_cast<double>(s.size());
    out.exact = false;
    out.plus_stay = static_cast<double>(stay) / n;
    out.plus_cross = 1.0 - out.plus_stay;
    out.minus_cross = static_cast<double>(cross) / n;
    out.minus_stay = 1.0 - out.minus_cross;
    out.plus_std_error = std::sqrt(out.plus_stay * out.plus_cross / n);
    out.minus_std_error = std::sqrt(out.minus_cross * out.minus_stay / n);
    return out;
}

ConditionalCheckReport conditional_consistency_check(const PathEnsemble& ensemble, const RecursionTable& table,
                                                     double d, double mu_star,
                                                     const std::vector<TransitionProbs>& probs, double std_errors,
                                                     std::size_t min_paths) {
    const int horizon = table.horizon();
    if (static_cast<int>(probs.size()) != horizon)
        throw DimensionMismatch("conditional_consistency_check: need transition probabilities for every period");
    const double gap = d - mu_star;
    ConditionalCheckReport report;
    for (int t = ensemble.start(); t < horizon; ++t) {
        std::size_t n_below = 0, n_above = 0, n_at = 0;
        std::size_t below_stay = 0, above_cross = 0, at_stay = 0;
        for (std::size_t i = 0; i < ensemble.size(); ++i) {
            const double now = table.rho(t) * ensemble.wealth(i, t);
            const double next = table.rho(t + 1) * ensemble.wealth(i, t + 1);
            if (gap > now) {
                ++n_below;
                if (gap >= next) ++below_stay;
            } else if (gap < now) {
                ++n_above;
                if (gap >= next) ++above_cross;
            } else {
                ++n_at;
                if (gap == next) ++at_stay;
            }
        }
        const TransitionProbs& p = probs[static_cast<std::size_t>(t)];
        auto add = [&](const char* name, std::size_t count, std::size_t hits, double expected, double extra_se) {
            ConditionalCheckRow row;
            row.t = t;
            row.condition = name;
            row.conditioning_paths = count;
            row.expected = expected;
            if (count >= min_paths && count > 0) {
                const double n = static_cast<double>(count);
                row.evaluated = true;
                row.frequency = static_cast<double>(hits) / n;
                const double binom = std::sqrt(std::max(expected * (1.0 - expected), 1.0 / n) / n);
                row.std_error = std::sqrt(binom * binom + extra_se * extra_se);
                row.passed = std::abs(row.frequency - expected) <= std_errors * row.std_error;
                ++report.evaluated;
                report.passed = report.passed && row.passed;
            }
            report.rows.push_back(row);
        };
        add("below", n_below, below_stay, p.plus_stay, p.plus_std_error);
        add("above", n_above, above_cross, p.minus_cross, p.minus_std_error);
        add("at", n_at, at_stay, 1.0, 0.0);
    }
    if (report.evaluated == 0)
        throw InsufficientConditioningEvents("no conditioning set has at least " + std::to_string(min_paths) +
                                             " paths");
    return report;
}

}  // namespace mvcone
