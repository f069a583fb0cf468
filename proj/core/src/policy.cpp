#include "mvcone/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "mvcone/errors.hpp"

namespace mvcone {

namespace {

double shift(double c, double gap, double zero_tol, const char* branch) {
    if (gap == 0.0) return 0.0;
    if (std::abs(1.0 - c) <= zero_tol)
        throw TargetUnattainable(std::string("target is unattainable: C_0") + branch + " equals one");
    return gap / (1.0 - 1.0 / c);
}

}  // namespace

double mu_star(const RecursionTable& table, double x0, double d) {
    const double gap = d - table.rho(0) * x0;
    const double zt = table.horizon() > 0 ? table.zero_tol(0) : 0.0;
    if (gap >= 0.0) return shift(table.c_plus(0), gap, zt, "+");
    return shift(table.c_minus(0), gap, zt, "-");
}

TimeConsistentAux time_consistent_aux(const Market& market) {
    TimeConsistentAux aux;
    const int horizon = market.horizon();
    aux.d_factor.assign(static_cast<std::size_t>(horizon) + 1, 1.0);
    for (int t = 0; t < horizon; ++t) {
        aux.direction.push_back(market.unconstrained_direction(t));
        aux.b.push_back(market.projected_sharpe(t));
    }
    for (int t = horizon - 1; t >= 0; --t) {
        const double b = aux.b[static_cast<std::size_t>(t)];
        aux.d_factor[static_cast<std::size_t>(t)] = aux.d_factor[static_cast<std::size_t>(t) + 1] * (1.0 - b) / b;
    }
    for (int t = 0; t <= horizon; ++t) aux.rho.push_back(market.rho(t));
    return aux;
}

Policy Policy::precommitted(std::shared_ptr<const RecursionTable> table, double x0, double d) {
    Policy p;
    p.kind_ = Kind::precommitted;
    p.mu_ = mvcone::mu_star(*table, x0, d);
    p.table_ = std::move(table);
    p.x0_ = x0;
    p.d_ = d;
    return p;
}

Policy Policy::minimum_variance(std::shared_ptr<const RecursionTable> table, double x0) {
    Policy p;
    p.kind_ = Kind::minimum_variance;
    p.x0_ = x0;
    p.d_ = table->rho(0) * x0;
    p.table_ = std::move(table);
    return p;
}

Policy Policy::time_consistent(std::shared_ptr<const TimeConsistentAux> aux, double x0, double d) {
    Policy p;
    p.kind_ = Kind::time_consistent;
    p.aux_ = std::move(aux);
    p.x0_ = x0;
    p.d_ = d;
    return p;
}

Policy Policy::truncated(std::shared_ptr<const RecursionTable> table, int k, double x_k, double d_k) {
    if (k < 0 || k >= table->horizon()) throw std::out_of_range("truncated policy: k out of range");
    Policy p;
    p.kind_ = Kind::truncated;
    p.start_ = k;
    p.x0_ = x_k;
    p.d_ = d_k;
    const double gap = d_k - table->rho(k) * x_k;
    const double zt = table->zero_tol(k);
    p.mu_ = gap >= 0.0 ? shift(table->c_plus(k), gap, zt, "+") : shift(table->c_minus(k), gap, zt, "-");
    p.table_ = std::move(table);
    return p;
}

std::string to_string(Policy::Kind kind) {
    switch (kind) {
        case Policy::Kind::precommitted: return "precommitted";
        case Policy::Kind::minimum_variance: return "minimum_variance";
        case Policy::Kind::time_consistent: return "time_consistent";
        case Policy::Kind::truncated: return "truncated";
    }
    return "unknown";
}

std::string Policy::name() const {
    if (kind_ == Kind::truncated) return "truncated(k=" + std::to_string(start_) + ")";
    return to_string(kind_);
}

int Policy::horizon() const noexcept { return table_ ? table_->horizon() : aux_->horizon(); }

Eigen::Index Policy::dimension() const noexcept {
    if (table_) return table_->dimension();
    return aux_->direction.empty() ? 0 : aux_->direction.front().size();
}

double Policy::rho(int t) const {
    return table_ ? table_->rho(t) : aux_->rho.at(static_cast<std::size_t>(t));
}

double Policy::riskless_rate(int t) const { return rho(t) / rho(t + 1); }

double Policy::threshold(int t) const {
    if (kind_ != Kind::precommitted && kind_ != Kind::truncated)
        throw std::logic_error("threshold is defined for pre-committed policies only");
    return (d_ - mu_) / table_->rho(t);
}

Vector Policy::control(int t, double x) const {
    if (t < start_ || t >= horizon()) throw std::out_of_range("control: t out of range");
    switch (kind_) {
        case Kind::minimum_variance:
            return Vector::Zero(dimension());
        case Kind::time_consistent: {
            const auto i = static_cast<std::size_t>(t);
            return -aux_->direction[i] * ((x * aux_->rho[i] - d_) / (aux_->b[i] * aux_->rho[i + 1]));
        }
        case Kind::precommitted:
        case Kind::truncated: {
            const double s = riskless_rate(t);
            const double gap = d_ - mu_;
            const double y = gap / table_->rho(t) - x;
            if (gap >= table_->rho(t) * x) return s * y * table_->k_plus(t);
            return -s * y * table_->k_minus(t);
        }
    }
    return Vector::Zero(dimension());
}

FrontierPoint frontier_point(const RecursionTable& table, double x0, double mean) {
    const double gap = mean - table.rho(0) * x0;
    FrontierPoint out;
    out.efficient = gap >= 0.0;
    if (gap == 0.0) return out;
    const double c = out.efficient ? table.c_plus(0) : table.c_minus(0);
    if (std::abs(1.0 - c) <= table.zero_tol(0))
        throw TargetUnattainable(std::string("mean is unattainable: C_0") + (out.efficient ? "+" : "-") +
                                 " equals one");
    out.variance = c * gap * gap / (1.0 - c);
    return out;
}

double tc_frontier_point(const TimeConsistentAux& aux, double x0, double mean) {
    const double gap = mean - x0 * aux.rho.front();
    if (gap < 0.0) throw InvalidTarget("time-consistent frontier is defined for means >= rho_0 x0");
    return gap * gap * aux.d_factor.front();
}

InducedTarget induced_target(const RecursionTable& table, int k, double x_k, double d, double mu_star) {
    if (k < 0 || k >= table.horizon()) throw std::out_of_range("induced_target: k out of range");
    const double gap = d - mu_star;
    const double wealth = table.rho(k) * x_k;
    const double c = gap >= wealth ? table.c_plus(k) : table.c_minus(k);
    InducedTarget out;
    out.d_k = (1.0 - c) * gap + c * wealth;
    out.efficient = out.d_k >= wealth || table.c_minus(k) == 1.0;
    return out;
}

}  // namespace mvcone
