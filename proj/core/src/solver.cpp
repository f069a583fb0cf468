#include "mvcone/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "mvcone/errors.hpp"
#include "mvcone/random.hpp"

namespace mvcone {

namespace {

constexpr Eigen::Index kBlock = 8192;

double sigma(Sign sign) { return sign == Sign::plus ? 1.0 : -1.0; }

Vector direction_from(const ScenarioSet& s) {
    return s.second_moment().ldlt().solve(s.mean());
}

// Moment-matches `draws` in place so that their equal-weight mean and
// covariance equal (mean, cov).
void match_moments(RowMatrix& draws, const Vector& mean, const Matrix& cov) {
    const double n = static_cast<double>(draws.rows());
    const Eigen::RowVectorXd sample_mean = draws.colwise().mean();
    draws.rowwise() -= sample_mean;
    const Matrix sample_cov = (draws.transpose() * draws) / n;
    const Matrix target = Eigen::LLT<Matrix>(cov).matrixL();
    const Eigen::LLT<Matrix> llt(sample_cov);
    if (llt.info() != Eigen::Success) throw Error("saa: sample covariance is singular");
    const Matrix lhat = llt.matrixL();
    // x -> L Lhat^{-1} x, written for row vectors.
    const Matrix map = (target * lhat.triangularView<Eigen::Lower>().solve(Matrix::Identity(cov.rows(), cov.cols())))
                           .transpose();
    for (Eigen::Index start = 0; start < draws.rows(); start += kBlock) {
        const Eigen::Index len = std::min(kBlock, draws.rows() - start);
        draws.middleRows(start, len) = draws.middleRows(start, len) * map;
    }
    draws.rowwise() += mean.transpose();
}

// The cone seen by z = L'u.
ConvexCone transformed_cone(const ConvexCone& cone, const Matrix& lower) {
    const Eigen::Index n = cone.dimension();
    switch (cone.kind()) {
        case ConvexCone::Kind::whole_space:
            return ConvexCone::whole_space(n);
        case ConvexCone::Kind::half_space:
            return ConvexCone::half_space(lower.triangularView<Eigen::Lower>().solve(cone.normal()));
        default: {
            // A L^{-T}: solve L X = A' and transpose.
            const Matrix x = lower.triangularView<Eigen::Lower>().solve(cone.rows().transpose());
            return ConvexCone::polyhedral(x.transpose());
        }
    }
}

struct Objective {
    const ScenarioSet& scenarios;
    Sign sign;
    NextCosts next;
    HEvaluation operator()(const Vector& k, unsigned parts) const {
        return evaluate_h(scenarios, sign, k, next, parts);
    }
};

}  // namespace

std::string to_string(Sign sign) { return sign == Sign::plus ? "plus" : "minus"; }

std::string to_string(Optimizer optimizer) {
    return optimizer == Optimizer::penalty ? "penalty" : "projected_gradient";
}

Optimizer optimizer_from_string(const std::string& name) {
    if (name == "projected_gradient") return Optimizer::projected_gradient;
    if (name == "penalty") return Optimizer::penalty;
    throw ConfigError("unknown optimizer '" + name + "'");
}

Vector ScenarioSet::mean() const {
    if (weights.size() == 0) return returns.colwise().mean().transpose();
    return returns.transpose() * weights;
}

Matrix ScenarioSet::second_moment() const {
    if (weights.size() == 0) return (returns.transpose() * returns) / static_cast<double>(returns.rows());
    return returns.transpose() * weights.asDiagonal() * returns;
}

ExpectationBackend ExpectationBackend::exact(const Market& market) {
    if (!market.all_discrete())
        throw BackendMismatch("exact backend requires every period to be discrete");
    ExpectationBackend backend;
    backend.mode_ = Mode::exact_discrete;
    backend.dimension_ = market.dimension();
    for (int t = 0; t < market.horizon(); ++t) {
        const auto& atoms = market.period(t).atoms;
        ScenarioSet set;
        set.returns.resize(static_cast<Eigen::Index>(atoms.size()), market.dimension());
        set.weights.resize(static_cast<Eigen::Index>(atoms.size()));
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            set.returns.row(static_cast<Eigen::Index>(i)) = atoms[i].value.transpose();
            set.weights[static_cast<Eigen::Index>(i)] = atoms[i].probability;
        }
        backend.periods_.push_back(std::move(set));
    }
    return backend;
}

ExpectationBackend ExpectationBackend::saa(const Market& market, const SaaOptions& opts) {
    if (opts.samples < 2) throw ConfigError("saa needs at least two samples");
    ExpectationBackend backend;
    backend.mode_ = Mode::saa;
    backend.saa_ = opts;
    backend.dimension_ = market.dimension();
    const auto n = static_cast<Eigen::Index>(opts.samples);
    for (int t = 0; t < market.horizon(); ++t) {
        ScenarioSet set;
        set.returns.resize(n, market.dimension());
        Vector draw(market.dimension());
        for (Eigen::Index i = 0; i < n; ++i) {
            CounterStream stream(opts.seed, static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(t),
                                 StreamDomain::saa);
            market.sample_into(t, stream, draw);
            set.returns.row(i) = draw.transpose();
        }
        if (opts.moment_matching && market.period(t).family != Family::discrete)
            match_moments(set.returns, market.period(t).mean, market.period(t).covariance);
        backend.periods_.push_back(std::move(set));
    }
    return backend;
}

std::string ExpectationBackend::describe() const {
    if (mode_ == Mode::exact_discrete) return "exact";
    std::ostringstream os;
    os << "saa(samples=" << saa_.samples << ", seed=" << saa_.seed
       << ", moment_matching=" << (saa_.moment_matching ? "true" : "false") << ")";
    return os.str();
}

HEvaluation evaluate_h(const ScenarioSet& scenarios, Sign sign, const Vector& k, NextCosts next, unsigned parts) {
    const Eigen::Index n = k.size();
    if (scenarios.returns.cols() != n) throw DimensionMismatch("evaluate_h: K has the wrong dimension");
    const double s = sigma(sign);
    const bool uniform = scenarios.weights.size() == 0;
    const Eigen::Index total = scenarios.size();
    const double q = uniform ? 1.0 / static_cast<double>(total) : 0.0;
    const bool want_hessian = parts & kHessian;
    const bool want_gradient = parts & kGradient;

    HEvaluation out;
    if (want_gradient) out.gradient = Vector::Zero(n);
    if (want_hessian) out.hessian = Matrix::Zero(n, n);
    double diff_sum = 0.0, diff_sq = 0.0;

    Vector pk(kBlock), qw(kBlock), r(kBlock);
    for (Eigen::Index start = 0; start < total; start += kBlock) {
        const Eigen::Index len = std::min(kBlock, total - start);
        const auto block = scenarios.returns.middleRows(start, len);
        pk.head(len).noalias() = block * k;
        for (Eigen::Index i = 0; i < len; ++i) {
            const double w = pk[i] <= s ? next.plus : next.minus;
            qw[i] = (uniform ? q : scenarios.weights[start + i]) * w;
            r[i] = 1.0 - s * pk[i];
        }
        const auto qwb = qw.head(len).array();
        const auto rb = r.head(len).array();
        out.value += (qwb * rb * rb).sum();
        out.linear_value += (qwb * rb).sum();
        if (want_gradient) out.gradient.noalias() += block.transpose() * (qwb * rb).matrix();
        if (want_hessian) out.hessian.noalias() += block.transpose() * qw.head(len).asDiagonal() * block;
        if (uniform) {
            for (Eigen::Index i = 0; i < len; ++i) {
                const double dif = (qw[i] / q) * r[i] * (r[i] - 1.0);
                diff_sum += dif;
                diff_sq += dif * dif;
            }
        }
    }
    if (want_gradient) out.gradient *= -2.0 * s;
    if (want_hessian) out.hessian *= 2.0;
    if (uniform && total > 1) {
        const double nn = static_cast<double>(total);
        const double mean = diff_sum / nn;
        const double var = std::max(0.0, (diff_sq - nn * mean * mean) / (nn - 1.0));
        out.difference_std_error = std::sqrt(var / nn);
    }
    return out;
}

double eval_h(const ExpectationBackend& backend, int t, Sign sign, const Vector& k, NextCosts next) {
    return evaluate_h(backend.period(t), sign, k, next, kValue).value;
}

Vector grad_h(const ExpectationBackend& backend, int t, Sign sign, const Vector& k, NextCosts next) {
    return evaluate_h(backend.period(t), sign, k, next, kGradient).gradient;
}

FirstOrderResiduals first_order_residuals(const ConvexCone& cone, const Vector& k, const Vector& gradient,
                                          int vi_directions, const ProjectionOptions& projection) {
    FirstOrderResiduals res;
    res.gradient_norm = gradient.norm();
    res.projected_gradient = (k - cone.project(k - gradient, projection)).norm();
    res.complementarity = std::abs(gradient.dot(k));

    CounterStream stream(0x5eedULL, 0, 0, StreamDomain::diagnostics);
    std::normal_distribution<double> normal;
    const double scale = std::max(1.0, k.norm());
    double worst = 0.0;
    auto probe = [&](const Vector& u) {
        const Vector step = u - k;
        const double len = step.norm();
        if (len < 1e-3 * scale) return;
        worst = std::max(worst, -gradient.dot(step) / len);
    };
    probe(Vector::Zero(k.size()));
    probe(2.0 * k);
    for (int i = 0; i < vi_directions; ++i) {
        Vector v(k.size());
        for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = normal(stream);
        probe(cone.project(k + scale * v, projection));
        probe(cone.project(scale * v, projection));
    }
    res.variational_inequality = worst;
    return res;
}

namespace {

MinimizeResult projected_newton(const Objective& h, const ConvexCone& cone, Vector k, const MinimizeOptions& opts) {
    HEvaluation cur = h(k, kValue | kGradient | kHessian);
    Vector best = k;
    double best_res = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        const double res = (k - cone.project(k - cur.gradient, opts.projection)).norm();
        // Stop at a tenth of the tolerance, or once within it and no longer
        // improving (rounding floor).
        const bool stalled = res <= opts.tol && res >= 0.5 * best_res;
        if (res < best_res) {
            best_res = res;
            best = k;
        }
        if (res <= 1e-1 * opts.tol || stalled) break;

        Vector trial;
        bool accepted = false;
        const Eigen::LLT<Matrix> llt(cur.hessian);
        if (llt.info() == Eigen::Success) {
            const Matrix lower = llt.matrixL();
            const ConvexCone scaled = transformed_cone(cone, lower);
            const Vector z0 = lower.transpose() * k - lower.triangularView<Eigen::Lower>().solve(cur.gradient);
            const Vector z = scaled.project(z0, opts.projection);
            const Vector u = lower.transpose().triangularView<Eigen::Upper>().solve(z);
            const Vector dir = cone.project(u, opts.projection) - k;
            const double slope = cur.gradient.dot(dir);
            if (slope < 0.0) {
                double step = opts.armijo_initial_step;
                for (int ls = 0; ls < 60; ++ls, step *= opts.armijo_shrink) {
                    trial = k + step * dir;
                    const double v = h(trial, kValue).value;
                    if (v <= cur.value + opts.armijo_slope * step * slope) {
                        accepted = true;
                        break;
                    }
                }
            }
        }
        if (!accepted) {
            // Projection arc with the identity metric.
            double step = opts.armijo_initial_step;
            for (int ls = 0; ls < 80; ++ls, step *= opts.armijo_shrink) {
                trial = cone.project(k - step * cur.gradient, opts.projection);
                const double v = h(trial, kValue).value;
                if (v <= cur.value + opts.armijo_slope * cur.gradient.dot(trial - k)) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted || (trial - k).norm() == 0.0) break;
        k = trial;
        cur = h(k, kValue | kGradient | kHessian);
    }
    MinimizeResult out;
    out.k = best;
    out.diagnostics.iterations = iter;
    out.diagnostics.algorithm = "projected_newton";
    return out;
}

MinimizeResult penalty_method(const Objective& h, const ConvexCone& cone, Vector k, const MinimizeOptions& opts) {
    const Matrix& a = cone.rows();
    const Eigen::Index n = k.size();
    int total = 0;
    auto penalized = [&](const Vector& x, double weight, unsigned parts) {
        HEvaluation e = h(x, parts);
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double slack = a.row(i).dot(x);
            if (slack >= 0.0) continue;
            e.value += 0.5 * weight * slack * slack;
            if (parts & kGradient) e.gradient.noalias() += weight * slack * a.row(i).transpose();
            if (parts & kHessian) e.hessian.noalias() += weight * a.row(i).transpose() * a.row(i);
        }
        return e;
    };
    for (double weight = 1.0; weight <= 1e10 * 1.0001; weight *= 10.0) {
        for (int inner = 0; inner < opts.max_iter; ++inner, ++total) {
            const HEvaluation cur = penalized(k, weight, kValue | kGradient | kHessian);
            if (cur.gradient.norm() <= 1e-3 * opts.tol) break;
            const Vector dir = -cur.hessian.ldlt().solve(cur.gradient);
            const double slope = cur.gradient.dot(dir);
            if (!(slope < 0.0)) break;
            double step = opts.armijo_initial_step;
            bool accepted = false;
            Vector trial(n);
            for (int ls = 0; ls < 60; ++ls, step *= opts.armijo_shrink) {
                trial = k + step * dir;
                if (penalized(trial, weight, kValue).value <= cur.value + opts.armijo_slope * step * slope) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            k = trial;
        }
    }
    MinimizeResult out;
    out.k = cone.project(k, opts.projection);
    out.diagnostics.iterations = total;
    out.diagnostics.algorithm = "penalty";
    return out;
}

}  // namespace

MinimizeResult minimize_over_cone(const ScenarioSet& scenarios, Sign sign, const ConvexCone& cone, NextCosts next,
                                  const MinimizeOptions& opts) {
    const Eigen::Index n = scenarios.returns.cols();
    if (cone.dimension() != n) throw DimensionMismatch("minimize_over_cone: cone dimension mismatch");
    if (!(next.plus > 0.0) || !(next.minus > 0.0)) throw Error("minimize_over_cone: next costs must be positive");

    const Objective h{scenarios, sign, next};
    Vector init;
    if (opts.init) {
        if (opts.init->size() != n) throw DimensionMismatch("minimize_over_cone: init has the wrong dimension");
        init = cone.project(*opts.init, opts.projection);
    } else {
        init = cone.project(sigma(sign) * direction_from(scenarios), opts.projection);
    }

    MinimizeResult out;
    if (cone.is_origin_only()) {
        out.k = Vector::Zero(n);
        out.diagnostics.algorithm = "origin_only";
    } else if (opts.optimizer == Optimizer::penalty) {
        out = penalty_method(h, cone, init, opts);
    } else {
        out = projected_newton(h, cone, init, opts);
    }

    const HEvaluation at = h(out.k, kValue | kGradient);
    out.value = at.value;
    out.diagnostics.residuals =
        first_order_residuals(cone, out.k, at.gradient, opts.vi_directions, opts.projection);
    const auto& r = out.diagnostics.residuals;
    if (r.projected_gradient > opts.tol)
        throw NoConvergence("minimize_over_cone(" + to_string(sign) + ", " + out.diagnostics.algorithm + ")",
                            out.diagnostics.iterations, r.projected_gradient, out.k);
    return out;
}

MinimizeResult minimize_over_cone(const ExpectationBackend& backend, int t, Sign sign, const ConvexCone& cone,
                                  NextCosts next, const MinimizeOptions& opts) {
    return minimize_over_cone(backend.period(t), sign, cone, next, opts);
}

RecursionTable::RecursionTable(std::vector<double> riskless_rates, std::vector<PeriodSolution> periods,
                               std::string backend)
    : riskless_rates_(std::move(riskless_rates)), periods_(std::move(periods)), backend_(std::move(backend)) {
    if (riskless_rates_.size() != periods_.size())
        throw DimensionMismatch("recursion table: rates and periods differ in length");
    rho_.assign(riskless_rates_.size() + 1, 1.0);
    for (std::size_t t = riskless_rates_.size(); t-- > 0;) rho_[t] = riskless_rates_[t] * rho_[t + 1];
}

double RecursionTable::c_plus(int t) const { return t == horizon() ? 1.0 : period(t).c_plus; }
double RecursionTable::c_minus(int t) const { return t == horizon() ? 1.0 : period(t).c_minus; }

RecursionTable backward_recursion(const Market& market, std::span<const ConvexCone> cones,
                                  const ExpectationBackend& backend, const RecursionOptions& opts) {
    const int horizon = market.horizon();
    if (static_cast<int>(cones.size()) != horizon)
        throw DimensionMismatch("backward_recursion: need one cone per period");
    if (backend.horizon() != horizon || backend.dimension() != market.dimension())
        throw BackendMismatch("backward_recursion: backend was built for a different market");
    if (backend.mode() == ExpectationBackend::Mode::exact_discrete && !market.all_discrete())
        throw BackendMismatch("backward_recursion: exact backend on a non-discrete market");

    std::vector<PeriodSolution> periods(static_cast<std::size_t>(horizon));
    NextCosts next{1.0, 1.0};
    for (int t = horizon - 1; t >= 0; --t) {
        const ConvexCone& cone = cones[static_cast<std::size_t>(t)];
        if (cone.dimension() != market.dimension())
            throw DimensionMismatch("backward_recursion: cone " + std::to_string(t) + " has the wrong dimension");
        PeriodSolution& sol = periods[static_cast<std::size_t>(t)];
        sol.zero_tol = opts.zero_tol_factor * (1.0 + market.unconstrained_direction(t).norm());
        const ScenarioSet& scenarios = backend.period(t);
        const Eigen::Index n = market.dimension();

        if (cone.is_origin_only()) {
            sol.origin_only_cone = true;
            sol.k_plus = sol.k_minus = Vector::Zero(n);
            sol.c_plus = sol.c_plus_quadratic = next.plus;
            sol.c_minus = sol.c_minus_quadratic = next.minus;
            sol.plus.algorithm = sol.minus.algorithm = "origin_only";
            next = {sol.c_plus, sol.c_minus};
            continue;
        }

        for (Sign sign : {Sign::plus, Sign::minus}) {
            const MinimizeResult res = minimize_over_cone(scenarios, sign, cone, next, opts.minimize);
            Vector k = res.k;
            double lin = 0.0, quad = 0.0, tol = opts.cross_tol_exact;
            if (k.norm() <= sol.zero_tol) {
                k.setZero();
                lin = quad = sign == Sign::plus ? next.plus : next.minus;
            } else {
                const HEvaluation e = evaluate_h(scenarios, sign, k, next, kValue | kLinear);
                lin = e.linear_value;
                quad = e.value;
                if (backend.mode() == ExpectationBackend::Mode::saa)
                    tol = std::max(tol, opts.cross_tol_std_errors * e.difference_std_error);
            }
            if (std::abs(quad - lin) > tol) {
                std::ostringstream os;
                os << "period " << t << " " << to_string(sign) << ": quadratic C = " << quad
                   << " and linear C = " << lin << " differ by more than " << tol;
                throw ConsistencyError(os.str());
            }
            sol.cross_tol = std::max(sol.cross_tol, tol);
            if (sign == Sign::plus) {
                sol.k_plus = k;
                sol.c_plus = lin;
                sol.c_plus_quadratic = quad;
                sol.plus = res.diagnostics;
            } else {
                sol.k_minus = k;
                sol.c_minus = lin;
                sol.c_minus_quadratic = quad;
                sol.minus = res.diagnostics;
            }
        }
        next = {sol.c_plus, sol.c_minus};
    }

    RecursionTable table(market.spec().riskless_rates, std::move(periods), backend.describe());
    const std::string problem = check_table_invariants(table, cones);
    if (!problem.empty()) throw ConsistencyError("recursion table invariant violated: " + problem);
    return table;
}

std::string check_table_invariants(const RecursionTable& table, std::span<const ConvexCone> cones) {
    std::ostringstream os;
    for (int t = 0; t < table.horizon(); ++t) {
        const PeriodSolution& p = table.period(t);
        const double zt = p.zero_tol;
        for (Sign sign : {Sign::plus, Sign::minus}) {
            const bool plus = sign == Sign::plus;
            const double c = plus ? table.c_plus(t) : table.c_minus(t);
            const double c_next = plus ? table.c_plus(t + 1) : table.c_minus(t + 1);
            const Vector& k = plus ? p.k_plus : p.k_minus;
            const char* name = plus ? "+" : "-";
            if (!(c > 0.0)) {
                os << "C_" << t << name << " = " << c << " is not positive";
                return os.str();
            }
            if (c > c_next) {
                os << "C_" << t << name << " = " << c << " exceeds C_" << t + 1 << name << " = " << c_next;
                return os.str();
            }
            const bool zero = k.norm() <= zt;
            if (zero != (c == c_next)) {
                os << "C_" << t << name << " equality with C_" << t + 1 << name << " disagrees with ||K|| = "
                   << k.norm();
                return os.str();
            }
            if (static_cast<std::size_t>(t) < cones.size() &&
                !cones[static_cast<std::size_t>(t)].contains(k, kMembershipTol * std::max(1.0, k.norm()))) {
                os << "K_" << t << name << " lies outside the cone";
                return os.str();
            }
        }
    }
    return {};
}

double value_function(const RecursionTable& table, int t, double y) {
    if (t < 0 || t > table.horizon()) throw std::out_of_range("value_function: t out of range");
    const double c = y <= 0.0 ? table.c_plus(t) : table.c_minus(t);
    const double r = table.rho(t);
    return 0.5 * r * r * c * y * y;
}

double dual_value(const RecursionTable& table, double x0, double d, double mu) {
    const double gap = d - table.rho(0) * x0;
    const double c = mu <= gap ? table.c_plus(0) : table.c_minus(0);
    return c * (gap - mu) * (gap - mu) - mu * mu;
}

}  // namespace mvcone
