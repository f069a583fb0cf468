#include "properties.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <mvcone/policy.hpp>
#include <mvcone/solver.hpp>

#include "oracles.hpp"

namespace props {

using namespace mvcone;

namespace {

struct Instance {
    Market market;
    std::vector<ConvexCone> cones;
};

ConvexCone any_cone(std::mt19937_64& rng, int kind, int n) {
    return kind < 3 ? oracle::random_simple_cone(rng, kind, n) : oracle::random_polyhedral_cone(rng, n, n + 1);
}

Instance random_instance(std::mt19937_64& rng, int i) {
    const int horizon = 2 + i % 2;
    const int n = 1 + (i / 2) % 3;
    Market market = oracle::random_discrete_market(rng, horizon, n, n + 1, n + 3);
    std::vector<ConvexCone> cones;
    for (int t = 0; t < horizon; ++t) cones.push_back(any_cone(rng, (i / 6) % 4, n));
    return {std::move(market), std::move(cones)};
}

void fail(SuiteResult& r, const std::string& what) {
    if (r.failures++ == 0) r.first_failure = what;
}

void record(SuiteResult& r, double violation, double limit, const std::string& what) {
    r.worst = std::max(r.worst, violation);
    if (!(violation <= limit)) fail(r, what + " (" + std::to_string(violation) + ")");
}

// Quadratic and linear forms plus gradient of h over the atoms, written out
// independently of the library.
struct Forms {
    double quadratic = 0.0;
    double linear = 0.0;
    Vector gradient;
};

Forms forms(const PeriodDistribution& period, Sign sign, const Vector& k, double c_plus, double c_minus) {
    const double s = sign == Sign::plus ? 1.0 : -1.0;
    Forms f;
    f.gradient = Vector::Zero(k.size());
    for (const auto& a : period.atoms) {
        const double pk = a.value.dot(k);
        const double w = pk <= s ? c_plus : c_minus;
        const double r = 1.0 - s * pk;
        f.quadratic += a.probability * w * r * r;
        f.linear += a.probability * w * r;
        f.gradient += -2.0 * s * a.probability * w * r * a.value;
    }
    return f;
}

}  // namespace

SuiteResult cost_ordering(std::uint64_t seed, int cases) {
    SuiteResult r{"cost ordering: 0 < C_t <= C_t+1, equality iff K = 0"};
    std::mt19937_64 rng(seed);
    for (int i = 0; i < cases; ++i) {
        const auto inst = random_instance(rng, i);
        const auto table = backward_recursion(inst.market, inst.cones, ExpectationBackend::exact(inst.market));
        ++r.cases;
        for (int t = 0; t < inst.market.horizon(); ++t) {
            for (Sign s : {Sign::plus, Sign::minus}) {
                const double c = s == Sign::plus ? table.c_plus(t) : table.c_minus(t);
                const double next = s == Sign::plus ? table.c_plus(t + 1) : table.c_minus(t + 1);
                const double knorm = (s == Sign::plus ? table.k_plus(t) : table.k_minus(t)).norm();
                std::ostringstream where;
                where << "case " << i << " t=" << t << " " << to_string(s);
                if (!(c > 0.0)) fail(r, where.str() + ": C not positive");
                record(r, std::max(0.0, c - next), 0.0, where.str() + ": C above next");
                const bool zero = knorm <= table.zero_tol(t);
                if (zero != (c == next)) fail(r, where.str() + ": equality does not match K = 0");
            }
        }
    }
    return r;
}

SuiteResult quadratic_equals_linear(std::uint64_t seed, int cases) {
    SuiteResult r{"quadratic and linear forms of C agree at optima"};
    std::mt19937_64 rng(seed + 1);
    for (int i = 0; i < cases; ++i) {
        const auto inst = random_instance(rng, i);
        const auto table = backward_recursion(inst.market, inst.cones, ExpectationBackend::exact(inst.market));
        ++r.cases;
        for (int t = 0; t < inst.market.horizon(); ++t) {
            const auto& period = inst.market.period(t);
            const auto p = forms(period, Sign::plus, table.k_plus(t), table.c_plus(t + 1), table.c_minus(t + 1));
            const auto m = forms(period, Sign::minus, table.k_minus(t), table.c_plus(t + 1), table.c_minus(t + 1));
            record(r, std::abs(p.quadratic - p.linear), 1e-9, "case " + std::to_string(i) + " plus");
            record(r, std::abs(m.quadratic - m.linear), 1e-9, "case " + std::to_string(i) + " minus");
            record(r, std::abs(p.quadratic - table.c_plus(t)), 1e-9, "case " + std::to_string(i) + " C+ value");
            record(r, std::abs(m.quadratic - table.c_minus(t)), 1e-9, "case " + std::to_string(i) + " C- value");
        }
    }
    return r;
}

SuiteResult gradient_finite_difference(std::uint64_t seed, int cases) {
    SuiteResult r{"gradient vs central finite differences"};
    std::mt19937_64 rng(seed + 2);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> c(0.2, 1.0);
    while (r.cases < cases) {
        const int n = 1 + r.cases % 3;
        const Market market = oracle::random_discrete_market(rng, 1, n, n + 1, n + 3);
        const auto backend = ExpectationBackend::exact(market);
        Vector k(n);
        for (int j = 0; j < n; ++j) k[j] = 2.0 * g(rng);
        bool near_kink = false;
        for (const auto& a : market.period(0).atoms) near_kink |= std::abs(std::abs(a.value.dot(k)) - 1.0) < 1e-3;
        if (near_kink) continue;
        const NextCosts next{c(rng), c(rng)};
        for (Sign s : {Sign::plus, Sign::minus}) {
            const Vector fd = oracle::finite_difference(
                [&](const Vector& x) { return eval_h(backend, 0, s, x, next); }, k, 1e-5);
            const Vector an = grad_h(backend, 0, s, k, next);
            record(r, (fd - an).norm() / std::max(1.0, an.norm()), 1e-4, "case " + std::to_string(r.cases));
            const Vector mine = forms(market.period(0), s, k, next.plus, next.minus).gradient;
            record(r, (mine - an).norm() / std::max(1.0, an.norm()), 1e-12, "closed form case " + std::to_string(r.cases));
        }
        ++r.cases;
    }
    return r;
}

SuiteResult first_order_conditions(std::uint64_t seed, int cases) {
    SuiteResult r{"variational inequality and complementarity residuals"};
    std::mt19937_64 rng(seed + 3);
    const double tol = MinimizeOptions{}.tol;
    for (int i = 0; i < cases; ++i) {
        const auto inst = random_instance(rng, i);
        const auto table = backward_recursion(inst.market, inst.cones, ExpectationBackend::exact(inst.market));
        ++r.cases;
        for (int t = 0; t < inst.market.horizon(); ++t) {
            for (Sign s : {Sign::plus, Sign::minus}) {
                const Vector& k = s == Sign::plus ? table.k_plus(t) : table.k_minus(t);
                const Vector grad =
                    forms(inst.market.period(t), s, k, table.c_plus(t + 1), table.c_minus(t + 1)).gradient;
                const auto& cone = inst.cones[static_cast<std::size_t>(t)];
                double vi = 0.0;
                for (int j = 0; j < 64; ++j) {
                    const Vector u = oracle::random_member(rng, cone);
                    const double dist = (u - k).norm();
                    if (dist < 1e-6) continue;
                    vi = std::max(vi, -grad.dot(u - k) / dist);
                }
                // Directions along the cone's own generators: K scaled up/down.
                if (k.norm() > 0.0) vi = std::max(vi, std::abs(grad.dot(k)) / k.norm());
                const std::string where = "case " + std::to_string(i) + " t=" + std::to_string(t) + " " + to_string(s);
                record(r, vi, tol, where + " VI");
                record(r, std::abs(grad.dot(k)), tol, where + " complementarity");
            }
        }
    }
    return r;
}

SuiteResult dual_concavity(std::uint64_t seed, int cases) {
    SuiteResult r{"dual g(mu) peaks at mu* with the frontier variance"};
    std::mt19937_64 rng(seed + 4);
    std::uniform_real_distribution<double> x0s(0.5, 2.0), gaps(-0.3, 0.5);
    while (r.cases < cases) {
        const auto inst = random_instance(rng, r.cases);
        const auto table = backward_recursion(inst.market, inst.cones, ExpectationBackend::exact(inst.market));
        const double x0 = x0s(rng);
        const double d = table.rho(0) * x0 + gaps(rng);
        const double c = d >= table.rho(0) * x0 ? table.c_plus(0) : table.c_minus(0);
        if (c == 1.0) continue;
        const double mu = mu_star(table, x0, d);
        const double top = dual_value(table, x0, d, mu);
        const double var = frontier_point(table, x0, d).variance;
        const std::string where = "case " + std::to_string(r.cases);
        record(r, std::abs(top - var), 1e-10 * std::max(1.0, var), where + " g(mu*) != frontier");
        for (double delta : {1e-3, 1e-2, 1e-1}) {
            const double lo = dual_value(table, x0, d, mu - delta);
            const double hi = dual_value(table, x0, d, mu + delta);
            record(r, std::max(0.0, std::max(lo, hi) - top), 0.0, where + " probe above g(mu*)");
            record(r, std::max(0.0, 0.5 * (lo + hi) - top), 0.0, where + " midpoint concavity");
            if (!(lo < top && hi < top)) fail(r, where + " not strictly below");
        }
        ++r.cases;
    }
    return r;
}

SuiteResult projection(std::uint64_t seed, int cases) {
    SuiteResult r{"projection idempotence and optimality"};
    std::mt19937_64 rng(seed + 5);
    std::normal_distribution<double> g;
    for (int i = 0; i < cases; ++i) {
        const int n = 2 + i % 3;
        const ConvexCone cone = any_cone(rng, i % 4, n);
        Vector v(n);
        for (int j = 0; j < n; ++j) v[j] = 3.0 * g(rng);
        ++r.cases;
        for (auto method : {ProjectionOptions::Method::dykstra, ProjectionOptions::Method::moreau_nnls}) {
            ProjectionOptions opts;
            opts.method = method;
            const Vector p = cone.project(v, opts);
            const std::string where = "case " + std::to_string(i) + (method == ProjectionOptions::Method::dykstra ? " dykstra" : " moreau");
            const double scale = std::max(1.0, v.norm());
            if (!cone.contains(p, 1e-9 * scale)) fail(r, where + ": result outside the cone");
            record(r, (cone.project(p, opts) - p).norm(), 1e-10 * scale, where + " idempotence");
            record(r, std::abs((v - p).dot(p)), 1e-8 * scale * scale, where + " orthogonality");
            for (int j = 0; j < 50; ++j) {
                const Vector u = oracle::random_member(rng, cone);
                record(r, std::max(0.0, (v - p).dot(u - p)), 1e-8 * scale * std::max(1.0, u.norm()), where + " obtuse angle");
            }
            if (cone.kind() != ConvexCone::Kind::polyhedral)
                record(r, (p - oracle::project_simple(cone, v)).norm(), 1e-12 * scale, where + " closed form");
        }
    }
    return r;
}

SuiteResult cone_scaling(std::uint64_t seed, int cases) {
    SuiteResult r{"cone closure under scaling and addition"};
    std::mt19937_64 rng(seed + 6);
    std::uniform_real_distribution<double> alpha(0.0, 10.0);
    std::normal_distribution<double> g;
    for (int i = 0; i < cases; ++i) {
        const int n = 2 + i % 3;
        const ConvexCone cone = any_cone(rng, i % 4, n);
        const Vector u = oracle::random_member(rng, cone);
        const Vector w = oracle::random_member(rng, cone);
        const double a = alpha(rng);
        ++r.cases;
        const std::string where = "case " + std::to_string(i);
        if (!cone.contains(a * u)) fail(r, where + ": scaled member left the cone");
        if (!cone.contains(u + w)) fail(r, where + ": sum left the cone");
        if (!cone.contains(Vector::Zero(n))) fail(r, where + ": origin missing");
        Vector v(n);
        for (int j = 0; j < n; ++j) v[j] = g(rng);
        ProjectionOptions opts;
        opts.method = ProjectionOptions::Method::moreau_nnls;
        record(r, (cone.project(a * v, opts) - a * cone.project(v, opts)).norm(), 1e-9 * std::max(1.0, a * v.norm()),
               where + " projection homogeneity");
    }
    return r;
}

std::vector<SuiteResult> all_suites(std::uint64_t seed, int cases) {
    return {cost_ordering(seed, cases),        quadratic_equals_linear(seed, cases), gradient_finite_difference(seed, cases),
            first_order_conditions(seed, cases), dual_concavity(seed, cases),     projection(seed, cases),
            cone_scaling(seed, cases)};
}

}  // namespace props
