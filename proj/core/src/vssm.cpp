#include "mvcone/vssm.hpp"

#include <cmath>
#include <map>

#include "mvcone/errors.hpp"
#include "parallel.hpp"

namespace mvcone {

namespace {

struct Step {
    double b;
    double m;
};

// B_t and m_{t+1} given the sign of the running product before period t.
Step step(const RecursionTable& table, int t, const Vector& p, bool nonnegative) {
    if (nonnegative) {
        const double b = 1.0 - p.dot(table.k_plus(t));
        const double c_next = b >= 0.0 ? table.c_plus(t + 1) : table.c_minus(t + 1);
        return {b, c_next * b / table.c_plus(t)};
    }
    const double b = 1.0 + p.dot(table.k_minus(t));
    const double c_next = b <= 0.0 ? table.c_plus(t + 1) : table.c_minus(t + 1);
    return {b, c_next * b / table.c_minus(t)};
}

double gap_of(const Policy& policy) {
    if (policy.kind() != Policy::Kind::precommitted)
        throw std::logic_error("duality relations hold for the pre-committed policy only");
    return policy.target() - policy.mu_star();
}

}  // namespace

DensityPath density_along_path(const RecursionTable& table, std::span<const Vector> returns, bool with_step_ratios) {
    const int horizon = table.horizon();
    if (static_cast<int>(returns.size()) != horizon)
        throw DimensionMismatch("density_along_path: need one return vector per period");
    DensityPath out;
    out.b_factors.reserve(static_cast<std::size_t>(horizon));
    out.partial_products.reserve(static_cast<std::size_t>(horizon));
    double product = 1.0;
    for (int t = 0; t < horizon; ++t) {
        const Step s = step(table, t, returns[static_cast<std::size_t>(t)], product >= 0.0);
        product *= s.b;
        out.b_factors.push_back(s.b);
        out.partial_products.push_back(product);
        if (with_step_ratios) out.step_ratios.push_back(s.m);
    }
    out.density = product / table.c_plus(0);
    return out;
}

double conditional_expectation(const RecursionTable& table, std::span<const double> b_prefix) {
    const int t = static_cast<int>(b_prefix.size());
    if (t > table.horizon()) throw std::out_of_range("conditional_expectation: prefix longer than the horizon");
    double product = 1.0;
    for (double b : b_prefix) product *= b;
    const double c = product >= 0.0 ? table.c_plus(t) : table.c_minus(t);
    return product * c / table.c_plus(0);
}

SupermartingaleReport supermartingale_check(const RecursionTable& table, const Market& market,
                                            std::span<const ConvexCone> cones, int t, double tol) {
    if (!market.all_discrete())
        throw BackendMismatch("supermartingale_check needs a discrete market; use density_moments instead");
    if (t < 0 || t >= table.horizon()) throw std::out_of_range("supermartingale_check: t out of range");
    if (static_cast<int>(cones.size()) != table.horizon())
        throw DimensionMismatch("supermartingale_check: need one cone per period");

    struct Node {
        double probability = 0.0;
        Vector weighted;
    };
    std::map<std::vector<std::size_t>, Node> nodes;
    std::vector<Vector> returns(static_cast<std::size_t>(table.horizon()));
    for (const ScenarioPath& path : enumerate_paths(market)) {
        for (int s = 0; s < table.horizon(); ++s)
            returns[static_cast<std::size_t>(s)] = market.period(s).atoms[path.atoms[static_cast<std::size_t>(s)]].value;
        const double density = density_along_path(table, returns).density;
        std::vector<std::size_t> key(path.atoms.begin(), path.atoms.begin() + t);
        Node& node = nodes[key];
        if (node.weighted.size() == 0) node.weighted = Vector::Zero(market.dimension());
        node.probability += path.probability;
        node.weighted += path.probability * density * returns[static_cast<std::size_t>(t)];
    }

    SupermartingaleReport report;
    const ConvexCone& cone = cones[static_cast<std::size_t>(t)];
    for (auto& [key, node] : nodes) {
        const Vector v = node.weighted / node.probability;
        ++report.nodes_checked;
        report.max_norm = std::max(report.max_norm, v.norm());
        if (!cone.polar_contains(v, tol)) {
            report.holds = false;
            report.violations.push_back({t, key, v});
        }
    }
    return report;
}

SupermartingaleReport supermartingale_check(const RecursionTable& table, const Market& market,
                                            std::span<const ConvexCone> cones, double tol) {
    SupermartingaleReport all;
    for (int t = 0; t < table.horizon(); ++t) {
        SupermartingaleReport r = supermartingale_check(table, market, cones, t, tol);
        all.holds = all.holds && r.holds;
        all.nodes_checked += r.nodes_checked;
        all.max_norm = std::max(all.max_norm, r.max_norm);
        for (auto& v : r.violations) all.violations.push_back(std::move(v));
    }
    return all;
}

double duality_terminal_wealth(const Policy& policy, const DensityPath& path) {
    const double gap = gap_of(policy);
    const RecursionTable& table = *policy.table();
    return gap - (gap - policy.initial_wealth() * table.rho(0)) * table.c_plus(0) * path.density;
}

double closed_form_wealth(const Policy& policy, const DensityPath& path, int t) {
    const double gap = gap_of(policy);
    const RecursionTable& table = *policy.table();
    if (t < 0 || t > table.horizon()) throw std::out_of_range("closed_form_wealth: t out of range");
    const double product = t == 0 ? 1.0 : path.partial_products[static_cast<std::size_t>(t) - 1];
    const double rho = table.rho(t);
    return gap / rho - (gap - policy.initial_wealth() * table.rho(0)) / rho * product;
}

DensityMoments density_moments(const RecursionTable& table, const Market& market, std::size_t n_paths,
                               std::uint64_t seed, unsigned threads) {
    if (n_paths < 2) throw Error("density_moments needs at least two paths");
    const int horizon = table.horizon();
    const std::size_t block = 1u << 15;
    const std::size_t blocks = (n_paths + block - 1) / block;
    struct Partial {
        double s1 = 0.0, s2 = 0.0, s4 = 0.0;
        std::size_t zeros = 0;
        std::vector<std::size_t> negative;
    };
    std::vector<Partial> partial(blocks);

    detail::for_blocks(n_paths, block, detail::worker_count(threads), [&](std::size_t begin, std::size_t end, std::size_t b) {
        Partial& acc = partial[b];
        acc.negative.assign(static_cast<std::size_t>(horizon) + 1, 0);
        Vector p(market.dimension());
        for (std::size_t path = begin; path < end; ++path) {
            double product = 1.0;
            for (int t = 0; t < horizon; ++t) {
                CounterStream stream(seed, path, static_cast<std::uint32_t>(t));
                market.sample_into(t, stream, p);
                product *= step(table, t, p, product >= 0.0).b;
                if (product < 0.0) ++acc.negative[static_cast<std::size_t>(t) + 1];
            }
            const double d = product / table.c_plus(0);
            acc.s1 += d;
            acc.s2 += d * d;
            acc.s4 += d * d * d * d;
            if (product == 0.0) ++acc.zeros;
        }
    });

    DensityMoments out;
    out.paths = n_paths;
    out.theoretical_second_moment = 1.0 / table.c_plus(0);
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    std::vector<std::size_t> negative(static_cast<std::size_t>(horizon) + 1, 0);
    for (const Partial& acc : partial) {
        s1 += acc.s1;
        s2 += acc.s2;
        s4 += acc.s4;
        out.zero_density_paths += acc.zeros;
        for (std::size_t t = 0; t < negative.size(); ++t) negative[t] += acc.negative[t];
    }
    const double n = static_cast<double>(n_paths);
    out.mean = s1 / n;
    out.second_moment = s2 / n;
    out.mean_std_error = std::sqrt(std::max(0.0, (s2 / n - out.mean * out.mean) / (n - 1.0)));
    out.second_moment_std_error =
        std::sqrt(std::max(0.0, (s4 / n - out.second_moment * out.second_moment) / (n - 1.0)));
    for (std::size_t c : negative) out.negative_fraction.push_back(static_cast<double>(c) / n);
    return out;
}

DensityMoments exact_density_moments(const RecursionTable& table, const Market& market) {
    if (!market.all_discrete()) throw BackendMismatch("exact_density_moments needs a discrete market");
    const int horizon = table.horizon();
    DensityMoments out;
    out.theoretical_second_moment = 1.0 / table.c_plus(0);
    out.negative_fraction.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
    std::vector<Vector> returns(static_cast<std::size_t>(horizon));
    for (const ScenarioPath& path : enumerate_paths(market)) {
        for (int s = 0; s < horizon; ++s)
            returns[static_cast<std::size_t>(s)] = market.period(s).atoms[path.atoms[static_cast<std::size_t>(s)]].value;
        const DensityPath dp = density_along_path(table, returns);
        ++out.paths;
        out.mean += path.probability * dp.density;
        out.second_moment += path.probability * dp.density * dp.density;
        if (dp.density == 0.0) ++out.zero_density_paths;
        for (int s = 0; s < horizon; ++s)
            if (dp.partial_products[static_cast<std::size_t>(s)] < 0.0)
                out.negative_fraction[static_cast<std::size_t>(s) + 1] += path.probability;
    }
    return out;
}

}  // namespace mvcone
