#include "mvcone/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "mvcone/errors.hpp"

namespace mvcone {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& what) {
    if (!j.is_object()) throw ConfigError(what + " must be an object");
}

void reject_unknown(const json& j, const std::string& what, std::initializer_list<const char*> allowed) {
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : j.items())
        if (!keys.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + what);
}

template <class T>
T get(const json& j, const char* key, const std::string& what) {
    if (!j.contains(key)) throw ConfigError(what + " is missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(what + "." + key + ": " + e.what());
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& what) {
    return j.contains(key) ? get<T>(j, key, what) : fallback;
}

double number(const json& j, const std::string& what) {
    if (!j.is_number()) throw ConfigError(what + " must be a number");
    return j.get<double>();
}

ExcessMoments annual_from_json(const json& j, const std::string& what) {
    require_object(j, what);
    reject_unknown(j, what, {"expected", "volatility", "correlation", "riskless"});
    const Vector er = vector_from_json(get<json>(j, "expected", what), what + ".expected");
    const Vector vol = vector_from_json(get<json>(j, "volatility", what), what + ".volatility");
    const Matrix corr = matrix_from_json(get<json>(j, "correlation", what), what + ".correlation");
    const double rf = number(get<json>(j, "riskless", what), what + ".riskless");
    if (er.size() != vol.size() || corr.rows() != er.size() || corr.cols() != er.size())
        throw ConfigError(what + ": inconsistent dimensions");
    return moments_from_annual_table(er, vol, corr, rf);
}

PeriodDistribution period_from_json(const json& j, const std::string& what) {
    require_object(j, what);
    reject_unknown(j, what, {"family", "df", "mean", "covariance", "atoms", "annual_returns"});
    const Family family = family_from_string(get<std::string>(j, "family", what));
    if (family == Family::discrete) {
        if (j.contains("mean") || j.contains("covariance") || j.contains("annual_returns"))
            throw ConfigError(what + ": discrete periods take their moments from 'atoms'");
        const json atoms = get<json>(j, "atoms", what);
        if (!atoms.is_array() || atoms.empty()) throw ConfigError(what + ".atoms must be a nonempty list");
        std::vector<Atom> list;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const std::string w = what + ".atoms[" + std::to_string(i) + "]";
            require_object(atoms[i], w);
            reject_unknown(atoms[i], w, {"value", "probability"});
            list.push_back({vector_from_json(get<json>(atoms[i], "value", w), w + ".value"),
                            number(get<json>(atoms[i], "probability", w), w + ".probability")});
        }
        const Eigen::Index n = list.front().value.size();
        for (const Atom& a : list)
            if (a.value.size() != n) throw ConfigError(what + ": atoms differ in dimension");
        return PeriodDistribution::discrete(std::move(list));
    }
    if (j.contains("atoms")) throw ConfigError(what + ": 'atoms' is only valid for discrete periods");
    ExcessMoments m;
    if (j.contains("annual_returns")) {
        if (j.contains("mean") || j.contains("covariance"))
            throw ConfigError(what + ": give either 'annual_returns' or 'mean'/'covariance'");
        m = annual_from_json(j.at("annual_returns"), what + ".annual_returns");
    } else {
        m.mean = vector_from_json(get<json>(j, "mean", what), what + ".mean");
        m.covariance = matrix_from_json(get<json>(j, "covariance", what), what + ".covariance");
    }
    if (family == Family::student_t) {
        if (!j.contains("df")) throw ConfigError(what + ": student_t needs 'df'");
        return PeriodDistribution::student_t(m.mean, m.covariance, get<int>(j, "df", what));
    }
    if (j.contains("df")) throw ConfigError(what + ": 'df' is only valid for student_t");
    return PeriodDistribution::gaussian(m.mean, m.covariance);
}

}  // namespace

Vector vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nonempty list of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], what);
    return v;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nonempty list of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw ConfigError(what + " rows must be nonempty lists");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(what + " is not rectangular");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], what);
    }
    return m;
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(Vector(m.row(r).transpose())));
    return rows;
}

MarketSpec market_from_json(const json& j) {
    const std::string what = "market";
    require_object(j, what);
    reject_unknown(j, what,
                   {"horizon", "riskless_rates", "riskless_rate", "family", "df", "mean", "covariance", "atoms",
                    "annual_returns", "periods"});
    MarketSpec spec;
    spec.horizon = get<int>(j, "horizon", what);
    if (spec.horizon < 1) throw ConfigError("market.horizon must be at least 1");
    if (j.contains("riskless_rates") == j.contains("riskless_rate"))
        throw ConfigError("market needs exactly one of 'riskless_rates' and 'riskless_rate'");
    if (j.contains("riskless_rates")) {
        const Vector s = vector_from_json(j.at("riskless_rates"), "market.riskless_rates");
        spec.riskless_rates.assign(s.data(), s.data() + s.size());
    } else {
        spec.riskless_rates.assign(static_cast<std::size_t>(spec.horizon),
                                   number(j.at("riskless_rate"), "market.riskless_rate"));
    }
    if (j.contains("periods")) {
        for (const char* key : {"family", "df", "mean", "covariance", "atoms", "annual_returns"})
            if (j.contains(key)) throw ConfigError(std::string("market: '") + key + "' conflicts with 'periods'");
        const json& periods = j.at("periods");
        if (!periods.is_array()) throw ConfigError("market.periods must be a list");
        for (std::size_t t = 0; t < periods.size(); ++t)
            spec.periods.push_back(period_from_json(periods[t], "market.periods[" + std::to_string(t) + "]"));
    } else {
        json period = json::object();
        for (const char* key : {"family", "df", "mean", "covariance", "atoms", "annual_returns"})
            if (j.contains(key)) period[key] = j.at(key);
        const PeriodDistribution p = period_from_json(period, what);
        spec.periods.assign(static_cast<std::size_t>(spec.horizon), p);
    }
    return spec;
}

ConvexCone cone_from_json(const json& j, Eigen::Index dimension) {
    const std::string what = "cone";
    require_object(j, what);
    reject_unknown(j, what, {"type", "normal", "A"});
    const std::string type = get<std::string>(j, "type", what);
    auto check_dim = [&](Eigen::Index n) {
        if (n != dimension)
            throw ConfigError("cone dimension " + std::to_string(n) + " does not match the market dimension " +
                              std::to_string(dimension));
    };
    try {
        if (type == "whole_space" || type == "orthant") {
            if (j.contains("normal") || j.contains("A")) throw ConfigError(type + " cones take no parameters");
            return type == "whole_space" ? ConvexCone::whole_space(dimension) : ConvexCone::nonneg_orthant(dimension);
        }
        if (type == "half_space") {
            if (j.contains("A")) throw ConfigError("half_space cones take 'normal', not 'A'");
            const Vector normal = vector_from_json(get<json>(j, "normal", what), "cone.normal");
            check_dim(normal.size());
            return ConvexCone::half_space(normal);
        }
        if (type == "polyhedral") {
            if (j.contains("normal")) throw ConfigError("polyhedral cones take 'A', not 'normal'");
            const Matrix a = matrix_from_json(get<json>(j, "A", what), "cone.A");
            check_dim(a.cols());
            return ConvexCone::polyhedral(a);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("cone: ") + e.what());
    }
    throw ConfigError("unknown cone type '" + type + "'");
}

std::vector<ConvexCone> cones_from_json(const json& j, int horizon, Eigen::Index dimension) {
    std::vector<ConvexCone> cones;
    if (j.is_null()) {
        cones.assign(static_cast<std::size_t>(horizon), ConvexCone::whole_space(dimension));
    } else if (j.is_object()) {
        cones.assign(static_cast<std::size_t>(horizon), cone_from_json(j, dimension));
    } else if (j.is_array()) {
        if (static_cast<int>(j.size()) != horizon)
            throw ConfigError("cones list has " + std::to_string(j.size()) + " entries for horizon " +
                              std::to_string(horizon));
        for (const auto& c : j) cones.push_back(cone_from_json(c, dimension));
    } else {
        throw ConfigError("cones must be an object or a list");
    }
    return cones;
}

json cone_to_json(const ConvexCone& cone) {
    switch (cone.kind()) {
        case ConvexCone::Kind::whole_space: return {{"type", "whole_space"}};
        case ConvexCone::Kind::nonneg_orthant: return {{"type", "orthant"}};
        case ConvexCone::Kind::half_space: return {{"type", "half_space"}, {"normal", to_json(cone.normal())}};
        case ConvexCone::Kind::polyhedral: return {{"type", "polyhedral"}, {"A", to_json(cone.rows())}};
    }
    return {};
}

RunConfig parse_run_config(const json& j) {
    require_object(j, "config");
    reject_unknown(j, "config", {"market", "cones", "policy", "numerics", "simulation", "output"});
    RunConfig cfg;
    cfg.market = market_from_json(get<json>(j, "market", "config"));
    const Eigen::Index n = cfg.market.periods.front().dimension();
    cfg.cones = cones_from_json(j.contains("cones") ? j.at("cones") : json(), cfg.market.horizon, n);

    if (j.contains("policy")) {
        const json& p = j.at("policy");
        require_object(p, "policy");
        reject_unknown(p, "policy", {"kind", "x0", "d"});
        const std::string kind = get_or<std::string>(p, "kind", "precommitted", "policy");
        if (kind == "precommitted") cfg.policy.kind = Policy::Kind::precommitted;
        else if (kind == "time_consistent") cfg.policy.kind = Policy::Kind::time_consistent;
        else if (kind == "minimum_variance") cfg.policy.kind = Policy::Kind::minimum_variance;
        else throw ConfigError("unknown policy kind '" + kind + "'");
        cfg.policy.x0 = get_or<double>(p, "x0", cfg.policy.x0, "policy");
        cfg.policy.d = get_or<double>(p, "d", cfg.policy.d, "policy");
    }

    if (j.contains("numerics")) {
        const json& nj = j.at("numerics");
        require_object(nj, "numerics");
        reject_unknown(nj, "numerics",
                       {"backend", "samples", "seed", "moment_matching", "optimizer", "tol", "max_iter"});
        const std::string backend = get_or<std::string>(nj, "backend", "saa", "numerics");
        if (backend == "exact") cfg.numerics.backend = ExpectationBackend::Mode::exact_discrete;
        else if (backend == "saa") cfg.numerics.backend = ExpectationBackend::Mode::saa;
        else throw ConfigError("unknown backend '" + backend + "'");
        cfg.numerics.saa.samples = get_or<std::size_t>(nj, "samples", cfg.numerics.saa.samples, "numerics");
        cfg.numerics.saa.seed = get_or<std::uint64_t>(nj, "seed", cfg.numerics.saa.seed, "numerics");
        cfg.numerics.saa.moment_matching =
            get_or<bool>(nj, "moment_matching", cfg.numerics.saa.moment_matching, "numerics");
        auto& mo = cfg.numerics.recursion.minimize;
        if (nj.contains("optimizer")) mo.optimizer = optimizer_from_string(get<std::string>(nj, "optimizer", "numerics"));
        mo.tol = get_or<double>(nj, "tol", mo.tol, "numerics");
        mo.max_iter = get_or<int>(nj, "max_iter", mo.max_iter, "numerics");
        if (!(mo.tol > 0.0)) throw ConfigError("numerics.tol must be positive");
        if (mo.max_iter < 1) throw ConfigError("numerics.max_iter must be positive");
    } else if (cfg.market.periods.front().family == Family::discrete) {
        cfg.numerics.backend = ExpectationBackend::Mode::exact_discrete;
    }

    if (j.contains("simulation")) {
        const json& s = j.at("simulation");
        require_object(s, "simulation");
        reject_unknown(s, "simulation", {"paths", "seed"});
        cfg.simulation.paths = get_or<std::size_t>(s, "paths", cfg.simulation.paths, "simulation");
        cfg.simulation.seed = get_or<std::uint64_t>(s, "seed", cfg.simulation.seed, "simulation");
    }

    if (j.contains("output")) {
        const json& o = j.at("output");
        require_object(o, "output");
        reject_unknown(o, "output", {"path"});
        cfg.output = get_or<std::string>(o, "path", "", "output");
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(j);
}

ExpectationBackend make_backend(const Market& market, const NumericsConfig& numerics) {
    if (numerics.backend == ExpectationBackend::Mode::exact_discrete) return ExpectationBackend::exact(market);
    return ExpectationBackend::saa(market, numerics.saa);
}

}  // namespace mvcone
