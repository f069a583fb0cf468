#include "mvcone/report.hpp"

#include <cmath>

#include "mvcone/config.hpp"
#include "mvcone/errors.hpp"

namespace mvcone {

using nlohmann::json;

namespace {

// JSON has no infinity or NaN.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const FirstOrderResiduals& r) {
    return {{"projected_gradient", r.projected_gradient},
            {"variational_inequality", r.variational_inequality},
            {"complementarity", r.complementarity},
            {"gradient_norm", r.gradient_norm}};
}

json to_json(const MinimizeDiagnostics& d) {
    return {{"algorithm", d.algorithm}, {"iterations", d.iterations}, {"residuals", to_json(d.residuals)}};
}

MinimizeDiagnostics diagnostics_from_json(const json& j) {
    MinimizeDiagnostics d;
    if (!j.is_object()) return d;
    d.algorithm = j.value("algorithm", "");
    d.iterations = j.value("iterations", 0);
    if (j.contains("residuals")) {
        const json& r = j.at("residuals");
        d.residuals.projected_gradient = r.value("projected_gradient", 0.0);
        d.residuals.variational_inequality = r.value("variational_inequality", 0.0);
        d.residuals.complementarity = r.value("complementarity", 0.0);
        d.residuals.gradient_norm = r.value("gradient_norm", 0.0);
    }
    return d;
}

}  // namespace

json to_json(const RecursionTable& table) {
    json periods = json::array();
    for (int t = 0; t < table.horizon(); ++t) {
        const PeriodSolution& p = table.period(t);
        periods.push_back({{"t", t},
                           {"k_plus", to_json(p.k_plus)},
                           {"k_minus", to_json(p.k_minus)},
                           {"c_plus", p.c_plus},
                           {"c_minus", p.c_minus},
                           {"c_plus_quadratic", p.c_plus_quadratic},
                           {"c_minus_quadratic", p.c_minus_quadratic},
                           {"cross_tol", p.cross_tol},
                           {"zero_tol", p.zero_tol},
                           {"origin_only_cone", p.origin_only_cone},
                           {"plus", to_json(p.plus)},
                           {"minus", to_json(p.minus)}});
    }
    return {{"horizon", table.horizon()},
            {"backend", table.backend()},
            {"riskless_rates", table.riskless_rates()},
            {"terminal", {{"c_plus", 1.0}, {"c_minus", 1.0}}},
            {"periods", periods}};
}

RecursionTable table_from_json(const json& j) {
    try {
        std::vector<PeriodSolution> periods;
        for (const json& p : j.at("periods")) {
            PeriodSolution s;
            s.k_plus = vector_from_json(p.at("k_plus"), "k_plus");
            s.k_minus = vector_from_json(p.at("k_minus"), "k_minus");
            s.c_plus = p.at("c_plus").get<double>();
            s.c_minus = p.at("c_minus").get<double>();
            s.c_plus_quadratic = p.value("c_plus_quadratic", s.c_plus);
            s.c_minus_quadratic = p.value("c_minus_quadratic", s.c_minus);
            s.cross_tol = p.value("cross_tol", 0.0);
            s.zero_tol = p.value("zero_tol", 0.0);
            s.origin_only_cone = p.value("origin_only_cone", false);
            if (p.contains("plus")) s.plus = diagnostics_from_json(p.at("plus"));
            if (p.contains("minus")) s.minus = diagnostics_from_json(p.at("minus"));
            periods.push_back(std::move(s));
        }
        return RecursionTable(j.at("riskless_rates").get<std::vector<double>>(), std::move(periods),
                              j.value("backend", ""));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed recursion table: ") + e.what());
    }
}

json to_json(const TcieVerdict& v) {
    json periods = json::array();
    for (const auto& p : v.periods)
        periods.push_back({{"t", p.t},
                           {"ess_sup_pk_plus", finite_or_null(p.ess_sup)},
                           {"ess_sup_unbounded", std::isinf(p.ess_sup)},
                           {"sample_max_pk_plus", finite_or_null(p.sample_max)},
                           {"can_flip", p.can_flip},
                           {"c_minus", p.c_minus},
                           {"k_minus_norm", p.k_minus_norm}});
    json out = {{"is_tcie", v.is_tcie}, {"reason", to_string(v.reason)}, {"evidence", v.evidence}, {"periods", periods}};
    out["flip_period"] = v.flip_period ? json(*v.flip_period) : json(nullptr);
    out["first_period"] = v.first_period ? json(*v.first_period) : json(nullptr);
    return out;
}

json to_json(const DensityMoments& m) {
    return {{"paths", m.paths},
            {"mean_density", m.mean},
            {"mean_std_error", m.mean_std_error},
            {"second_moment", m.second_moment},
            {"second_moment_std_error", m.second_moment_std_error},
            {"theoretical_second_moment", m.theoretical_second_moment},
            {"zero_density_paths", m.zero_density_paths},
            {"negative_conditional_fraction", m.negative_fraction}};
}

json to_json(const Exceedance& e) {
    return {{"probability", e.probability},
            {"std_error", e.std_error},
            {"first_crossing", e.first_crossing},
            {"above_by_period", e.per_period}};
}

json to_json(const TerminalStats& s) {
    return {{"paths", s.paths},
            {"mean", s.mean},
            {"variance", s.variance},
            {"mean_std_error", s.mean_std_error},
            {"variance_std_error", s.variance_std_error}};
}

json to_json(const TransitionProbs& p) {
    return {{"plus_stay", p.plus_stay},         {"plus_cross", p.plus_cross},
            {"minus_cross", p.minus_cross},     {"minus_stay", p.minus_stay},
            {"plus_std_error", p.plus_std_error}, {"minus_std_error", p.minus_std_error},
            {"exact", p.exact}};
}

json to_json(const ConditionalCheckReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"t", row.t},
                        {"condition", row.condition},
                        {"paths", row.conditioning_paths},
                        {"evaluated", row.evaluated},
                        {"frequency", row.frequency},
                        {"expected", row.expected},
                        {"std_error", row.std_error},
                        {"passed", row.passed}});
    return {{"passed", r.passed}, {"evaluated", r.evaluated}, {"rows", rows}};
}

}  // namespace mvcone
