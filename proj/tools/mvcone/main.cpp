// mvcone: solve, simulate and analyze cone-constrained multi-period
// mean-variance problems from a JSON run config.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <mvcone/config.hpp>
#include <mvcone/errors.hpp>
#include <mvcone/policy.hpp>
#include <mvcone/report.hpp>
#include <mvcone/sim.hpp>
#include <mvcone/tcie.hpp>
#include <mvcone/vssm.hpp>

using nlohmann::json;
using namespace mvcone;

namespace {

struct Options {
    std::string config;
    std::string cones;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> paths;
    std::string out;
    std::string format = "json";

    std::optional<double> mean_min, mean_max;
    int points = 50;
    bool lower_branch = false;
    bool from_mean = false;
};

struct Loaded {
    RunConfig cfg;
    std::unique_ptr<Market> market;
};

Loaded load(const Options& o) {
    if (o.config.empty()) throw ConfigError("--config is required");
    Loaded l;
    l.cfg = load_run_config(o.config);
    if (o.seed) {
        l.cfg.numerics.saa.seed = *o.seed;
        l.cfg.simulation.seed = *o.seed;
    }
    if (o.samples) l.cfg.numerics.saa.samples = *o.samples;
    if (o.paths) l.cfg.simulation.paths = *o.paths;
    l.market = std::make_unique<Market>(validate(l.cfg.market));
    if (!o.cones.empty()) {
        std::ifstream in(o.cones);
        if (!in) throw ConfigError("cannot open cones file '" + o.cones + "'");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("cones file is not valid JSON: ") + e.what());
        }
        if (j.is_object() && j.contains("cones")) j = j.at("cones");
        l.cfg.cones = cones_from_json(j, l.market->horizon(), l.market->dimension());
    }
    return l;
}

std::shared_ptr<const RecursionTable> solve(const Loaded& l, std::optional<ExpectationBackend>* keep = nullptr) {
    ExpectationBackend backend = make_backend(*l.market, l.cfg.numerics);
    auto table = std::make_shared<const RecursionTable>(
        backward_recursion(*l.market, l.cfg.cones, backend, l.cfg.numerics.recursion));
    if (keep) keep->emplace(std::move(backend));
    return table;
}

void emit(const Options& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(o.out);
    if (!out) throw Error("cannot write '" + o.out + "'");
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

void cmd_solve(const Options& o) {
    const Loaded l = load(o);
    emit(o, to_json(*solve(l)).dump(2));
}

void cmd_frontier(const Options& o) {
    const Loaded l = load(o);
    const auto table = solve(l);
    const TimeConsistentAux aux = time_consistent_aux(*l.market);
    const double base = table->rho(0) * l.cfg.policy.x0;
    const double lo = o.mean_min.value_or(o.lower_branch ? 2.0 * base - l.cfg.policy.d : base);
    const double hi = o.mean_max.value_or(l.cfg.policy.d);
    if (o.points < 1) throw ConfigError("--points must be positive");
    if (hi < lo) throw ConfigError("--mean-max is below --mean-min");

    struct Row {
        double mean;
        std::optional<double> pre, tc;
    };
    std::vector<Row> rows;
    for (int i = 0; i < o.points; ++i) {
        const double mean = o.points == 1 ? lo : lo + (hi - lo) * i / (o.points - 1);
        if (mean < base && !o.lower_branch) continue;
        Row r{mean, {}, {}};
        try {
            r.pre = frontier_point(*table, l.cfg.policy.x0, mean).variance;
        } catch (const TargetUnattainable&) {
        }
        if (mean >= base) r.tc = tc_frontier_point(aux, l.cfg.policy.x0, mean);
        rows.push_back(r);
    }

    if (o.format == "json") {
        json arr = json::array();
        for (const Row& r : rows)
            arr.push_back({{"mean", r.mean},
                           {"var_precommitted", r.pre ? json(*r.pre) : json(nullptr)},
                           {"var_time_consistent", r.tc ? json(*r.tc) : json(nullptr)}});
        emit(o, json{{"x0", l.cfg.policy.x0}, {"rho0_x0", base}, {"rows", arr}}.dump(2));
        return;
    }
    std::ostringstream os;
    os << "mean,var_precommitted,var_time_consistent\n";
    for (const Row& r : rows)
        os << fmt(r.mean) << ',' << (r.pre ? fmt(*r.pre) : "NA") << ',' << (r.tc ? fmt(*r.tc) : "NA") << '\n';
    emit(o, os.str());
}

Policy make_policy(const Loaded& l, const std::shared_ptr<const RecursionTable>& table) {
    const PolicyConfig& p = l.cfg.policy;
    switch (p.kind) {
        case Policy::Kind::time_consistent:
            return Policy::time_consistent(std::make_shared<const TimeConsistentAux>(time_consistent_aux(*l.market)),
                                           p.x0, p.d);
        case Policy::Kind::minimum_variance:
            return Policy::minimum_variance(table, p.x0);
        default:
            return Policy::precommitted(table, p.x0, p.d);
    }
}

void cmd_simulate(const Options& o) {
    const Loaded l = load(o);
    const auto table = solve(l);
    const Policy policy = make_policy(l, table);
    const PathEnsemble ens = simulate(policy, *l.market, l.cfg.simulation.paths, l.cfg.simulation.seed, {false, 0});
    std::optional<Exceedance> ex;
    if (!ens.thresholds().empty()) ex = exceedance_prob(ens);

    if (o.format == "csv") {
        if (!ex) throw ConfigError("csv output lists exceedance frequencies and needs a pre-committed policy");
        std::ostringstream os;
        os << "t,threshold,above,first_crossing\n";
        for (int t = 0; t <= ens.horizon(); ++t)
            os << t << ',' << fmt(ens.thresholds()[static_cast<std::size_t>(t)]) << ','
               << fmt(ex->per_period[static_cast<std::size_t>(t)]) << ','
               << fmt(ex->first_crossing[static_cast<std::size_t>(t)]) << '\n';
        emit(o, os.str());
        return;
    }
    json out = {{"policy", policy.name()},
                {"paths", ens.size()},
                {"seed", ens.seed()},
                {"x0", l.cfg.policy.x0},
                {"d", policy.target()},
                {"terminal", to_json(terminal_stats(ens))}};
    if (policy.kind() == Policy::Kind::precommitted) {
        out["mu_star"] = policy.mu_star();
        out["frontier_variance"] = frontier_point(*table, l.cfg.policy.x0, policy.target()).variance;
        out["thresholds"] = ens.thresholds();
        out["exceedance"] = to_json(*ex);
    } else if (policy.kind() == Policy::Kind::time_consistent) {
        out["frontier_variance"] = tc_frontier_point(*policy.aux(), l.cfg.policy.x0, policy.target());
    }
    emit(o, out.dump(2));
}

void cmd_tcie(const Options& o) {
    const Loaded l = load(o);
    std::optional<ExpectationBackend> backend;
    const auto table = solve(l, &backend);
    json out = to_json(check_tcie(*table, *l.market, &*backend));
    json probs = json::array();
    for (int t = 0; t < table->horizon(); ++t) {
        json p = to_json(transition_probs(*table, *l.market, t, *backend));
        p["t"] = t;
        probs.push_back(p);
    }
    out["transition_probs"] = probs;
    emit(o, out.dump(2));
}

void cmd_vssm(const Options& o) {
    const Loaded l = load(o);
    const auto table = solve(l);
    json out = to_json(density_moments(*table, *l.market, l.cfg.simulation.paths, l.cfg.simulation.seed));
    if (l.market->all_discrete()) {
        json exact = to_json(exact_density_moments(*table, *l.market));
        exact.erase("mean_std_error");
        exact.erase("second_moment_std_error");
        out["exact"] = exact;
        const SupermartingaleReport r = supermartingale_check(*table, *l.market, l.cfg.cones);
        out["supermartingale"] = {{"holds", r.holds}, {"nodes_checked", r.nodes_checked},
                                  {"violations", r.violations.size()}};
    }
    emit(o, out.dump(2));
}

void cmd_make_cone(const Options& o) {
    if (!o.from_mean) throw ConfigError("make-cone needs --from-mean");
    const Loaded l = load(o);
    json cones = json::array();
    bool same = true;
    for (int t = 0; t < l.market->horizon(); ++t) {
        cones.push_back(cone_to_json(construct_tcie_cone(l.market->period(t).mean)));
        same = same && cones[static_cast<std::size_t>(t)] == cones[0];
    }
    emit(o, json{{"cones", same ? cones[0] : cones}}.dump(2));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-period mean-variance portfolio selection under cone constraints"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Run config (JSON)")->required();
        sub->add_option("--cones", o.cones, "Cone section override (JSON file)");
        sub->add_option("--seed", o.seed, "Seed for the SAA sample set and the simulation");
        sub->add_option("--samples", o.samples, "SAA sample count");
        sub->add_option("--paths", o.paths, "Monte Carlo path count");
        sub->add_option("--out", o.out, "Write output here instead of stdout");
        sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    };

    auto* solve_cmd = app.add_subcommand("solve", "Backward recursion; prints the K/C table");
    common(solve_cmd);
    auto* frontier_cmd = app.add_subcommand("frontier", "Pre-committed and time-consistent frontiers");
    common(frontier_cmd);
    frontier_cmd->add_option("--mean-min", o.mean_min, "Smallest expected terminal wealth");
    frontier_cmd->add_option("--mean-max", o.mean_max, "Largest expected terminal wealth (default: policy d)");
    frontier_cmd->add_option("--points", o.points, "Number of grid points");
    frontier_cmd->add_flag("--include-lower-branch", o.lower_branch, "Also list means below rho_0 x0");
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo wealth paths of the configured policy");
    common(sim_cmd);
    auto* tcie_cmd = app.add_subcommand("tcie", "Time consistency in efficiency verdict");
    common(tcie_cmd);
    auto* vssm_cmd = app.add_subcommand("vssm", "Signed supermartingale density moments");
    common(vssm_cmd);
    auto* cone_cmd = app.add_subcommand("make-cone", "Cone whose dual contains the mean excess return");
    common(cone_cmd);
    cone_cmd->add_flag("--from-mean", o.from_mean, "Build the half-space from E[P_t]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (frontier_cmd->parsed() && frontier_cmd->count("--format") == 0) o.format = "csv";

    try {
        if (solve_cmd->parsed()) cmd_solve(o);
        else if (frontier_cmd->parsed()) cmd_frontier(o);
        else if (sim_cmd->parsed()) cmd_simulate(o);
        else if (tcie_cmd->parsed()) cmd_tcie(o);
        else if (vssm_cmd->parsed()) cmd_vssm(o);
        else if (cone_cmd->parsed()) cmd_make_cone(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidMarket& e) {
        std::cerr << "InvalidMarket: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
