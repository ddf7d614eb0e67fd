#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "endow_opt/closedform.hpp"
#include "endow_opt/commands.hpp"
#include "endow_opt/rng.hpp"

namespace endow_opt {

using nlohmann::json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string render(const json& doc) { return doc.dump(2) + "\n"; }

// Header shared by every JSON document: enough to rerun bit-identically.
json envelope(const RunConfig& config, const char* command) {
    return {{"command", command}, {"config", to_json(config)}, {"rng_identity", std::string(kRngIdentity)}};
}

ExecutionOptions with_budget(const RunConfig& config, ExecutionOptions exec) {
    exec.memory_budget_bytes = config.memory_budget_bytes;
    return exec;
}

double time_at(double fraction, double horizon) {
    // fraction 1 must land on T exactly
    return fraction >= 1.0 ? horizon : fraction * horizon;
}

struct Moments {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std_dev = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
};

Moments moments(const std::vector<double>& values) {
    Moments m;
    double sum = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += v;
        m.min = m.n == 0 ? v : std::min(m.min, v);
        m.max = m.n == 0 ? v : std::max(m.max, v);
        ++m.n;
    }
    if (m.n == 0) return m;
    m.mean = sum / static_cast<double>(m.n);
    double ss = 0.0;
    for (double v : values)
        if (!std::isnan(v)) ss += (v - m.mean) * (v - m.mean);
    m.std_dev = m.n > 1 ? std::sqrt(ss / static_cast<double>(m.n - 1)) : 0.0;
    return m;
}

}  // namespace

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError: return 3;
        case ErrorCode::Overflow: return 4;
        default: return 1;
    }
}

CommandOutput cmd_price(const RunConfig& config, OutputFormat format) {
    const ProblemSpec spec = config.problem();
    const std::size_t n = config.price.n_points;
    if (n < 2) throw Error(ErrorCode::ConfigError, "config.price.n_points: need at least 2 points");
    const double horizon = spec.horizon();

    std::vector<std::pair<double, double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = i + 1 == n ? horizon : horizon * static_cast<double>(i) / static_cast<double>(n - 1);
        rows.emplace_back(t, endowment_price(spec, t));
    }
    const double p_T = endowment_price(spec, horizon);

    if (format == OutputFormat::Csv) {
        std::string out = "t,P\n";
        for (const auto& [t, p] : rows) out += format_double(t) + "," + format_double(p) + "\n";
        return {out};
    }
    json doc = envelope(config, "price");
    doc["spec"] = to_json(spec);
    doc["endow_price_T"] = p_T;
    json table = json::array();
    for (const auto& [t, p] : rows) table.push_back({{"t", t}, {"P", p}});
    doc["rows"] = table;
    return {render(doc)};
}

CommandOutput cmd_strategy(const RunConfig& config, OutputFormat format) {
    const ProblemSpec spec = config.problem();
    const double pi_m = merton_fraction(spec);
    const double shift = shift_scale(spec);

    struct Row {
        double t, ratio, beta, pi_star;
    };
    std::vector<Row> rows;
    for (double f : config.strategy_table.time_fractions) {
        const double t = time_at(f, spec.horizon());
        const double b = beta(spec, t);
        for (double ratio : config.strategy_table.ratios) rows.push_back({t, ratio, b, pi_m + b * shift * ratio});
    }

    if (format == OutputFormat::Csv) {
        std::string out = "t,ratio,beta,pi_merton,shift_scale,pi_star\n";
        for (const auto& r : rows) {
            out += format_double(r.t) + "," + format_double(r.ratio) + "," + format_double(r.beta) + "," +
                   format_double(pi_m) + "," + format_double(shift) + "," + format_double(r.pi_star) + "\n";
        }
        return {out};
    }
    json doc = envelope(config, "strategy");
    doc["spec"] = to_json(spec);
    doc["pi_merton"] = pi_m;
    doc["shift_scale"] = shift;
    json table = json::array();
    for (const auto& r : rows)
        table.push_back({{"t", r.t}, {"ratio", r.ratio}, {"beta", r.beta}, {"pi_star", r.pi_star}});
    doc["rows"] = table;
    return {render(doc)};
}

CommandOutput cmd_simulate(const RunConfig& config, OutputFormat format, const ExecutionOptions& exec_in) {
    const ProblemSpec spec = config.problem();
    const ExecutionOptions exec = with_budget(config, exec_in);
    const Strategy strategy = parse_strategy(config.simulate.strategy, "config.simulate.strategy");
    const std::size_t n_steps = config.grid.n_steps;

    const PathEnsemble ensemble = generate_paths(spec, config.grid, exec);
    const WealthEnsemble wealth = integrate_wealth(ensemble, strategy, Recording{n_steps}, exec);

    std::vector<double> terminal(wealth.paths.size());
    for (std::size_t p = 0; p < terminal.size(); ++p) terminal[p] = wealth.paths[p].terminal_wealth;
    const Moments m = moments(terminal);
    const UtilitySample utility_sample = terminal_utility(spec, wealth);
    Estimate expected_utility = mean_estimate(utility_sample.values, wealth.paths.size());
    expected_utility.pass = exclusions_acceptable(expected_utility);
    expected_utility.criterion = "excluded share <= 1%";

    std::optional<double> replication_rms;
    if (std::holds_alternative<OptimalRule>(strategy.rule())) {
        double ss = 0.0;
        std::size_t n = 0;
        for (std::size_t p = 0; p < terminal.size(); ++p) {
            if (std::isnan(terminal[p])) continue;
            const double target = optimal_terminal_wealth(spec, ensemble.deflator(p, n_steps));
            const double rel = (terminal[p] - target) / target;
            ss += rel * rel;
            ++n;
        }
        if (n > 0) replication_rms = std::sqrt(ss / static_cast<double>(n));
    }

    if (config.simulate.dump_file && config.simulate.dump_paths > 0) {
        // Paths are keyed by index, so a smaller ensemble reproduces the leading paths exactly.
        GridConfig head = config.grid;
        head.n_paths = std::min(config.simulate.dump_paths, config.grid.n_paths);
        const PathEnsemble small = generate_paths(spec, head, exec);
        const WealthEnsemble full = integrate_wealth(small, strategy, {}, exec);
        std::ofstream out(*config.simulate.dump_file, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoError, "cannot open dump file " + *config.simulate.dump_file);
        write_path_csv(out, small, full, head.n_paths);
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write failed for dump file " + *config.simulate.dump_file);
    }

    const std::size_t violations = wealth.violation_count();
    if (format == OutputFormat::Csv) {
        std::string out = "quantity,value\n";
        auto row = [&out](const std::string& name, double v) { out += name + "," + format_double(v) + "\n"; };
        auto count = [&out](const std::string& name, std::size_t v) { out += name + "," + std::to_string(v) + "\n"; };
        count("n_paths", wealth.paths.size());
        count("violations", violations);
        row("terminal_mean", m.mean);
        row("terminal_std_dev", m.std_dev);
        row("terminal_min", m.min);
        row("terminal_max", m.max);
        row("expected_utility", expected_utility.value);
        row("expected_utility_se", expected_utility.std_error);
        count("utility_floored", utility_sample.floored);
        if (replication_rms) row("replication_rms", *replication_rms);
        return {out};
    }
    json doc = envelope(config, "simulate");
    doc["spec"] = to_json(spec);
    doc["grid"] = to_json(config.grid);
    doc["strategy"] = strategy.name();
    doc["n_paths"] = wealth.paths.size();
    doc["violations"] = violations;
    doc["terminal_wealth"] = {{"mean", number(m.mean)},
                              {"std_dev", number(m.std_dev)},
                              {"min", number(m.min)},
                              {"max", number(m.max)},
                              {"n", m.n}};
    doc["expected_utility"] = to_json(expected_utility);
    doc["utility_floored"] = utility_sample.floored;
    doc["replication_rms"] = replication_rms ? number(*replication_rms) : json(nullptr);
    return {render(doc)};
}

CommandOutput cmd_verify(const RunConfig& config, OutputFormat format, const ExecutionOptions& exec_in) {
    const ProblemSpec spec = config.problem();
    const VerificationReport report =
        run_verification(spec, config.grid, config.verify, with_budget(config, exec_in));

    if (format == OutputFormat::Csv) {
        std::string out = "name,kind,pass,value,scale\n";
        for (const auto& c : report.checks) {
            double value = std::numeric_limits<double>::quiet_NaN();
            double scale = value;  // SE for estimates, tolerance for residuals
            if (c.estimate) {
                value = c.estimate->value;
                scale = c.estimate->std_error;
            } else if (c.residual) {
                value = c.residual->value;
                scale = c.residual->tolerance;
            } else if (c.replication && !c.replication->rungs.empty()) {
                value = c.replication->rungs.back().rms_relative_error;
                scale = c.replication->min_order;
            } else if (c.kstar) {
                value = c.kstar->algebraic.value;
                scale = c.kstar->algebraic.tolerance;
            }
            out += c.name + "," + c.kind + "," + (c.pass ? "true" : "false") + "," + format_double(value) + "," +
                   format_double(scale) + "\n";
        }
        return {out, report.pass};
    }
    json doc = envelope(config, "verify");
    doc["report"] = to_json(report);
    json failed = json::array();
    for (const auto& c : report.checks)
        if (!c.pass) failed.push_back(c.name);
    doc["failed"] = failed;
    doc["pass"] = report.pass;
    return {render(doc), report.pass};
}

std::vector<SweepPoint> sweep_points(const RunConfig& config) {
    for (std::size_t a = 0; a < config.sweep.axes.size(); ++a) {
        if (config.sweep.axes[a].values.empty())
            throw Error(ErrorCode::ConfigError,
                        "config.sweep.axes[" + std::to_string(a) + "]: axis '" + config.sweep.axes[a].name + "' is empty");
    }

    std::vector<SweepPoint> points;
    std::vector<std::size_t> index(config.sweep.axes.size(), 0);
    for (;;) {
        MarketParams market = config.market;
        EndowmentParams endowment = config.endowment;
        AgentParams agent = config.agent;
        std::vector<std::pair<std::string, double>> coords;
        for (std::size_t a = 0; a < index.size(); ++a) {
            const auto& axis = config.sweep.axes[a];
            const double v = axis.values[index[a]];
            if (axis.name == "gamma") agent.gamma = v;
            else if (axis.name == "eta") endowment.eta = v;
            else if (axis.name == "theta") market.lambda_excess = v * market.sigma;
            else if (axis.name == "e0") endowment.e0 = v;
            else if (axis.name == "horizon_T") agent.horizon_T = v;
            else throw Error(ErrorCode::ConfigError, "config.sweep.axes[" + std::to_string(a) + "].name: unknown axis '" + axis.name + "'");
            coords.emplace_back(axis.name, v);
        }
        points.push_back({validate(market, endowment, agent), std::move(coords)});

        // odometer, last axis fastest
        std::size_t a = index.size();
        while (a > 0) {
            --a;
            if (++index[a] < config.sweep.axes[a].values.size()) break;
            index[a] = 0;
            if (a == 0) return points;
        }
        if (index.empty()) return points;
    }
}

CommandOutput cmd_sweep(const RunConfig& config, OutputFormat format, const ExecutionOptions& exec_in) {
    const ExecutionOptions exec = with_budget(config, exec_in);
    const std::vector<SweepPoint> points = sweep_points(config);

    struct Row {
        std::size_t point;
        std::string quantity;
        double value;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const ProblemSpec& spec = points[i].spec;
        auto add = [&](std::string q, double v) { rows.push_back({i, std::move(q), v}); };
        const double shift = shift_scale(spec);
        add("pi_merton", merton_fraction(spec));
        add("shift_scale", shift);
        add("beta_0", beta(spec, 0.0));
        add("endow_price_T", endowment_price(spec, spec.horizon()));
        add("primal_value", primal_value(spec));
        for (double f : config.sweep.time_fractions) {
            const double t = time_at(f, spec.horizon());
            const std::string tag = "@" + format_double(f);
            add("beta" + tag, beta(spec, t));
            add("shift_term" + tag, beta(spec, t) * shift);  // pi* - pi_M per unit E/X
        }
        if (config.sweep.welfare) {
            const GridConfig grid{config.sweep.welfare_steps, config.sweep.welfare_paths, config.grid.seed};
            const PathEnsemble ensemble = generate_paths(spec, grid, exec);
            const DominanceResult d = dominance_test(ensemble, Strategy::merton(), exec);
            add("welfare_gap_vs_merton", d.delta.value);
            add("welfare_gap_vs_merton_se", d.delta.std_error);
        }
    }

    if (format == OutputFormat::Csv) {
        std::string out = "point";
        for (const auto& axis : config.sweep.axes) out += "," + axis.name;
        out += ",quantity,value\n";
        for (const auto& r : rows) {
            out += std::to_string(r.point);
            for (const auto& c : points[r.point].coordinates) out += "," + format_double(c.second);
            out += "," + r.quantity + "," + format_double(r.value) + "\n";
        }
        return {out};
    }
    json doc = envelope(config, "sweep");
    json table = json::array();
    for (const auto& r : rows) {
        json coords = json::object();
        for (const auto& c : points[r.point].coordinates) coords[c.first] = c.second;
        table.push_back({{"point", r.point}, {"coordinates", coords}, {"quantity", r.quantity}, {"value", number(r.value)}});
    }
    doc["rows"] = table;
    return {render(doc)};
}

}  // namespace endow_opt
