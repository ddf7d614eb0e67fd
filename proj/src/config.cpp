#include "endow_opt/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

namespace endow_opt {

using nlohmann::json;

namespace {

const std::set<std::string> kSweepAxes = {"gamma", "eta", "theta", "e0", "horizon_T"};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ConfigError, path + ": " + what);
}

// Walks one JSON object, remembering which keys were consumed so leftovers can
// be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail(path_, "expected an object");
    }

    bool has(const char* key) const { return node_.contains(key); }

    const json& child(const char* key) {
        seen_.insert(key);
        return node_.at(key);
    }

    std::string path(const char* key) const { return path_ + "." + key; }

    double number(const char* key) {
        if (!has(key)) fail(path(key), "missing required number");
        return as_number(child(key), path(key));
    }

    void number(const char* key, double& out) {
        if (has(key)) out = as_number(child(key), path(key));
    }

    void count(const char* key, std::size_t& out) {
        if (has(key)) out = as_count(child(key), path(key));
    }

    void seed(const char* key, std::uint64_t& out) {
        if (has(key)) out = as_count(child(key), path(key));
    }

    void flag(const char* key, bool& out) {
        if (!has(key)) return;
        const json& v = child(key);
        if (!v.is_boolean()) fail(path(key), "expected a boolean");
        out = v.get<bool>();
    }

    void numbers(const char* key, std::vector<double>& out) {
        if (!has(key)) return;
        out = as_numbers(child(key), path(key));
    }

    void counts(const char* key, std::vector<std::size_t>& out) {
        if (!has(key)) return;
        const json& v = child(key);
        if (!v.is_array()) fail(path(key), "expected an array");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_count(v[i], path(key) + "[" + std::to_string(i) + "]"));
    }

    void finish() const {
        for (const auto& item : node_.items()) {
            if (!seen_.count(item.key())) fail(path_ + "." + item.key(), "unknown key");
        }
    }

    // unsigned or signed-but-non-negative integer
    static std::uint64_t as_count(const json& v, const std::string& path) {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        fail(path, "expected a non-negative integer");
    }

    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) fail(path, "expected a number");
        return v.get<double>();
    }

    static std::vector<double> as_numbers(const json& v, const std::string& path) {
        if (!v.is_array()) fail(path, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

Strategy parse_strategy(const json& node, const std::string& path) {
    ObjectReader in(node, path);
    if (!in.has("kind") || !in.child("kind").is_string()) fail(path + ".kind", "expected a string");
    const std::string kind = node.at("kind").get<std::string>();
    Strategy out = Strategy::optimal();
    if (kind == "optimal") {
        out = Strategy::optimal();
    } else if (kind == "merton") {
        out = Strategy::merton();
    } else if (kind == "constant") {
        out = Strategy::constant(in.number("fraction"));
    } else if (kind == "perturbed") {
        if (!in.has("base")) fail(in.path("base"), "missing base strategy");
        const Strategy base = parse_strategy(in.child("base"), in.path("base"));
        const double epsilon = in.number("epsilon");
        PerturbMode mode = PerturbMode::Additive;
        if (in.has("mode")) {
            const json& m = in.child("mode");
            if (m == "additive") mode = PerturbMode::Additive;
            else if (m == "scale-shift") mode = PerturbMode::ScaleShift;
            else fail(in.path("mode"), "expected \"additive\" or \"scale-shift\"");
        }
        out = Strategy::perturbed(base, epsilon, mode);
    } else if (kind == "tabulated") {
        std::vector<double> times, ratios, values;
        in.numbers("times", times);
        in.numbers("ratios", ratios);
        in.numbers("values", values);
        try {
            out = Strategy::tabulated(std::move(times), std::move(ratios), std::move(values));
        } catch (const Error& e) {
            fail(path, e.what());
        }
    } else {
        fail(path + ".kind", "unknown strategy kind \"" + kind + "\"");
    }
    in.finish();
    return out;
}

json to_json(const Strategy& strategy) {
    return std::visit(
        [](const auto& rule) -> json {
            using R = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<R, ConstantRule>) {
                return {{"kind", "constant"}, {"fraction", rule.fraction}};
            } else if constexpr (std::is_same_v<R, MertonRule>) {
                return {{"kind", "merton"}};
            } else if constexpr (std::is_same_v<R, OptimalRule>) {
                return {{"kind", "optimal"}};
            } else if constexpr (std::is_same_v<R, PerturbedRule>) {
                return {{"kind", "perturbed"},
                        {"base", to_json(*rule.base)},
                        {"epsilon", rule.epsilon},
                        {"mode", rule.mode == PerturbMode::Additive ? "additive" : "scale-shift"}};
            } else {
                return {{"kind", "tabulated"}, {"times", rule.times}, {"ratios", rule.ratios}, {"values", rule.values}};
            }
        },
        strategy.rule());
}

RunConfig parse_config(const json& document) {
    RunConfig config;
    ObjectReader root(document, "config");

    if (!root.has("market")) fail("config.market", "missing section");
    {
        ObjectReader in(root.child("market"), "config.market");
        config.market.r = in.number("r");
        config.market.lambda_excess = in.number("lambda_excess");
        config.market.sigma = in.number("sigma");
        in.finish();
    }
    if (!root.has("endowment")) fail("config.endowment", "missing section");
    {
        ObjectReader in(root.child("endowment"), "config.endowment");
        config.endowment.mu = in.number("mu");
        config.endowment.eta = in.number("eta");
        config.endowment.e0 = in.number("e0");
        in.finish();
    }
    if (!root.has("agent")) fail("config.agent", "missing section");
    {
        ObjectReader in(root.child("agent"), "config.agent");
        config.agent.gamma = in.number("gamma");
        config.agent.x0 = in.number("x0");
        config.agent.horizon_T = in.number("horizon_T");
        in.finish();
    }
    if (root.has("grid")) {
        ObjectReader in(root.child("grid"), "config.grid");
        in.count("n_steps", config.grid.n_steps);
        in.count("n_paths", config.grid.n_paths);
        in.seed("seed", config.grid.seed);
        in.count("memory_budget_bytes", config.memory_budget_bytes);
        in.finish();
        if (config.grid.n_steps < 1) fail("config.grid.n_steps", "must be >= 1");
        if (config.grid.n_paths < 1) fail("config.grid.n_paths", "must be >= 1");
    }
    if (root.has("price")) {
        ObjectReader in(root.child("price"), "config.price");
        in.count("n_points", config.price.n_points);
        in.finish();
        if (config.price.n_points < 2) fail("config.price.n_points", "must be >= 2");
    }
    if (root.has("strategy_table")) {
        ObjectReader in(root.child("strategy_table"), "config.strategy_table");
        in.numbers("time_fractions", config.strategy_table.time_fractions);
        in.numbers("ratios", config.strategy_table.ratios);
        in.finish();
        for (double f : config.strategy_table.time_fractions) {
            if (!(f >= 0.0 && f <= 1.0)) fail("config.strategy_table.time_fractions", "entries must lie in [0, 1]");
        }
        for (double q : config.strategy_table.ratios) {
            if (!(q >= 0.0) || !std::isfinite(q)) fail("config.strategy_table.ratios", "entries must be finite and >= 0");
        }
    }
    if (root.has("simulate")) {
        ObjectReader in(root.child("simulate"), "config.simulate");
        if (in.has("strategy")) {
            config.simulate.strategy = in.child("strategy");
            parse_strategy(config.simulate.strategy, "config.simulate.strategy");
        }
        in.count("dump_paths", config.simulate.dump_paths);
        if (in.has("dump_file")) {
            const json& v = in.child("dump_file");
            if (!v.is_string()) fail(in.path("dump_file"), "expected a string");
            config.simulate.dump_file = v.get<std::string>();
        }
        in.finish();
    }
    if (root.has("verify")) {
        ObjectReader in(root.child("verify"), "config.verify");
        in.counts("ladder", config.verify.ladder);
        in.numbers("budget_time_fractions", config.verify.budget_time_fractions);
        in.numbers("kstar_time_fractions", config.verify.kstar_time_fractions);
        in.number("lagrange_scale", config.verify.lagrange_scale);
        in.finish();
        if (!(config.verify.lagrange_scale > 0.0)) fail("config.verify.lagrange_scale", "must be > 0");
        for (double f : config.verify.budget_time_fractions) {
            if (!(f >= 0.0 && f <= 1.0)) fail("config.verify.budget_time_fractions", "entries must lie in [0, 1]");
        }
        for (double f : config.verify.kstar_time_fractions) {
            if (!(f >= 0.0 && f < 1.0)) fail("config.verify.kstar_time_fractions", "entries must lie in [0, 1)");
        }
    }
    if (root.has("sweep")) {
        ObjectReader in(root.child("sweep"), "config.sweep");
        if (in.has("axes")) {
            const json& axes = in.child("axes");
            if (!axes.is_array()) fail("config.sweep.axes", "expected an array");
            for (std::size_t i = 0; i < axes.size(); ++i) {
                const std::string path = "config.sweep.axes[" + std::to_string(i) + "]";
                ObjectReader axis_in(axes[i], path);
                SweepAxis axis;
                if (!axis_in.has("name") || !axis_in.child("name").is_string()) fail(path + ".name", "expected a string");
                axis.name = axes[i].at("name").get<std::string>();
                if (!kSweepAxes.count(axis.name)) fail(path + ".name", "unknown axis \"" + axis.name + "\"");
                axis_in.numbers("values", axis.values);
                axis_in.finish();
                if (axis.values.empty()) fail(path + ".values", "axis has no values");
                config.sweep.axes.push_back(std::move(axis));
            }
        }
        in.numbers("time_fractions", config.sweep.time_fractions);
        in.flag("welfare", config.sweep.welfare);
        in.count("welfare_paths", config.sweep.welfare_paths);
        in.count("welfare_steps", config.sweep.welfare_steps);
        in.finish();
        for (double f : config.sweep.time_fractions) {
            if (!(f >= 0.0 && f <= 1.0)) fail("config.sweep.time_fractions", "entries must lie in [0, 1]");
        }
    }
    root.finish();
    return config;
}

json to_json(const RunConfig& config) {
    json axes = json::array();
    for (const auto& axis : config.sweep.axes) axes.push_back({{"name", axis.name}, {"values", axis.values}});
    json simulate = {{"strategy", config.simulate.strategy}, {"dump_paths", config.simulate.dump_paths}};
    if (config.simulate.dump_file) simulate["dump_file"] = *config.simulate.dump_file;
    return {
        {"market", {{"r", config.market.r}, {"lambda_excess", config.market.lambda_excess}, {"sigma", config.market.sigma}}},
        {"endowment", {{"mu", config.endowment.mu}, {"eta", config.endowment.eta}, {"e0", config.endowment.e0}}},
        {"agent", {{"gamma", config.agent.gamma}, {"x0", config.agent.x0}, {"horizon_T", config.agent.horizon_T}}},
        {"grid",
         {{"n_steps", config.grid.n_steps},
          {"n_paths", config.grid.n_paths},
          {"seed", config.grid.seed},
          {"memory_budget_bytes", config.memory_budget_bytes}}},
        {"price", {{"n_points", config.price.n_points}}},
        {"strategy_table",
         {{"time_fractions", config.strategy_table.time_fractions}, {"ratios", config.strategy_table.ratios}}},
        {"simulate", simulate},
        {"verify",
         {{"ladder", config.verify.ladder},
          {"budget_time_fractions", config.verify.budget_time_fractions},
          {"kstar_time_fractions", config.verify.kstar_time_fractions},
          {"lagrange_scale", config.verify.lagrange_scale}}},
        {"sweep",
         {{"axes", axes},
          {"time_fractions", config.sweep.time_fractions},
          {"welfare", config.sweep.welfare},
          {"welfare_paths", config.sweep.welfare_paths},
          {"welfare_steps", config.sweep.welfare_steps}}},
    };
}

bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.market == b.market && a.endowment == b.endowment && a.agent == b.agent && a.grid == b.grid &&
           a.memory_budget_bytes == b.memory_budget_bytes && a.price == b.price &&
           a.strategy_table == b.strategy_table && a.simulate == b.simulate && a.verify == b.verify &&
           a.sweep == b.sweep;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path);
    json document;
    try {
        document = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
    return parse_config(document);
}

}  // namespace endow_opt
