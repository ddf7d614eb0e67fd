#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "endow_opt/simulate.hpp"
#include "endow_opt/verify.hpp"

// JSON run configuration shared by every CLI subcommand. Unknown keys are
// rejected at every level; optional sections fall back to the defaults below.

namespace endow_opt {

struct PriceOptions {
    std::size_t n_points = 11;  // evenly spaced in [0, T], both ends included
    bool operator==(const PriceOptions&) const = default;
};

struct StrategyTableOptions {
    std::vector<double> time_fractions{0.0, 0.25, 0.5, 0.75, 1.0};  // of T
    std::vector<double> ratios{0.0, 0.1, 0.25, 0.5, 1.0};          // E / X
    bool operator==(const StrategyTableOptions&) const = default;
};

struct SimulateOptions {
    nlohmann::json strategy = {{"kind", "optimal"}};
    std::size_t dump_paths = 10;
    std::optional<std::string> dump_file;  // CSV path dump, skipped when absent
    bool operator==(const SimulateOptions&) const = default;
};

struct SweepAxis {
    std::string name;  // gamma | eta | theta | e0 | horizon_T
    std::vector<double> values;
    bool operator==(const SweepAxis&) const = default;
};

struct SweepOptions {
    std::vector<SweepAxis> axes;
    std::vector<double> time_fractions{0.0, 0.5};  // beta(t) and shift at these t / T
    bool welfare = false;          // MC welfare gap of optimal over merton per point
    std::size_t welfare_paths = 20000;
    std::size_t welfare_steps = 128;
    bool operator==(const SweepOptions&) const = default;
};

struct RunConfig {
    MarketParams market;
    EndowmentParams endowment;
    AgentParams agent;
    GridConfig grid{512, 100000, 42};
    std::size_t memory_budget_bytes = ExecutionOptions{}.memory_budget_bytes;
    PriceOptions price;
    StrategyTableOptions strategy_table;
    SimulateOptions simulate;
    VerifyOptions verify;
    SweepOptions sweep;

    ProblemSpec problem() const { return validate(market, endowment, agent); }
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Throws Error(ConfigError) naming the offending field path.
RunConfig parse_config(const nlohmann::json& document);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& config);

Strategy parse_strategy(const nlohmann::json& node, const std::string& path = "strategy");
nlohmann::json to_json(const Strategy& strategy);

}  // namespace endow_opt
