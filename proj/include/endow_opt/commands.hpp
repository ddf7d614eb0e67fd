#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "endow_opt/config.hpp"

// Subcommands behind the endow-opt CLI. Each returns the document it would
// print, so callers (and tests) can compare outputs byte for byte.

namespace endow_opt {

enum class OutputFormat { Json, Csv };

struct CommandOutput {
    std::string text;
    bool pass = true;  // only cmd_verify can report false
};

nlohmann::json to_json(const ProblemSpec& spec);
nlohmann::json to_json(const GridConfig& grid);
nlohmann::json to_json(const Estimate& estimate);
nlohmann::json to_json(const Residual& residual);
nlohmann::json to_json(const ReplicationReport& report);
nlohmann::json to_json(const KstarReport& report);
nlohmann::json to_json(const VerificationReport& report);

/// Endowment price P_t on an even grid over [0, T]; the last row is P_T.
CommandOutput cmd_price(const RunConfig& config, OutputFormat format);

/// pi*(t, E/X) over the configured times and ratios with pi_M, shift scale
/// and beta(t) columns.
CommandOutput cmd_strategy(const RunConfig& config, OutputFormat format);

/// Simulates the configured strategy; writes the CSV path dump when
/// simulate.dump_file is set and returns the summary.
CommandOutput cmd_simulate(const RunConfig& config, OutputFormat format, const ExecutionOptions& exec);

/// Full check battery; pass is the overall verdict.
CommandOutput cmd_verify(const RunConfig& config, OutputFormat format, const ExecutionOptions& exec);

struct SweepPoint {
    ProblemSpec spec;
    std::vector<std::pair<std::string, double>> coordinates;  // axis name -> value
};

/// Cartesian product of the sweep axes (first axis outermost) applied to the
/// base parameters. A theta value sets lambda_excess = theta * sigma.
std::vector<SweepPoint> sweep_points(const RunConfig& config);

/// Long-format dataset: one row per (point, quantity).
CommandOutput cmd_sweep(const RunConfig& config, OutputFormat format, const ExecutionOptions& exec);

/// CLI exit code for an error: 1 validation/config, 3 I/O, 4 overflow.
int exit_code_for(ErrorCode code);

}  // namespace endow_opt
