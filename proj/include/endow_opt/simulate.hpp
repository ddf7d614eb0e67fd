#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "endow_opt/model.hpp"

namespace endow_opt {

struct GridConfig {
    std::size_t n_steps = 0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;

    bool operator==(const GridConfig&) const = default;
};

struct ExecutionOptions {
    unsigned threads = 0;                                 // 0: resolve_threads()
    std::size_t memory_budget_bytes = std::size_t{2} << 30;  // Brownian storage per ensemble
};

/// Brownian levels on a uniform grid, one row per path. The state processes
/// E, H, Z and S^1 are exact log-space functions of (t, W_t), evaluated on
/// access; no discretization error enters them.
class PathEnsemble {
public:
    const ProblemSpec& spec() const noexcept { return spec_; }
    const GridConfig& grid() const noexcept { return grid_; }
    std::size_t n_paths() const noexcept { return grid_.n_paths; }
    std::size_t n_steps() const noexcept { return grid_.n_steps; }
    double step() const noexcept { return step_; }
    std::span<const double> times() const noexcept { return times_; }

    /// W at grid points 0..n_steps for one path.
    std::span<const double> brownian(std::size_t path) const noexcept {
        return {levels_.data() + path * (grid_.n_steps + 1), grid_.n_steps + 1};
    }
    double increment(std::size_t path, std::size_t k) const noexcept {
        const auto w = brownian(path);
        return w[k + 1] - w[k];
    }

    double endowment(std::size_t path, std::size_t k) const;
    double deflator(std::size_t path, std::size_t k) const;
    double density(std::size_t path, std::size_t k) const;
    double stock(std::size_t path, std::size_t k) const;

    /// Same paths observed on every `factor`-th grid point (common refinement).
    PathEnsemble coarsen(std::size_t factor) const;

    friend PathEnsemble generate_paths(const ProblemSpec&, const GridConfig&, const ExecutionOptions&);

private:
    PathEnsemble(const ProblemSpec& spec, const GridConfig& grid);

    ProblemSpec spec_;
    GridConfig grid_;
    double step_ = 0.0;
    std::vector<double> times_;
    std::vector<double> levels_;
    // deterministic part of log E, log H, log Z, log S^1 at each grid time
    std::vector<double> log_e_drift_, log_h_drift_, log_z_drift_, log_s_drift_;
};

PathEnsemble generate_paths(const ProblemSpec& spec, const GridConfig& grid,
                            const ExecutionOptions& exec = {});

enum class PerturbMode { Additive, ScaleShift };

class Strategy;

struct ConstantRule {
    double fraction = 0.0;
};
struct MertonRule {};
struct OptimalRule {};
/// Additive: base + epsilon. ScaleShift: pi_M + (1 + epsilon)(base - pi_M),
/// which for the optimal base scales its endowment shift term.
struct PerturbedRule {
    std::shared_ptr<const Strategy> base;
    double epsilon = 0.0;
    PerturbMode mode = PerturbMode::Additive;
};
/// Fractions tabulated on times x endowment-to-wealth ratios (row-major by
/// time), bilinearly interpolated and clamped to the table edges.
struct TabulatedRule {
    std::vector<double> times;
    std::vector<double> ratios;
    std::vector<double> values;
};

/// Feedback rule (t, wealth, endowment) -> risky fraction.
class Strategy {
public:
    using Rule = std::variant<ConstantRule, MertonRule, OptimalRule, PerturbedRule, TabulatedRule>;

    static Strategy constant(double fraction);
    static Strategy merton();
    static Strategy optimal();
    static Strategy perturbed(const Strategy& base, double epsilon, PerturbMode mode);
    static Strategy tabulated(std::vector<double> times, std::vector<double> ratios,
                              std::vector<double> values);

    const Rule& rule() const noexcept { return rule_; }
    std::string name() const;

    /// Requires wealth > 0 and endow > 0.
    double fraction(const ProblemSpec& spec, double t, double wealth, double endow) const;

    /// If the rule has the form a + b * endow / wealth at time t, returns (a, b).
    std::optional<std::pair<double, double>> affine_in_ratio(const ProblemSpec& spec, double t) const;

private:
    explicit Strategy(Rule rule) : rule_(std::move(rule)) {}
    Rule rule_;
};

struct WealthPath {
    std::vector<double> wealth;  // at the recorded grid indices; NaN after a violation
    bool positivity_violated = false;
    std::optional<std::size_t> first_violation_index;  // grid index
    double terminal_wealth = 0.0;                      // NaN when violated
};

struct WealthEnsemble {
    std::vector<std::size_t> recorded_steps;
    std::vector<WealthPath> paths;

    std::size_t violation_count() const;
    /// Position of grid index k within recorded_steps; throws if not recorded.
    std::size_t slot(std::size_t k) const;
};

/// Grid indices at which wealth is stored; empty means every grid point.
using Recording = std::vector<std::size_t>;

/// Euler-Maruyama for dX = ((r + sigma theta pi) X + E) dt + sigma pi X dW.
/// A step ending at X <= 0 freezes the path at NaN and flags it.
WealthEnsemble integrate_wealth(const PathEnsemble& ensemble, const Strategy& strategy,
                                const Recording& recording = {},
                                const ExecutionOptions& exec = {});

/// X*_t = alpha(t) H_t^{-1/gamma} - beta(t) E_t at every recorded grid point.
WealthEnsemble exact_optimal_wealth_path(const PathEnsemble& ensemble,
                                         const Recording& recording = {},
                                         const ExecutionOptions& exec = {});

/// CSV `path,t,W,E,H,X` for the first max_paths paths; wealth must record every
/// grid point. Decimal point is always '.', shortest round-trip digits.
void write_path_csv(std::ostream& out, const PathEnsemble& ensemble, const WealthEnsemble& wealth,
                    std::size_t max_paths);

/// Locale-independent shortest round-trip formatting.
std::string format_double(double value);

}  // namespace endow_opt
