#include "endow_opt/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "endow_opt/closedform.hpp"
#include "endow_opt/parallel.hpp"
#include "endow_opt/rng.hpp"

namespace endow_opt {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::size_t> resolve_recording(const Recording& recording, std::size_t n_steps) {
    if (recording.empty()) {
        std::vector<std::size_t> all(n_steps + 1);
        for (std::size_t k = 0; k <= n_steps; ++k) all[k] = k;
        return all;
    }
    std::vector<std::size_t> steps = recording;
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    if (steps.back() > n_steps) {
        throw Error(ErrorCode::InvalidGrid, "recorded grid index beyond n_steps");
    }
    return steps;
}

double interpolate(std::span<const double> knots, double x, std::size_t& lo) {
    if (knots.size() == 1 || x <= knots.front()) {
        lo = 0;
        return 0.0;
    }
    if (x >= knots.back()) {
        lo = knots.size() - 2;
        return 1.0;
    }
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    lo = static_cast<std::size_t>(it - knots.begin()) - 1;
    return (x - knots[lo]) / (knots[lo + 1] - knots[lo]);
}

}  // namespace

// --- PathEnsemble -----------------------------------------------------------

PathEnsemble::PathEnsemble(const ProblemSpec& spec, const GridConfig& grid)
    : spec_(spec), grid_(grid) {
    const std::size_t n = grid.n_steps;
    const double T = spec.horizon();
    step_ = T / static_cast<double>(n);
    times_.resize(n + 1);
    for (std::size_t k = 0; k < n; ++k) times_[k] = T * static_cast<double>(k) / static_cast<double>(n);
    times_[n] = T;

    const double theta = spec.theta();
    const double sigma = spec.sigma();
    log_e_drift_.resize(n + 1);
    log_h_drift_.resize(n + 1);
    log_z_drift_.resize(n + 1);
    log_s_drift_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = times_[k];
        log_e_drift_[k] = std::log(spec.e0()) + (spec.mu() - 0.5 * spec.eta() * spec.eta()) * t;
        log_h_drift_[k] = -(spec.r() + 0.5 * theta * theta) * t;
        log_z_drift_[k] = -0.5 * theta * theta * t;
        log_s_drift_[k] = (spec.r() + spec.market().lambda_excess - 0.5 * sigma * sigma) * t;
    }
}

double PathEnsemble::endowment(std::size_t path, std::size_t k) const {
    return std::exp(log_e_drift_[k] + spec_.eta() * brownian(path)[k]);
}

double PathEnsemble::deflator(std::size_t path, std::size_t k) const {
    return std::exp(log_h_drift_[k] - spec_.theta() * brownian(path)[k]);
}

double PathEnsemble::density(std::size_t path, std::size_t k) const {
    return std::exp(log_z_drift_[k] - spec_.theta() * brownian(path)[k]);
}

double PathEnsemble::stock(std::size_t path, std::size_t k) const {
    return std::exp(log_s_drift_[k] + spec_.sigma() * brownian(path)[k]);
}

PathEnsemble PathEnsemble::coarsen(std::size_t factor) const {
    if (factor == 0 || grid_.n_steps % factor != 0) {
        throw Error(ErrorCode::InvalidGrid, "coarsening factor must divide n_steps");
    }
    GridConfig coarse_grid = grid_;
    coarse_grid.n_steps = grid_.n_steps / factor;
    PathEnsemble coarse(spec_, coarse_grid);
    const std::size_t stride = coarse_grid.n_steps + 1;
    coarse.levels_.resize(grid_.n_paths * stride);
    for (std::size_t p = 0; p < grid_.n_paths; ++p) {
        const auto fine = brownian(p);
        for (std::size_t k = 0; k < stride; ++k) coarse.levels_[p * stride + k] = fine[k * factor];
    }
    return coarse;
}

PathEnsemble generate_paths(const ProblemSpec& spec, const GridConfig& grid,
                            const ExecutionOptions& exec) {
    if (grid.n_steps < 1 || grid.n_paths < 1) {
        throw Error(ErrorCode::InvalidGrid, "n_steps and n_paths must be >= 1");
    }
    const std::size_t stride = grid.n_steps + 1;
    if (grid.n_paths > exec.memory_budget_bytes / sizeof(double) / stride) {
        throw Error(ErrorCode::MemoryBudgetExceeded,
                    std::to_string(grid.n_paths) + " paths x " + std::to_string(stride) +
                        " grid points exceed the memory budget of " +
                        std::to_string(exec.memory_budget_bytes) + " bytes");
    }
    PathEnsemble ensemble(spec, grid);
    ensemble.levels_.assign(grid.n_paths * stride, 0.0);
    const double scale = std::sqrt(ensemble.step_);

    parallel_for(grid.n_paths, resolve_threads(exec.threads), [&](std::size_t begin, std::size_t end) {
        std::vector<double> normals(grid.n_steps);
        for (std::size_t p = begin; p < end; ++p) {
            NormalStream(grid.seed, p).fill(0, normals.data(), normals.size());
            double* w = ensemble.levels_.data() + p * stride;
            w[0] = 0.0;
            for (std::size_t k = 0; k < grid.n_steps; ++k) w[k + 1] = w[k] + scale * normals[k];
        }
    });
    return ensemble;
}

// --- Strategy ---------------------------------------------------------------

Strategy Strategy::constant(double fraction) { return Strategy(ConstantRule{fraction}); }
Strategy Strategy::merton() { return Strategy(MertonRule{}); }
Strategy Strategy::optimal() { return Strategy(OptimalRule{}); }

Strategy Strategy::perturbed(const Strategy& base, double epsilon, PerturbMode mode) {
    return Strategy(PerturbedRule{std::make_shared<const Strategy>(base), epsilon, mode});
}

Strategy Strategy::tabulated(std::vector<double> times, std::vector<double> ratios,
                             std::vector<double> values) {
    if (times.empty() || ratios.empty() || values.size() != times.size() * ratios.size()) {
        throw Error(ErrorCode::ConfigError, "tabulated strategy needs values sized times x ratios");
    }
    if (!std::is_sorted(times.begin(), times.end()) || !std::is_sorted(ratios.begin(), ratios.end()) ||
        std::adjacent_find(times.begin(), times.end()) != times.end() ||
        std::adjacent_find(ratios.begin(), ratios.end()) != ratios.end()) {
        throw Error(ErrorCode::ConfigError, "tabulated strategy axes must be strictly increasing");
    }
    return Strategy(TabulatedRule{std::move(times), std::move(ratios), std::move(values)});
}

std::string Strategy::name() const {
    return std::visit(
        [](const auto& rule) -> std::string {
            using R = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<R, ConstantRule>) {
                return "constant(" + format_double(rule.fraction) + ")";
            } else if constexpr (std::is_same_v<R, MertonRule>) {
                return "merton";
            } else if constexpr (std::is_same_v<R, OptimalRule>) {
                return "optimal";
            } else if constexpr (std::is_same_v<R, PerturbedRule>) {
                return "perturbed(" + rule.base->name() + "," + format_double(rule.epsilon) + "," +
                       (rule.mode == PerturbMode::Additive ? "additive" : "scale-shift") + ")";
            } else {
                return "tabulated";
            }
        },
        rule_);
}

std::optional<std::pair<double, double>> Strategy::affine_in_ratio(const ProblemSpec& spec,
                                                                   double t) const {
    return std::visit(
        [&](const auto& rule) -> std::optional<std::pair<double, double>> {
            using R = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<R, ConstantRule>) {
                return std::pair{rule.fraction, 0.0};
            } else if constexpr (std::is_same_v<R, MertonRule>) {
                return std::pair{merton_fraction(spec), 0.0};
            } else if constexpr (std::is_same_v<R, OptimalRule>) {
                return std::pair{merton_fraction(spec), beta(spec, t) * shift_scale(spec)};
            } else if constexpr (std::is_same_v<R, PerturbedRule>) {
                auto base = rule.base->affine_in_ratio(spec, t);
                if (!base) return std::nullopt;
                if (rule.mode == PerturbMode::Additive) return std::pair{base->first + rule.epsilon, base->second};
                const double pm = merton_fraction(spec);
                const double k = 1.0 + rule.epsilon;
                return std::pair{pm + k * (base->first - pm), k * base->second};
            } else {
                return std::nullopt;
            }
        },
        rule_);
}

double Strategy::fraction(const ProblemSpec& spec, double t, double wealth, double endow) const {
    if (!(wealth > 0.0) || !(endow > 0.0)) {
        throw Error(ErrorCode::StrategyFailure, "strategy evaluated at non-positive wealth or endowment");
    }
    if (const auto* table = std::get_if<TabulatedRule>(&rule_)) {
        std::size_t i = 0, j = 0;
        const double wt = interpolate(table->times, t, i);
        const double wr = interpolate(table->ratios, endow / wealth, j);
        const std::size_t nr = table->ratios.size();
        auto at = [&](std::size_t a, std::size_t b) {
            return table->values[std::min(a, table->times.size() - 1) * nr + std::min(b, nr - 1)];
        };
        const double lo = (1.0 - wr) * at(i, j) + wr * at(i, j + 1);
        const double hi = (1.0 - wr) * at(i + 1, j) + wr * at(i + 1, j + 1);
        return (1.0 - wt) * lo + wt * hi;
    }
    if (const auto* perturbed = std::get_if<PerturbedRule>(&rule_)) {
        const double base = perturbed->base->fraction(spec, t, wealth, endow);
        if (perturbed->mode == PerturbMode::Additive) return base + perturbed->epsilon;
        const double pm = merton_fraction(spec);
        return pm + (1.0 + perturbed->epsilon) * (base - pm);
    }
    const auto coefficients = affine_in_ratio(spec, t);
    return coefficients->first + coefficients->second * (endow / wealth);
}

// --- wealth -----------------------------------------------------------------

std::size_t WealthEnsemble::violation_count() const {
    return static_cast<std::size_t>(
        std::count_if(paths.begin(), paths.end(), [](const WealthPath& p) { return p.positivity_violated; }));
}

std::size_t WealthEnsemble::slot(std::size_t k) const {
    const auto it = std::lower_bound(recorded_steps.begin(), recorded_steps.end(), k);
    if (it == recorded_steps.end() || *it != k) {
        throw Error(ErrorCode::InvalidGrid, "grid index " + std::to_string(k) + " was not recorded");
    }
    return static_cast<std::size_t>(it - recorded_steps.begin());
}

WealthEnsemble integrate_wealth(const PathEnsemble& ensemble, const Strategy& strategy,
                                const Recording& recording, const ExecutionOptions& exec) {
    const ProblemSpec& spec = ensemble.spec();
    const std::size_t n = ensemble.n_steps();
    const auto times = ensemble.times();
    const double dt = ensemble.step();
    const double r = spec.r();
    const double sigma = spec.sigma();
    const double sigma_theta = sigma * spec.theta();

    // Built-in rules are a + b * E/X at each step; tabulate once.
    std::vector<double> a(n), b(n);
    bool affine = true;
    for (std::size_t k = 0; k < n && affine; ++k) {
        const auto c = strategy.affine_in_ratio(spec, times[k]);
        if (!c) {
            affine = false;
        } else {
            a[k] = c->first;
            b[k] = c->second;
        }
    }

    WealthEnsemble out;
    out.recorded_steps = resolve_recording(recording, n);
    out.paths.resize(ensemble.n_paths());

    parallel_for(ensemble.n_paths(), resolve_threads(exec.threads), [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            WealthPath& path = out.paths[p];
            path.wealth.assign(out.recorded_steps.size(), kNaN);
            std::size_t next_slot = 0;
            double x = spec.x0();
            if (out.recorded_steps[0] == 0) path.wealth[next_slot++] = x;
            for (std::size_t k = 0; k < n; ++k) {
                const double e = ensemble.endowment(p, k);
                const double pi =
                    affine ? a[k] + b[k] * (e / x) : strategy.fraction(spec, times[k], x, e);
                if (!std::isfinite(pi)) {
                    throw Error(ErrorCode::StrategyFailure,
                                "non-finite fraction on path " + std::to_string(p) + " at step " +
                                    std::to_string(k));
                }
                x += ((r + sigma_theta * pi) * x + e) * dt + sigma * pi * x * ensemble.increment(p, k);
                if (!(x > 0.0)) {
                    path.positivity_violated = true;
                    path.first_violation_index = k + 1;
                    break;
                }
                if (next_slot < out.recorded_steps.size() && out.recorded_steps[next_slot] == k + 1) {
                    path.wealth[next_slot++] = x;
                }
            }
            path.terminal_wealth = path.positivity_violated ? kNaN : x;
        }
    });
    return out;
}

WealthEnsemble exact_optimal_wealth_path(const PathEnsemble& ensemble, const Recording& recording,
                                         const ExecutionOptions& exec) {
    const ProblemSpec& spec = ensemble.spec();
    const std::size_t n = ensemble.n_steps();
    const auto times = ensemble.times();
    const double g = spec.gamma();

    WealthEnsemble out;
    out.recorded_steps = resolve_recording(recording, n);
    const std::size_t m = out.recorded_steps.size();
    std::vector<double> alphas(m), betas(m);
    for (std::size_t i = 0; i < m; ++i) {
        alphas[i] = alpha(spec, times[out.recorded_steps[i]]);
        betas[i] = beta(spec, times[out.recorded_steps[i]]);
    }
    out.paths.resize(ensemble.n_paths());

    parallel_for(ensemble.n_paths(), resolve_threads(exec.threads), [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            WealthPath& path = out.paths[p];
            path.wealth.resize(m);
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t k = out.recorded_steps[i];
                const double h = ensemble.deflator(p, k);
                const double x = alphas[i] * std::pow(h, -1.0 / g) - betas[i] * ensemble.endowment(p, k);
                path.wealth[i] = x;
                if (!(x > 0.0) && !path.positivity_violated) {
                    path.positivity_violated = true;
                    path.first_violation_index = k;
                }
            }
            path.terminal_wealth = optimal_terminal_wealth(spec, ensemble.deflator(p, n));
        }
    });
    return out;
}

// --- output -----------------------------------------------------------------

std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

void write_path_csv(std::ostream& out, const PathEnsemble& ensemble, const WealthEnsemble& wealth,
                    std::size_t max_paths) {
    if (wealth.recorded_steps.size() != ensemble.n_steps() + 1) {
        throw Error(ErrorCode::InvalidGrid, "path dump needs wealth recorded at every grid point");
    }
    const auto times = ensemble.times();
    out << "path,t,W,E,H,X\n";
    const std::size_t count = std::min(max_paths, ensemble.n_paths());
    for (std::size_t p = 0; p < count; ++p) {
        const auto w = ensemble.brownian(p);
        for (std::size_t k = 0; k <= ensemble.n_steps(); ++k) {
            out << p << ',' << format_double(times[k]) << ',' << format_double(w[k]) << ','
                << format_double(ensemble.endowment(p, k)) << ',' << format_double(ensemble.deflator(p, k))
                << ',' << format_double(wealth.paths[p].wealth[k]) << '\n';
        }
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing path dump");
}

}  // namespace endow_opt
