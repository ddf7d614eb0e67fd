#include "endow_opt/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

#include "endow_opt/closedform.hpp"
#include "endow_opt/parallel.hpp"
#include "endow_opt/rng.hpp"

namespace endow_opt {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t step_at_fraction(std::size_t n_steps, double fraction) {
    const double k = std::round(fraction * static_cast<double>(n_steps));
    return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(n_steps)));
}

bool within(const Estimate& e, double target) {
    return std::fabs(e.value - target) <= kSigmaLevel * e.std_error;
}

}  // namespace

Estimate mean_estimate(const std::vector<double>& samples, std::size_t n_total) {
    Estimate out;
    out.n_total = n_total;
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : samples) {
        if (std::isfinite(v)) {
            sum += v;
            ++n;
        }
    }
    out.n_effective = n;
    if (n == 0) {
        out.value = kNaN;
        out.std_error = kNaN;
        return out;
    }
    out.value = sum / static_cast<double>(n);
    double squares = 0.0;
    for (double v : samples) {
        if (std::isfinite(v)) squares += (v - out.value) * (v - out.value);
    }
    out.std_error = n > 1 ? std::sqrt(squares / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return out;
}

bool exclusions_acceptable(const Estimate& estimate) {
    if (estimate.n_total == 0 || estimate.n_effective == 0) return false;
    return static_cast<double>(estimate.excluded()) <=
           kMaxExcludedShare * static_cast<double>(estimate.n_total);
}

// --- budget -----------------------------------------------------------------

std::vector<std::vector<double>> discounted_endowment_integrals(const PathEnsemble& ensemble,
                                                                const std::vector<std::size_t>& steps,
                                                                const ExecutionOptions& exec) {
    std::vector<std::vector<double>> out(steps.size(), std::vector<double>(ensemble.n_paths(), 0.0));
    const std::size_t last = steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());
    const double half_dt = 0.5 * ensemble.step();
    parallel_for(ensemble.n_paths(), resolve_threads(exec.threads), [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            double integral = 0.0;
            double previous = ensemble.endowment(p, 0) * ensemble.deflator(p, 0);
            for (std::size_t k = 0; k <= last; ++k) {
                if (k > 0) {
                    const double current = ensemble.endowment(p, k) * ensemble.deflator(p, k);
                    integral += half_dt * (previous + current);
                    previous = current;
                }
                for (std::size_t i = 0; i < steps.size(); ++i) {
                    if (steps[i] == k) out[i][p] = integral;
                }
            }
        }
    });
    return out;
}

Estimate budget_check(const PathEnsemble& ensemble, const WealthEnsemble& wealth, std::size_t k,
                      bool martingale, const ExecutionOptions& exec) {
    const std::size_t slot = wealth.slot(k);
    const auto integrals = discounted_endowment_integrals(ensemble, {k}, exec);
    std::vector<double> y(ensemble.n_paths());
    for (std::size_t p = 0; p < ensemble.n_paths(); ++p) {
        const double x = wealth.paths[p].wealth[slot];
        y[p] = std::isfinite(x) ? x * ensemble.deflator(p, k) - integrals[0][p] : kNaN;
    }
    Estimate e = mean_estimate(y, ensemble.n_paths());
    if (e.n_effective == 0) throw Error(ErrorCode::NoValidPaths, "budget check: every path was excluded");
    const double x0 = ensemble.spec().x0();
    const double band = kSigmaLevel * e.std_error;
    e.pass = exclusions_acceptable(e) && e.value <= x0 + band;
    e.criterion = "E[Y_t] <= x0 + 3 SE";
    if (martingale) {
        e.pass = e.pass && std::fabs(e.value - x0) <= band;
        e.criterion += " and |E[Y_t] - x0| <= 3 SE";
    }
    return e;
}

Estimate budget_check(const PathEnsemble& ensemble, const Strategy& strategy, std::size_t k,
                      const ExecutionOptions& exec) {
    const WealthEnsemble wealth = integrate_wealth(ensemble, strategy, {k}, exec);
    return budget_check(ensemble, wealth, k, std::holds_alternative<OptimalRule>(strategy.rule()), exec);
}

// --- duality ----------------------------------------------------------------

Residual duality_gap(const ProblemSpec& spec, double lagrange_scale) {
    const double primal = primal_value(spec);
    const double dual = dual_value(spec, lagrange_scale * lagrange_multiplier(spec));
    Residual out;
    out.value = std::fabs(dual - primal) / std::fabs(primal);
    out.pass = out.value <= out.tolerance;
    return out;
}

Residual foc_check(const ProblemSpec& spec, double lagrange_scale) {
    const DualSolution dual = solve_dual(spec);
    Residual out;
    out.value = std::fabs(chi(spec, lagrange_scale * dual.lagrange_multiplier) - dual.effective_wealth) /
                dual.effective_wealth;
    out.pass = out.value <= out.tolerance;
    return out;
}

DualityMonteCarlo duality_gap_mc(const PathEnsemble& ensemble, double lagrange_scale,
                                 const ExecutionOptions& exec) {
    const ProblemSpec& spec = ensemble.spec();
    const std::size_t n = ensemble.n_steps();
    const DualSolution solution = solve_dual(spec);
    const double lam = lagrange_scale * solution.lagrange_multiplier;

    std::vector<double> primal(ensemble.n_paths()), dual(ensemble.n_paths()), gap(ensemble.n_paths());
    parallel_for(ensemble.n_paths(), resolve_threads(exec.threads), [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double h = ensemble.deflator(p, n);
            primal[p] = utility(spec, optimal_terminal_wealth(spec, h));
            dual[p] = dual_utility(spec, lam * h) + lam * solution.effective_wealth;
            gap[p] = dual[p] - primal[p];
        }
    });

    DualityMonteCarlo out;
    out.primal_closed_form = primal_value(spec);
    out.dual_closed_form = dual_value(spec, lam);
    out.primal = mean_estimate(primal, ensemble.n_paths());
    out.primal.pass = exclusions_acceptable(out.primal) && within(out.primal, out.primal_closed_form);
    out.primal.criterion = "|MC primal - closed form| <= 3 SE";
    out.dual = mean_estimate(dual, ensemble.n_paths());
    out.dual.pass = exclusions_acceptable(out.dual) && within(out.dual, out.dual_closed_form);
    out.dual.criterion = "|MC dual - closed form| <= 3 SE";
    out.gap = mean_estimate(gap, ensemble.n_paths());
    out.gap.pass = exclusions_acceptable(out.gap) && within(out.gap, 0.0);
    out.gap.criterion = "|MC dual - MC primal| <= 3 SE";
    return out;
}

// --- replication ------------------------------------------------------------

ReplicationReport replication_check(const PathEnsemble& fine, const std::vector<std::size_t>& ladder,
                                    const ExecutionOptions& exec) {
    if (ladder.size() < 2) throw Error(ErrorCode::InvalidLadder, "ladder needs at least two rungs");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (ladder[i] == 0 || fine.n_steps() % ladder[i] != 0) {
            throw Error(ErrorCode::InvalidLadder,
                        "rung " + std::to_string(ladder[i]) + " does not divide the fine grid");
        }
        if (i > 0 && ladder[i] <= ladder[i - 1]) {
            throw Error(ErrorCode::InvalidLadder, "ladder must be strictly increasing");
        }
    }

    const ProblemSpec& spec = fine.spec();
    const Strategy optimal = Strategy::optimal();
    std::vector<double> target(fine.n_paths());
    for (std::size_t p = 0; p < fine.n_paths(); ++p) {
        target[p] = optimal_terminal_wealth(spec, fine.deflator(p, fine.n_steps()));
    }

    ReplicationReport report;
    for (std::size_t n : ladder) {
        const WealthEnsemble wealth = [&] {
            if (n == fine.n_steps()) return integrate_wealth(fine, optimal, {n}, exec);
            const PathEnsemble coarse = fine.coarsen(fine.n_steps() / n);
            return integrate_wealth(coarse, optimal, {n}, exec);
        }();
        double squares = 0.0;
        std::size_t used = 0;
        for (std::size_t p = 0; p < fine.n_paths(); ++p) {
            const double x = wealth.paths[p].terminal_wealth;
            if (!std::isfinite(x)) continue;
            const double rel = (x - target[p]) / target[p];
            squares += rel * rel;
            ++used;
        }
        ReplicationRung rung;
        rung.n_steps = n;
        rung.violations = wealth.violation_count();
        rung.rms_relative_error = used > 0 ? std::sqrt(squares / static_cast<double>(used)) : kNaN;
        if (!report.rungs.empty()) {
            const auto& prev = report.rungs.back();
            rung.order = std::log(prev.rms_relative_error / rung.rms_relative_error) /
                         std::log(static_cast<double>(n) / static_cast<double>(prev.n_steps));
        }
        report.rungs.push_back(rung);
    }

    report.strictly_decreasing = true;
    report.min_order = std::numeric_limits<double>::infinity();
    bool violations_ok = true;
    for (std::size_t i = 0; i < report.rungs.size(); ++i) {
        const auto& rung = report.rungs[i];
        if (i > 0 && !(rung.rms_relative_error < report.rungs[i - 1].rms_relative_error)) {
            report.strictly_decreasing = false;
        }
        if (rung.order) report.min_order = std::min(report.min_order, *rung.order);
        if (static_cast<double>(rung.violations) > kMaxExcludedShare * static_cast<double>(fine.n_paths())) {
            violations_ok = false;
        }
    }
    report.pass = report.strictly_decreasing && report.min_order >= kMinReplicationOrder && violations_ok;
    if (!report.strictly_decreasing) report.message = "replication error not strictly decreasing";
    else if (report.min_order < kMinReplicationOrder) report.message = "empirical order below 0.4";
    else if (!violations_ok) report.message = "positivity violations above 1% of paths";
    return report;
}

ReplicationReport convergence_study(const PathEnsemble& fine, const std::vector<std::size_t>& ladder,
                                    const ExecutionOptions& exec) {
    try {
        return replication_check(fine, ladder, exec);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidLadder) throw;
        ReplicationReport report;
        report.message = e.what();
        return report;
    }
}

// --- martingale representation ---------------------------------------------

KstarReport kstar_identity_check(const PathEnsemble& ensemble, const std::vector<std::size_t>& steps,
                                 const ExecutionOptions& exec) {
    const ProblemSpec& spec = ensemble.spec();
    const double g = spec.gamma();
    const double theta = spec.theta();
    const double sigma = spec.sigma();
    const double power = -(1.0 - g) / g;
    const auto times = ensemble.times();
    const std::size_t n_paths = ensemble.n_paths();
    const unsigned threads = resolve_threads(exec.threads);

    KstarReport report;
    report.algebraic.value = 0.0;

    for (std::size_t k : steps) {
        if (k >= ensemble.n_steps()) {
            throw Error(ErrorCode::InvalidGrid, "K* check needs a step strictly before T");
        }
        const double t0 = times[k], t1 = times[k + 1];
        const double a0 = alpha(spec, t0), a1 = alpha(spec, t1);
        const double b0 = beta(spec, t0), b1 = beta(spec, t1);
        const double half_dt = 0.5 * ensemble.step();
        const double growth = std::exp(spec.kappa() * ensemble.step());

        std::vector<double> x(n_paths), y(n_paths), residual(n_paths, 0.0), offset(n_paths, 0.0);
        std::vector<char> used(n_paths, 0);
        parallel_for(n_paths, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                const double h0 = ensemble.deflator(p, k), h1 = ensemble.deflator(p, k + 1);
                const double e0 = ensemble.endowment(p, k), e1 = ensemble.endowment(p, k + 1);
                const double m0 = a0 * std::pow(h0, power) - b0 * e0 * h0;
                const double m1 = a1 * std::pow(h1, power) - half_dt * (e0 * h0 + e1 * h1) - b1 * e1 * h1;
                const double k_star = kstar(spec, t0, e0, h0);
                // E[dM* dW | F_k] / dt on this grid; tends to K* as dt -> 0.
                const double k_step = (1.0 - g) / g * theta * a0 * std::pow(h0, power) +
                                      (theta - spec.eta()) * (b1 + half_dt) * growth * e0 * h0;
                x[p] = k_step * ensemble.increment(p, k);
                offset[p] = k_star != 0.0 ? std::fabs(k_step / k_star - 1.0) : 0.0;
                y[p] = m1 - m0;

                const double wealth = optimal_wealth(spec, t0, h0, e0);
                if (wealth > 0.0) {
                    const double pi = optimal_fraction(spec, t0, wealth, e0);
                    const double lhs = sigma * pi * wealth * h0 - theta * wealth * h0;
                    // magnitude of every term on both sides
                    const double scale = std::fabs(sigma * pi * wealth * h0) +
                                         std::fabs(theta * wealth * h0) +
                                         std::fabs((1.0 - g) / g * theta) * a0 * std::pow(h0, power) +
                                         std::fabs(theta - spec.eta()) * b0 * e0 * h0;
                    residual[p] = scale > 0.0 ? std::fabs(lhs - k_star) / scale : std::fabs(lhs - k_star);
                    used[p] = 1;
                }
            }
        });

        for (std::size_t p = 0; p < n_paths; ++p) {
            if (used[p]) {
                report.algebraic.value = std::max(report.algebraic.value, residual[p]);
                ++report.algebraic_points;
            }
        }

        KstarStepCheck check;
        check.step = k;
        for (double o : offset) check.step_offset = std::max(check.step_offset, o);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t p = 0; p < n_paths; ++p) {
            sxy += x[p] * y[p];
            sxx += x[p] * x[p];
        }
        check.slope.n_total = check.slope.n_effective = n_paths;
        check.slope.criterion = "|slope - 1| <= 3 SE";
        if (sxx > 0.0 && n_paths > 1) {
            const double slope = sxy / sxx;
            // residual variance scales with the local curvature of M*, so
            // use the heteroskedasticity-robust (White) standard error
            double weighted = 0.0;
            for (std::size_t p = 0; p < n_paths; ++p) {
                const double e = y[p] - slope * x[p];
                weighted += x[p] * x[p] * e * e;
            }
            check.slope.value = slope;
            check.slope.std_error = std::sqrt(weighted * static_cast<double>(n_paths) /
                                              static_cast<double>(n_paths - 1)) / sxx;
            check.slope.pass = within(check.slope, 1.0);
        } else {
            // K* == 0 on every path (theta = 0 and beta = 0): nothing to regress.
            check.slope.value = 1.0;
            check.slope.pass = true;
        }
        check.drift = mean_estimate(y, n_paths);
        check.drift.pass = within(check.drift, 0.0);
        check.drift.criterion = "|mean dM*| <= 3 SE";
        report.steps.push_back(check);
    }

    report.algebraic.pass = report.algebraic.value <= report.algebraic.tolerance;
    report.pass = report.algebraic.pass;
    for (const auto& s : report.steps) report.pass = report.pass && s.slope.pass && s.drift.pass;
    return report;
}

// --- dominance --------------------------------------------------------------

UtilitySample terminal_utility(const ProblemSpec& spec, const WealthEnsemble& wealth) {
    UtilitySample out;
    out.values.resize(wealth.paths.size());
    const double g = spec.gamma();
    // keep |U| <= e^300 so sums of squares over many paths stay finite
    const double floor =
        std::max(std::numeric_limits<double>::min(), std::exp(-300.0 / std::fabs(1.0 - g)));
    for (std::size_t p = 0; p < wealth.paths.size(); ++p) {
        double x = wealth.paths[p].terminal_wealth;
        if (!std::isfinite(x)) {
            out.values[p] = kNaN;
            continue;
        }
        if (x < floor) {
            x = floor;
            ++out.floored;
        }
        out.values[p] = std::pow(x, 1.0 - g) / (1.0 - g);
    }
    return out;
}

DominanceResult dominance_test(const PathEnsemble& ensemble, const UtilitySample& optimal,
                               std::size_t optimal_violations, const Strategy& challenger,
                               const ExecutionOptions& exec) {
    const WealthEnsemble wealth = integrate_wealth(ensemble, challenger, {ensemble.n_steps()}, exec);
    const UtilitySample other = terminal_utility(ensemble.spec(), wealth);

    std::vector<double> delta(ensemble.n_paths());
    for (std::size_t p = 0; p < delta.size(); ++p) delta[p] = optimal.values[p] - other.values[p];

    DominanceResult out;
    out.challenger = challenger.name();
    out.optimal_violations = optimal_violations;
    out.challenger_violations = wealth.violation_count();
    out.floored = optimal.floored + other.floored;
    out.delta = mean_estimate(delta, ensemble.n_paths());
    out.delta.pass = exclusions_acceptable(out.delta) &&
                     out.delta.value >= -kSigmaLevel * out.delta.std_error;
    out.delta.criterion = "E[U(X*_T)] - E[U(X^c_T)] >= -3 SE (dominance over challenger family)";
    return out;
}

DominanceResult dominance_test(const PathEnsemble& ensemble, const Strategy& challenger,
                               const ExecutionOptions& exec) {
    const WealthEnsemble optimal = integrate_wealth(ensemble, Strategy::optimal(), {ensemble.n_steps()}, exec);
    return dominance_test(ensemble, terminal_utility(ensemble.spec(), optimal), optimal.violation_count(),
                          challenger, exec);
}

std::vector<Strategy> default_challengers(const ProblemSpec& spec) {
    const double pi_m = merton_fraction(spec);
    return {
        Strategy::merton(),
        Strategy::constant(0.0),
        Strategy::constant(pi_m + 0.25),
        Strategy::constant(pi_m - 0.25),
        Strategy::perturbed(Strategy::optimal(), 0.2, PerturbMode::ScaleShift),
        Strategy::perturbed(Strategy::optimal(), -0.2, PerturbMode::ScaleShift),
    };
}

// --- battery ----------------------------------------------------------------

VerificationReport run_verification(const ProblemSpec& spec, const GridConfig& grid,
                                    const VerifyOptions& options, const ExecutionOptions& exec) {
    VerificationReport report{spec, grid, options, {}, false, std::string(kRngIdentity)};
    auto add = [&report](CheckRecord record) { report.checks.push_back(std::move(record)); };

    const Residual foc = foc_check(spec, options.lagrange_scale);
    add({"foc", "exact", foc.pass, std::nullopt, foc, std::nullopt, std::nullopt});
    const Residual gap = duality_gap(spec, options.lagrange_scale);
    add({"duality_gap", "exact", gap.pass, std::nullopt, gap, std::nullopt, std::nullopt});
    {
        Residual bridge;
        const double price = endowment_price(spec, spec.horizon());
        bridge.value = std::fabs(price - spec.e0() * beta(spec, 0.0)) / std::max(std::fabs(price), 1e-300);
        bridge.pass = bridge.value <= bridge.tolerance;
        add({"bridge_identity", "exact", bridge.pass, std::nullopt, bridge, std::nullopt, std::nullopt});
    }

    const PathEnsemble ensemble = generate_paths(spec, grid, exec);
    const std::size_t n = ensemble.n_steps();

    std::vector<std::size_t> budget_steps;
    for (double f : options.budget_time_fractions) budget_steps.push_back(step_at_fraction(n, f));
    Recording recording = budget_steps;
    recording.push_back(n);

    const Strategy optimal = Strategy::optimal();
    const WealthEnsemble optimal_wealth_paths = integrate_wealth(ensemble, optimal, recording, exec);
    const std::vector<Strategy> budget_strategies = {optimal, Strategy::merton(), Strategy::constant(0.0),
                                                     Strategy::constant(2.0)};
    for (const auto& strategy : budget_strategies) {
        const bool is_optimal = std::holds_alternative<OptimalRule>(strategy.rule());
        const WealthEnsemble wealth =
            is_optimal ? optimal_wealth_paths : integrate_wealth(ensemble, strategy, recording, exec);
        for (std::size_t k : budget_steps) {
            const Estimate e = budget_check(ensemble, wealth, k, is_optimal, exec);
            add({"budget[" + strategy.name() + ",t=" + format_double(ensemble.times()[k]) + "]", "statistical",
                 e.pass, e, std::nullopt, std::nullopt, std::nullopt});
        }
    }

    const DualityMonteCarlo mc = duality_gap_mc(ensemble, options.lagrange_scale, exec);
    add({"duality_mc.primal", "statistical", mc.primal.pass, mc.primal, std::nullopt, std::nullopt, std::nullopt});
    add({"duality_mc.dual", "statistical", mc.dual.pass, mc.dual, std::nullopt, std::nullopt, std::nullopt});
    add({"duality_mc.gap", "statistical", mc.gap.pass, mc.gap, std::nullopt, std::nullopt, std::nullopt});

    {
        std::vector<std::size_t> kstar_steps;
        for (double f : options.kstar_time_fractions) kstar_steps.push_back(std::min(step_at_fraction(n, f), n - 1));
        const KstarReport kr = kstar_identity_check(ensemble, kstar_steps, exec);
        add({"kstar_identity", "statistical", kr.pass, std::nullopt, kr.algebraic, std::nullopt, kr});
    }

    {
        const UtilitySample optimal_utility = terminal_utility(spec, optimal_wealth_paths);
        for (const auto& challenger : default_challengers(spec)) {
            const DominanceResult d = dominance_test(ensemble, optimal_utility,
                                                     optimal_wealth_paths.violation_count(), challenger, exec);
            add({"dominance[" + d.challenger + "]", "statistical", d.delta.pass, d.delta, std::nullopt,
                 std::nullopt, std::nullopt});
        }
    }

    {
        ReplicationReport rep;
        if (!options.ladder.empty() && options.ladder.back() == n) {
            rep = convergence_study(ensemble, options.ladder, exec);
        } else if (!options.ladder.empty()) {
            GridConfig fine_grid = grid;
            fine_grid.n_steps = options.ladder.back();
            rep = convergence_study(generate_paths(spec, fine_grid, exec), options.ladder, exec);
        } else {
            rep.message = "empty ladder";
        }
        add({"replication", "convergence", rep.pass, std::nullopt, std::nullopt, rep, std::nullopt});
    }

    report.pass = std::all_of(report.checks.begin(), report.checks.end(),
                              [](const CheckRecord& c) { return c.pass; });
    return report;
}

}  // namespace endow_opt
