#include <cmath>

#include "endow_opt/commands.hpp"

namespace endow_opt {

using nlohmann::json;

namespace {

// JSON has no NaN / inf; report them as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const ProblemSpec& spec) {
    return {
        {"market", {{"r", spec.r()}, {"lambda_excess", spec.market().lambda_excess}, {"sigma", spec.sigma()}}},
        {"endowment", {{"mu", spec.mu()}, {"eta", spec.eta()}, {"e0", spec.e0()}}},
        {"agent", {{"gamma", spec.gamma()}, {"x0", spec.x0()}, {"horizon_T", spec.horizon()}}},
        {"derived", {{"theta", spec.theta()}, {"kappa", spec.kappa()}}},
    };
}

json to_json(const GridConfig& grid) {
    return {{"n_steps", grid.n_steps}, {"n_paths", grid.n_paths}, {"seed", grid.seed}};
}

json to_json(const Estimate& e) {
    return {{"value", number(e.value)},
            {"std_error", number(e.std_error)},
            {"n_effective", e.n_effective},
            {"n_total", e.n_total},
            {"pass", e.pass},
            {"criterion", e.criterion}};
}

json to_json(const Residual& r) {
    return {{"residual", number(r.value)}, {"tolerance", r.tolerance}, {"pass", r.pass}};
}

json to_json(const ReplicationReport& report) {
    json rungs = json::array();
    for (const auto& rung : report.rungs) {
        rungs.push_back({{"n_steps", rung.n_steps},
                         {"rms_relative_error", number(rung.rms_relative_error)},
                         {"violations", rung.violations},
                         {"order", rung.order ? number(*rung.order) : json(nullptr)}});
    }
    return {{"rungs", rungs},
            {"strictly_decreasing", report.strictly_decreasing},
            {"min_order", number(report.min_order)},
            {"required_min_order", kMinReplicationOrder},
            {"pass", report.pass},
            {"message", report.message}};
}

json to_json(const KstarReport& report) {
    json steps = json::array();
    for (const auto& s : report.steps) {
        steps.push_back({{"step", s.step},
                         {"slope", to_json(s.slope)},
                         {"step_offset", number(s.step_offset)},
                         {"drift", to_json(s.drift)}});
    }
    return {{"algebraic", to_json(report.algebraic)},
            {"algebraic_points", report.algebraic_points},
            {"regression", steps},
            {"pass", report.pass}};
}

json to_json(const VerificationReport& report) {
    json checks = json::array();
    for (const auto& c : report.checks) {
        json entry = {{"name", c.name}, {"kind", c.kind}, {"pass", c.pass}};
        if (c.estimate) entry["estimate"] = to_json(*c.estimate);
        if (c.residual) entry["residual"] = to_json(*c.residual);
        if (c.replication) entry["replication"] = to_json(*c.replication);
        if (c.kstar) entry["kstar"] = to_json(*c.kstar);
        checks.push_back(std::move(entry));
    }
    return {
        {"spec", to_json(report.spec)},
        {"grid", to_json(report.grid)},
        {"options",
         {{"ladder", report.options.ladder},
          {"budget_time_fractions", report.options.budget_time_fractions},
          {"kstar_time_fractions", report.options.kstar_time_fractions},
          {"lagrange_scale", report.options.lagrange_scale}}},
        {"rng_identity", report.rng_identity},
        {"sigma_level", kSigmaLevel},
        {"exact_tolerance", kExactTolerance},
        {"checks", checks},
        {"pass", report.pass},
    };
}

}  // namespace endow_opt
