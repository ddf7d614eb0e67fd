#pragma once

#include "endow_opt/error.hpp"

namespace endow_opt {

// All rates are annualized and time is measured in years. The endowment
// enters wealth as a rate: E_t dt per unit of time.

struct MarketParams {
    double r = 0.0;              // risk-free rate
    double lambda_excess = 0.0;  // excess return of the risky asset
    double sigma = 0.0;          // risky-asset volatility, > 0

    bool operator==(const MarketParams&) const = default;
};

struct EndowmentParams {
    double mu = 0.0;   // endowment drift
    double eta = 0.0;  // endowment volatility, > 0
    double e0 = 0.0;   // initial endowment rate, > 0

    bool operator==(const EndowmentParams&) const = default;
};

struct AgentParams {
    double gamma = 0.0;      // relative risk aversion, (0,1) or (1,inf)
    double x0 = 0.0;         // initial wealth, > 0
    double horizon_T = 0.0;  // terminal time, > 0

    bool operator==(const AgentParams&) const = default;
};

/// Validated problem parameters. Only constructible through validate(), so
/// holding a ProblemSpec means every invariant holds. The derived market price
/// of risk and drift gap are computed once and shared bit-identically.
class ProblemSpec {
public:
    const MarketParams& market() const noexcept { return market_; }
    const EndowmentParams& endowment() const noexcept { return endowment_; }
    const AgentParams& agent() const noexcept { return agent_; }

    double theta() const noexcept { return theta_; }
    /// mu - r - eta * theta
    double kappa() const noexcept { return kappa_; }

    double r() const noexcept { return market_.r; }
    double sigma() const noexcept { return market_.sigma; }
    double mu() const noexcept { return endowment_.mu; }
    double eta() const noexcept { return endowment_.eta; }
    double e0() const noexcept { return endowment_.e0; }
    double gamma() const noexcept { return agent_.gamma; }
    double x0() const noexcept { return agent_.x0; }
    double horizon() const noexcept { return agent_.horizon_T; }

    friend ProblemSpec validate(const MarketParams&, const EndowmentParams&, const AgentParams&);

private:
    ProblemSpec() = default;

    MarketParams market_;
    EndowmentParams endowment_;
    AgentParams agent_;
    double theta_ = 0.0;
    double kappa_ = 0.0;
};

/// Throws Error with a field-specific code on the first violated constraint.
ProblemSpec validate(const MarketParams& market, const EndowmentParams& endowment,
                     const AgentParams& agent);

double market_price_of_risk(const MarketParams& market);

}  // namespace endow_opt
