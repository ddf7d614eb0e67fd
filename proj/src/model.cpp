#include "endow_opt/model.hpp"

#include <cmath>
#include <initializer_list>
#include <utility>

namespace endow_opt {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonFiniteField: return "NonFiniteField";
        case ErrorCode::SigmaNotPositive: return "SigmaNotPositive";
        case ErrorCode::EtaNotPositive: return "EtaNotPositive";
        case ErrorCode::E0NotPositive: return "E0NotPositive";
        case ErrorCode::X0NotPositive: return "X0NotPositive";
        case ErrorCode::HorizonNotPositive: return "HorizonNotPositive";
        case ErrorCode::GammaNotPositive: return "GammaNotPositive";
        case ErrorCode::GammaExcluded: return "GammaExcluded";
        case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
        case ErrorCode::ArgumentNotPositive: return "ArgumentNotPositive";
        case ErrorCode::Overflow: return "Overflow";
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::MemoryBudgetExceeded: return "MemoryBudgetExceeded";
        case ErrorCode::StrategyFailure: return "StrategyFailure";
        case ErrorCode::NoValidPaths: return "NoValidPaths";
        case ErrorCode::InvalidLadder: return "InvalidLadder";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

double market_price_of_risk(const MarketParams& market) {
    return market.lambda_excess / market.sigma;
}

ProblemSpec validate(const MarketParams& market, const EndowmentParams& endowment,
                     const AgentParams& agent) {
    const std::initializer_list<std::pair<const char*, double>> fields = {
        {"market.r", market.r},
        {"market.lambda_excess", market.lambda_excess},
        {"market.sigma", market.sigma},
        {"endowment.mu", endowment.mu},
        {"endowment.eta", endowment.eta},
        {"endowment.e0", endowment.e0},
        {"agent.gamma", agent.gamma},
        {"agent.x0", agent.x0},
        {"agent.horizon_T", agent.horizon_T},
    };
    for (const auto& [name, value] : fields) {
        if (!std::isfinite(value)) {
            throw Error(ErrorCode::NonFiniteField, std::string(name) + " must be finite");
        }
    }
    if (!(market.sigma > 0.0)) throw Error(ErrorCode::SigmaNotPositive, "market.sigma must be > 0");
    if (!(endowment.eta > 0.0)) throw Error(ErrorCode::EtaNotPositive, "endowment.eta must be > 0");
    if (!(endowment.e0 > 0.0)) throw Error(ErrorCode::E0NotPositive, "endowment.e0 must be > 0");
    if (!(agent.x0 > 0.0)) throw Error(ErrorCode::X0NotPositive, "agent.x0 must be > 0");
    if (!(agent.horizon_T > 0.0)) {
        throw Error(ErrorCode::HorizonNotPositive, "agent.horizon_T must be > 0");
    }
    if (!(agent.gamma > 0.0)) throw Error(ErrorCode::GammaNotPositive, "agent.gamma must be > 0");
    if (agent.gamma == 1.0) {
        throw Error(ErrorCode::GammaExcluded, "agent.gamma = 1 (log utility) is not supported");
    }

    ProblemSpec spec;
    spec.market_ = market;
    spec.endowment_ = endowment;
    spec.agent_ = agent;
    spec.theta_ = market_price_of_risk(market);
    spec.kappa_ = endowment.mu - market.r - endowment.eta * spec.theta_;
    return spec;
}

}  // namespace endow_opt
