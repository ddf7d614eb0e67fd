#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace endow_opt {

enum class ErrorCode {
    // parameter validation
    NonFiniteField,
    SigmaNotPositive,
    EtaNotPositive,
    E0NotPositive,
    X0NotPositive,
    HorizonNotPositive,
    GammaNotPositive,
    GammaExcluded,
    // evaluation
    TimeOutOfRange,
    ArgumentNotPositive,
    Overflow,
    // simulation / verification
    InvalidGrid,
    MemoryBudgetExceeded,
    StrategyFailure,
    NoValidPaths,
    InvalidLadder,
    // configuration / io
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a code so callers (and the CLI
/// exit-code mapping) can branch on it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace endow_opt
