#include "endow_opt/closedform.hpp"

#include <cmath>
#include <string>

namespace endow_opt {
namespace {

void check_time(const ProblemSpec& spec, double t) {
    if (!(t >= 0.0 && t <= spec.horizon())) {
        throw Error(ErrorCode::TimeOutOfRange,
                    "t = " + std::to_string(t) + " outside [0, " + std::to_string(spec.horizon()) + "]");
    }
}

void check_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw Error(ErrorCode::ArgumentNotPositive, std::string(what) + " must be positive and finite");
    }
}

// r + theta^2 / (2 gamma)
double power_deflator_rate(const ProblemSpec& spec) {
    return spec.r() + spec.theta() * spec.theta() / (2.0 * spec.gamma());
}

// base^power for base > 0, through a guarded exponential.
double guarded_pow(double base, double power, const char* what) {
    return guarded_exp(power * std::log(base), what);
}

}  // namespace

double guarded_exp(double exponent, const char* what) {
    if (!(std::fabs(exponent) <= kMaxExponent)) {
        throw Error(ErrorCode::Overflow,
                    std::string(what) + ": exponent " + std::to_string(exponent) + " exceeds guard");
    }
    return std::exp(exponent);
}

double growth_factor(double k, double tau) {
    const double z = k * tau;
    if (std::fabs(z) < 1e-12) return tau * (1.0 + 0.5 * z);
    if (!(std::fabs(z) <= kMaxExponent)) {
        throw Error(ErrorCode::Overflow, "growth factor: exponent " + std::to_string(z) + " exceeds guard");
    }
    return std::expm1(z) / k;
}

double endowment_price(const ProblemSpec& spec, double t) {
    check_time(spec, t);
    return spec.e0() * growth_factor(spec.kappa(), t);
}

// beta(T) = 0, beta'(t) = -exp(kappa (T - t)), and beta -> T - t as kappa -> 0.
double beta(const ProblemSpec& spec, double t) {
    check_time(spec, t);
    return growth_factor(spec.kappa(), spec.horizon() - t);
}

double alpha(const ProblemSpec& spec, double t) {
    check_time(spec, t);
    const double g = spec.gamma();
    const double effective = spec.x0() + endowment_price(spec, spec.horizon());
    return effective * guarded_exp(-(1.0 - g) / g * power_deflator_rate(spec) * t, "alpha");
}

double deflator_power_moment(const ProblemSpec& spec) {
    const double g = spec.gamma();
    return guarded_exp((1.0 - g) / g * power_deflator_rate(spec) * spec.horizon(),
                       "deflator power moment");
}

double lagrange_multiplier(const ProblemSpec& spec) {
    const double g = spec.gamma();
    const double effective = spec.x0() + endowment_price(spec, spec.horizon());
    const double exponent =
        (1.0 - g) * power_deflator_rate(spec) * spec.horizon() - g * std::log(effective);
    return guarded_exp(exponent, "lagrange multiplier");
}

double chi(const ProblemSpec& spec, double lam) {
    check_positive(lam, "lam");
    const double g = spec.gamma();
    const double exponent =
        -std::log(lam) / g + (1.0 - g) / g * power_deflator_rate(spec) * spec.horizon();
    return guarded_exp(exponent, "chi");
}

DualSolution solve_dual(const ProblemSpec& spec) {
    DualSolution out;
    out.endow_price_T = endowment_price(spec, spec.horizon());
    out.effective_wealth = spec.x0() + out.endow_price_T;
    out.lagrange_multiplier = lagrange_multiplier(spec);
    return out;
}

double utility(const ProblemSpec& spec, double wealth) {
    check_positive(wealth, "wealth");
    const double g = spec.gamma();
    return guarded_pow(wealth, 1.0 - g, "utility") / (1.0 - g);
}

double inverse_marginal(const ProblemSpec& spec, double y) {
    check_positive(y, "y");
    return guarded_pow(y, -1.0 / spec.gamma(), "inverse marginal utility");
}

double dual_utility(const ProblemSpec& spec, double y) {
    check_positive(y, "y");
    const double g = spec.gamma();
    return g / (1.0 - g) * guarded_pow(y, -(1.0 - g) / g, "dual utility");
}

double optimal_terminal_wealth(const ProblemSpec& spec, double h_T) {
    check_positive(h_T, "h_T");
    const double g = spec.gamma();
    const double effective = spec.x0() + endowment_price(spec, spec.horizon());
    const double exponent = -(1.0 - g) / g * power_deflator_rate(spec) * spec.horizon() +
                            std::log(effective) - std::log(h_T) / g;
    return guarded_exp(exponent, "optimal terminal wealth");
}

double optimal_wealth(const ProblemSpec& spec, double t, double h_t, double e_t) {
    check_positive(h_t, "h_t");
    check_positive(e_t, "e_t");
    const double scaled = alpha(spec, t) * guarded_pow(h_t, -1.0 / spec.gamma(), "optimal wealth");
    return scaled - beta(spec, t) * e_t;
}

double kstar(const ProblemSpec& spec, double t, double e_t, double h_t) {
    check_positive(h_t, "h_t");
    check_positive(e_t, "e_t");
    const double g = spec.gamma();
    const double theta = spec.theta();
    const double endowment_term = (theta - spec.eta()) * beta(spec, t) * e_t * h_t;
    const double wealth_term = (1.0 - g) / g * theta * alpha(spec, t) *
                               guarded_pow(h_t, -(1.0 - g) / g, "kstar");
    return endowment_term + wealth_term;
}

double merton_fraction(const ProblemSpec& spec) {
    return spec.theta() / (spec.gamma() * spec.sigma());
}

// pi_M - eta/sigma, written so its sign is exactly the sign of theta - gamma eta.
double shift_scale(const ProblemSpec& spec) {
    return (spec.theta() - spec.gamma() * spec.eta()) / (spec.gamma() * spec.sigma());
}

double optimal_fraction(const ProblemSpec& spec, double t, double wealth, double endow) {
    check_positive(wealth, "wealth");
    check_positive(endow, "endow");
    return merton_fraction(spec) + beta(spec, t) * shift_scale(spec) * (endow / wealth);
}

StrategyCoefficients strategy_coefficients(const ProblemSpec& spec) {
    StrategyCoefficients out;
    out.pi_merton = merton_fraction(spec);
    out.shift_scale = shift_scale(spec);
    out.beta_fn = [spec](double t) { return beta(spec, t); };
    out.alpha_fn = [spec](double t) { return alpha(spec, t); };
    return out;
}

double primal_value(const ProblemSpec& spec) {
    const double g = spec.gamma();
    const double effective = spec.x0() + endowment_price(spec, spec.horizon());
    const double exponent =
        (1.0 - g) * std::log(effective) + (1.0 - g) * power_deflator_rate(spec) * spec.horizon();
    return guarded_exp(exponent, "primal value") / (1.0 - g);
}

double dual_value(const ProblemSpec& spec, double lam) {
    check_positive(lam, "lam");
    const double g = spec.gamma();
    const double effective = spec.x0() + endowment_price(spec, spec.horizon());
    const double exponent = -(1.0 - g) / g * std::log(lam) +
                            (1.0 - g) / g * power_deflator_rate(spec) * spec.horizon();
    return g / (1.0 - g) * guarded_exp(exponent, "dual value") + lam * effective;
}

}  // namespace endow_opt
