#pragma once

#include <functional>

#include "endow_opt/model.hpp"

// Analytic solution of the power-utility investment problem with a geometric
// Brownian endowment perfectly correlated with the risky asset.
//
// Notation used below:
//   c     = r + theta^2 / (2 gamma)
//   P_t   = E[int_0^t E_s H_s ds]                  (endowment price)
//   beta  = (exp(kappa (T - t)) - 1) / kappa       (forward endowment annuity)
//   alpha = (x + P_T) exp(-(1 - gamma)/gamma * c * t)
//
// Every exponential is guarded: an exponent with magnitude above
// kMaxExponent raises ErrorCode::Overflow instead of returning inf or 0.

namespace endow_opt {

inline constexpr double kMaxExponent = 700.0;

/// exp(x), throwing Overflow when |x| > kMaxExponent.
double guarded_exp(double exponent, const char* what);

/// (exp(k * tau) - 1) / k, with the k -> 0 limit handled exactly.
double growth_factor(double k, double tau);

struct DualSolution {
    double lagrange_multiplier = 0.0;
    double endow_price_T = 0.0;
    double effective_wealth = 0.0;  // x0 + endow_price_T
};

struct StrategyCoefficients {
    double pi_merton = 0.0;
    double shift_scale = 0.0;  // pi_merton - eta / sigma
    std::function<double(double)> beta_fn;
    std::function<double(double)> alpha_fn;
};

double endowment_price(const ProblemSpec& spec, double t);
double beta(const ProblemSpec& spec, double t);
double alpha(const ProblemSpec& spec, double t);

/// E[H_T^{-(1-gamma)/gamma}] = exp((1 - gamma)/gamma * c * T)
double deflator_power_moment(const ProblemSpec& spec);

double lagrange_multiplier(const ProblemSpec& spec);
double chi(const ProblemSpec& spec, double lam);
DualSolution solve_dual(const ProblemSpec& spec);

double utility(const ProblemSpec& spec, double wealth);
double inverse_marginal(const ProblemSpec& spec, double y);
double dual_utility(const ProblemSpec& spec, double y);

double optimal_terminal_wealth(const ProblemSpec& spec, double h_T);
double optimal_wealth(const ProblemSpec& spec, double t, double h_t, double e_t);
double kstar(const ProblemSpec& spec, double t, double e_t, double h_t);

double merton_fraction(const ProblemSpec& spec);
double shift_scale(const ProblemSpec& spec);
/// pi_M + beta(t) (pi_M - eta/sigma) endow / wealth
double optimal_fraction(const ProblemSpec& spec, double t, double wealth, double endow);
StrategyCoefficients strategy_coefficients(const ProblemSpec& spec);

/// E[U(xi*)] in closed form.
double primal_value(const ProblemSpec& spec);
/// E[U~(lam H_T)] + lam (x + P_T)
double dual_value(const ProblemSpec& spec, double lam);

}  // namespace endow_opt
