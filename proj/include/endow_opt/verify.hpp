#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "endow_opt/simulate.hpp"

// Statistical and algebraic certification of the closed-form solution.
// Statistical checks use k * SE with k = kSigmaLevel; exact checks compare a
// relative residual to kExactTolerance.

namespace endow_opt {

inline constexpr double kSigmaLevel = 3.0;
inline constexpr double kExactTolerance = 1e-10;
/// A statistical check fails if more than this share of paths was excluded.
inline constexpr double kMaxExcludedShare = 0.01;
inline constexpr double kMinReplicationOrder = 0.4;

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_effective = 0;
    std::size_t n_total = 0;
    bool pass = false;
    std::string criterion;

    std::size_t excluded() const noexcept { return n_total - n_effective; }
};

struct Residual {
    double value = 0.0;
    double tolerance = kExactTolerance;
    bool pass = false;
};

/// Sample mean and standard error of `samples`, summed in index order.
Estimate mean_estimate(const std::vector<double>& samples, std::size_t n_total);

/// True when exclusions are within kMaxExcludedShare (and so n_effective is
/// comfortably above half the paths).
bool exclusions_acceptable(const Estimate& estimate);

// --- budget constraint ------------------------------------------------------

/// Per-path trapezoid approximation of int_0^{t_k} E_s H_s ds at the requested
/// grid indices; result[i][p] is the integral up to steps[i] on path p.
std::vector<std::vector<double>> discounted_endowment_integrals(const PathEnsemble& ensemble,
                                                                const std::vector<std::size_t>& steps,
                                                                const ExecutionOptions& exec = {});

/// MC estimate of E[X_t H_t - int_0^t E H ds] at grid index k. Passes iff the
/// estimate is <= x0 + 3 SE and, when `martingale` is set, |estimate - x0| <= 3 SE.
Estimate budget_check(const PathEnsemble& ensemble, const WealthEnsemble& wealth, std::size_t k,
                      bool martingale, const ExecutionOptions& exec = {});

Estimate budget_check(const PathEnsemble& ensemble, const Strategy& strategy, std::size_t k,
                      const ExecutionOptions& exec = {});

// --- duality ----------------------------------------------------------------

/// |dual_value(scale * lambda*) - primal_value| / |primal_value|
Residual duality_gap(const ProblemSpec& spec, double lagrange_scale = 1.0);

/// |chi(scale * lambda*) - (x + P_T)| / (x + P_T)
Residual foc_check(const ProblemSpec& spec, double lagrange_scale = 1.0);

struct DualityMonteCarlo {
    Estimate primal;    // E[U(xi*)], pass iff within 3 SE of the closed form
    Estimate dual;      // E[U~(lam H_T)] + lam (x + P_T), pass iff within 3 SE of the closed form
    Estimate gap;       // dual - primal per path, pass iff |gap| <= 3 SE
    double primal_closed_form = 0.0;
    double dual_closed_form = 0.0;
};

DualityMonteCarlo duality_gap_mc(const PathEnsemble& ensemble, double lagrange_scale = 1.0,
                                 const ExecutionOptions& exec = {});

// --- replication ------------------------------------------------------------

struct ReplicationRung {
    std::size_t n_steps = 0;
    double rms_relative_error = 0.0;
    std::size_t violations = 0;
    std::optional<double> order;  // against the previous rung
};

struct ReplicationReport {
    std::vector<ReplicationRung> rungs;
    bool strictly_decreasing = false;
    double min_order = 0.0;
    bool pass = false;
    std::string message;
};

/// Euler wealth under the optimal rule against xi*(H_T), over a ladder of grid
/// sizes that all divide fine.n_steps; coarser rungs reuse the fine Brownian
/// paths. Throws InvalidLadder unless the ladder is strictly increasing.
ReplicationReport replication_check(const PathEnsemble& fine, const std::vector<std::size_t>& ladder,
                                    const ExecutionOptions& exec = {});

/// Same as replication_check but never throws on a bad ladder; the report is
/// flagged as failed instead.
ReplicationReport convergence_study(const PathEnsemble& fine, const std::vector<std::size_t>& ladder,
                                    const ExecutionOptions& exec = {});

// --- martingale representation ---------------------------------------------

struct KstarStepCheck {
    std::size_t step = 0;
    /// Regression of dM* on K~ dW, where K~ = E[dM* dW | F_k] / dt is the
    /// one-step covariance of the grid-sampled martingale (K~ -> K* as
    /// dt -> 0). Pass iff |slope - 1| <= 3 SE.
    Estimate slope;
    /// max over paths of |K~ / K* - 1| at this step
    double step_offset = 0.0;
    Estimate drift;  // mean dM*; pass iff |mean| <= 3 SE
};

struct KstarReport {
    Residual algebraic;  // max relative residual of sigma pi* X* H - theta X* H = K*
    std::size_t algebraic_points = 0;
    std::vector<KstarStepCheck> steps;
    bool pass = false;
};

KstarReport kstar_identity_check(const PathEnsemble& ensemble, const std::vector<std::size_t>& steps,
                                 const ExecutionOptions& exec = {});

// --- dominance --------------------------------------------------------------

struct UtilitySample {
    std::vector<double> values;  // U(X_T) per path, NaN where the path was excluded
    std::size_t floored = 0;     // terminal wealth raised to where |U| = e^300
};

UtilitySample terminal_utility(const ProblemSpec& spec, const WealthEnsemble& wealth);

struct DominanceResult {
    std::string challenger;
    Estimate delta;  // E[U(X*_T)] - E[U(X^c_T)], pass iff >= -3 SE
    std::size_t optimal_violations = 0;
    std::size_t challenger_violations = 0;
    std::size_t floored = 0;
};

/// Common random numbers: both strategies run on the same ensemble.
DominanceResult dominance_test(const PathEnsemble& ensemble, const Strategy& challenger,
                               const ExecutionOptions& exec = {});
DominanceResult dominance_test(const PathEnsemble& ensemble, const UtilitySample& optimal,
                               std::size_t optimal_violations, const Strategy& challenger,
                               const ExecutionOptions& exec = {});

/// merton, constant(0), constant(pi_M +/- 0.25), optimal with its shift term
/// scaled by 1 +/- 0.2.
std::vector<Strategy> default_challengers(const ProblemSpec& spec);

// --- full battery -----------------------------------------------------------

struct VerifyOptions {
    std::vector<std::size_t> ladder{64, 128, 256, 512};
    std::vector<double> budget_time_fractions{0.25, 0.5, 1.0};
    std::vector<double> kstar_time_fractions{0.0, 0.25, 0.5, 0.75};
    double lagrange_scale = 1.0;  // != 1 tampers lambda* (sensitivity control)

    bool operator==(const VerifyOptions&) const = default;
};

struct CheckRecord {
    std::string name;
    std::string kind;  // "exact" | "statistical" | "convergence"
    bool pass = false;
    std::optional<Estimate> estimate;
    std::optional<Residual> residual;
    std::optional<ReplicationReport> replication;
    std::optional<KstarReport> kstar;
};

struct VerificationReport {
    ProblemSpec spec;
    GridConfig grid;
    VerifyOptions options;
    std::vector<CheckRecord> checks;
    bool pass = false;
    std::string rng_identity;
};

/// Runs budget, foc, exact and MC duality, replication ladder, K* identity and
/// the dominance family on one ensemble of size `grid`. The replication ladder
/// is run on a separate ensemble with the same seed at the finest rung.
VerificationReport run_verification(const ProblemSpec& spec, const GridConfig& grid,
                                    const VerifyOptions& options = {},
                                    const ExecutionOptions& exec = {});

}  // namespace endow_opt
