#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robustsize/statistics.hpp"

namespace robustsize {

enum class Verdict {
    SizeOne,
    PowerZeroAndBiased,
    TrivialBreakdown,
    PositiveCase,
    BoundaryTie,
    Inconclusive,
};

const char* verdict_name(Verdict v);

/// One audited direction: the rank of B there, the statistic value against C,
/// any exceptional-set flags, and the pattern that fired.
struct EvidenceRow {
    std::string statistic;   // "weighted", "fgls", "ols-ar1", "het", "f", ...
    std::string direction;   // "e+", "e-", "E(0.7854)", "e_3"
    Eigen::Index rank_b = -1;  // -1 when the rank condition is not the criterion
    double t_value = 0;
    double critical = 0;
    std::string comparison;  // "above", "below", "tie", "excluded"
    std::vector<std::string> flags;
    std::string pattern;     // "reject-at-limit", "accept-at-limit",
                             // "zero-variance-at-limit", "k-bound", "none"
};

struct DiagnosticReport {
    Verdict verdict = Verdict::Inconclusive;
    std::vector<Verdict> secondary;
    std::string theorem;     // stable tag naming the applicable result
    std::vector<EvidenceRow> evidence;
    WeightClass aw = WeightClass::PositiveDefinite;
    bool r_and_x = true;
    std::vector<std::string> notes;
};

/// Audits the AR(1) singular-limit directions e+ and e- for the
/// nonparametric families (weighted autocovariance, general quadratic,
/// Eicker). mu0_override replaces the minimum-norm null representative; the
/// verdict must not depend on it.
DiagnosticReport audit_ar1_weighted(const LinearModel& model, const Restriction& restriction,
                                    const TestDefinition& def, Tolerances tol = {},
                                    const Vector* mu0_override = nullptr);

/// Audits the AR(2) harmonic limit spans E(nu) over a frequency grid;
/// interior frequencies are probed at `direction_samples` random unit
/// directions and a pattern is asserted only on unanimity.
DiagnosticReport audit_ar2(const LinearModel& model, const Restriction& restriction,
                           const TestDefinition& def, const std::vector<double>& nu_grid,
                           int direction_samples = 32, std::uint64_t seed = 0,
                           Tolerances tol = {}, const Vector* mu0_override = nullptr);

/// Audits both the feasible-GLS and the OLS-with-plugged-AR(1) statistics at
/// e+ and e-. The Yule-Walker estimator upgrades the degenerate-numerator
/// pattern to a definite size-one verdict; other index choices surface a
/// k-bound row for estimate_k_bounds.
DiagnosticReport audit_gls(const LinearModel& model, const Restriction& restriction,
                           const RhoEstimatorSpec& spec, double critical, Tolerances tol = {},
                           const Vector* mu0_override = nullptr);

/// Audits the heteroskedastic limit directions e_1..e_n for the Het families
/// and the plain F statistic (def.kind Het or UncorrectedF).
DiagnosticReport audit_het(const LinearModel& model, const Restriction& restriction,
                           const TestDefinition& def, Tolerances tol = {},
                           const Vector* mu0_override = nullptr);

/// Draws `samples` standard-normal designs (first column e+ when intercept),
/// audits each, and returns the fraction with a definite negative verdict.
double genericity_probe(Eigen::Index n, Eigen::Index k, const Restriction& restriction,
                        const TestDefinition& def, int samples, std::uint64_t seed,
                        bool intercept, Tolerances tol = {});

enum class GlsKind { Fgls, OlsAr1 };

struct KBoundEstimate {
    double k1 = 0;
    double k2 = 0;
    double se_k1 = 0;
    double se_k2 = 0;
    std::int64_t reps = 0;
    std::uint64_t seed = 0;
};

/// Monte Carlo estimate of the power/size bracket constants for the GLS
/// families at a concentration direction inside the design span: K2 averages
/// Pr(xi_bar(gamma) >= 0) over Gaussian gamma, K1 minimizes it over the unit
/// gamma grid. Requires R beta_hat(direction) != 0.
KBoundEstimate estimate_k_bounds(const LinearModel& model, const Restriction& restriction,
                                 const RhoEstimatorSpec& spec, GlsKind kind, int direction,
                                 std::int64_t reps, std::uint64_t seed, Tolerances tol = {});

}  // namespace robustsize
