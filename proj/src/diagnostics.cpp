#include "robustsize/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "robustsize/covariance.hpp"
#include "robustsize/rng.hpp"

namespace robustsize {

namespace {

constexpr const char* kRejectAtLimit = "reject-at-limit";
constexpr const char* kAcceptAtLimit = "accept-at-limit";
constexpr const char* kZeroVariance = "zero-variance-at-limit";
constexpr const char* kKBound = "k-bound";
constexpr const char* kTie = "tie";
constexpr const char* kNone = "none";
constexpr const char* kExcluded = "excluded";

bool is_tie(double t, double c, const Tolerances& tol) {
    return std::abs(t - c) <= tol.boundary * (1.0 + c);
}

bool rbeta_nonzero(const LinearModel& model, const Restriction& restriction, const Vector& z,
                   const Tolerances& tol) {
    const Vector g = restriction.R * model.ols(z);
    const double scale = restriction.R.cwiseAbs().maxCoeff() * z.norm();
    return !near_zero(g.cwiseAbs().maxCoeff(), scale, tol.membership);
}

bool matrix_is_zero(const Matrix& m, double scale, const Tolerances& tol) {
    if (m.size() == 0) return true;
    return near_zero(m.cwiseAbs().maxCoeff(), scale, tol.membership);
}

std::string comparison_of(const TestOutcome& outcome, double c, const Tolerances& tol) {
    if (outcome.exceptional) return kExcluded;
    if (is_tie(outcome.value, c, tol)) return kTie;
    return outcome.value > c ? "above" : "below";
}

/// Pattern of the concentration conditions at one direction for the
/// nonparametric families.
EvidenceRow classify_nonparametric(const TestDefinition& def, const LinearModel& model,
                                   const Restriction& restriction, const Vector& mu0,
                                   const Vector& z, const std::string& label,
                                   const Tolerances& tol) {
    EvidenceRow row;
    row.statistic = test_kind_name(def.kind);
    row.direction = label;
    row.critical = def.critical;

    bool rank_cond = false;
    bool zero_cond = false;
    if (def.kind == TestKind::Eicker) {
        const bool in_span = span_membership(model, z, tol.membership);
        rank_cond = !in_span;
        zero_cond = in_span;
        row.rank_b = -1;
    } else {
        Matrix b = b_matrix(model, restriction, z);
        const Matrix gram_rt = model.solve_gram(restriction.R.transpose());
        const Matrix a = gram_rt.transpose() * model.design().transpose();
        // Zero is judged against the input scale ||z||, not against the
        // residual itself, so directions inside the design span classify as
        // B = 0 instead of as a spuriously full-rank noise matrix.
        double scale = a.cwiseAbs().maxCoeff() * z.norm();
        if (def.kind == TestKind::GeneralQuadratic) {
            b = (b * def.wstar).eval();
            scale *= std::max(def.wstar.cwiseAbs().maxCoeff(), 1.0);
        }
        zero_cond = matrix_is_zero(b, scale, tol);
        row.rank_b = zero_cond ? 0 : numerical_rank(b, tol);
        rank_cond = row.rank_b == restriction.q();
    }

    const TestOutcome outcome = evaluate(def, model, restriction, z + mu0, tol);
    row.t_value = outcome.value;
    if (outcome.exceptional) row.flags.push_back(outcome.exceptional_set);
    row.comparison = comparison_of(outcome, def.critical, tol);

    if (zero_cond && rbeta_nonzero(model, restriction, z, tol)) {
        row.pattern = kZeroVariance;
    } else if (rank_cond && !outcome.exceptional) {
        if (is_tie(outcome.value, def.critical, tol)) {
            row.pattern = kTie;
        } else {
            row.pattern = outcome.value > def.critical ? kRejectAtLimit : kAcceptAtLimit;
        }
    } else {
        row.pattern = kNone;
    }
    return row;
}

bool size_control_preconditions(const LinearModel& model, const Restriction& restriction,
                                const Tolerances& tol) {
    const Vector ep = e_plus(model.n());
    const Vector em = e_minus(model.n());
    return span_membership(model, ep, tol.membership) &&
           span_membership(model, em, tol.membership) &&
           !rbeta_nonzero(model, restriction, ep, tol) &&
           !rbeta_nonzero(model, restriction, em, tol);
}

Verdict assemble_verdict(const std::vector<EvidenceRow>& rows, bool positive_case,
                         std::vector<Verdict>& secondary) {
    bool tie = false;
    bool size_one = false;
    bool power_zero = false;
    for (const auto& row : rows) {
        if (row.pattern == kTie) tie = true;
        if (row.pattern == kRejectAtLimit || row.pattern == kZeroVariance) size_one = true;
        if (row.pattern == kAcceptAtLimit) power_zero = true;
    }
    Verdict verdict = Verdict::Inconclusive;
    if (tie) {
        verdict = Verdict::BoundaryTie;
        if (size_one) secondary.push_back(Verdict::SizeOne);
        if (power_zero) secondary.push_back(Verdict::PowerZeroAndBiased);
    } else if (size_one) {
        verdict = Verdict::SizeOne;
        if (power_zero) secondary.push_back(Verdict::PowerZeroAndBiased);
    } else if (power_zero) {
        verdict = Verdict::PowerZeroAndBiased;
    } else if (positive_case) {
        verdict = Verdict::PositiveCase;
    }
    return verdict;
}

/// Trivial-breakdown check for the general quadratic family: the variance
/// estimator is singular either almost nowhere or everywhere, so a handful of
/// generic draws decides which.
bool gq_breaks_down(const TestDefinition& def, const LinearModel& model,
                    const Restriction& restriction, const Tolerances& tol) {
    auto engine = substream(0x5eedu, 0xb2eaLL, 0);
    for (int probe = 0; probe < 4; ++probe) {
        Vector y(model.n());
        fill_standard_normal(engine, y);
        const Matrix bw = b_matrix(model, restriction, y) * def.wstar;
        if (numerical_rank(bw, tol) == restriction.q()) return false;
    }
    return true;
}

Vector resolve_mu0(const LinearModel& model, const Restriction& restriction,
                   const Vector* override_mu0) {
    if (override_mu0) return *override_mu0;
    return null_representative(model, restriction).mu0;
}

}  // namespace

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::SizeOne: return "SizeOne";
        case Verdict::PowerZeroAndBiased: return "PowerZeroAndBiased";
        case Verdict::TrivialBreakdown: return "TrivialBreakdown";
        case Verdict::PositiveCase: return "PositiveCase";
        case Verdict::BoundaryTie: return "BoundaryTie";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

DiagnosticReport audit_ar1_weighted(const LinearModel& model, const Restriction& restriction,
                                    const TestDefinition& def, Tolerances tol,
                                    const Vector* mu0_override) {
    if (def.adjusted) {
        TestDefinition plain = def;
        plain.adjusted.reset();
        LinearModel enlarged(def.adjusted->xbar, tol);
        Restriction enlarged_restriction(def.adjusted->rbar, def.adjusted->rhs, tol);
        return audit_ar1_weighted(enlarged, enlarged_restriction, plain, tol, mu0_override);
    }
    if (def.kind != TestKind::WeightedAutocov && def.kind != TestKind::GeneralQuadratic &&
        def.kind != TestKind::Eicker) {
        throw std::invalid_argument("this audit covers the nonparametric families only");
    }

    DiagnosticReport report;
    report.theorem = "ar1-concentration";
    if (def.kind == TestKind::WeightedAutocov) {
        report.aw = check_weight_pd(lag_window_weights(def.window, model.n()));
        if (report.aw != WeightClass::PositiveDefinite) {
            report.notes.push_back("weight matrix is not positive definite; the weighted "
                                   "autocovariance theory needs it");
        }
    }

    if (def.kind != TestKind::Eicker) {
        const bool randx = def.kind == TestKind::WeightedAutocov
                               ? check_r_and_x(model, restriction).verdict
                               : !gq_breaks_down(def, model, restriction, tol);
        report.r_and_x = randx;
        if (!randx) {
            report.verdict = Verdict::TrivialBreakdown;
            report.theorem = "variance-degenerate-everywhere";
            return report;
        }
    }

    const Vector mu0 = resolve_mu0(model, restriction, mu0_override);
    report.evidence.push_back(classify_nonparametric(def, model, restriction, mu0,
                                                     e_plus(model.n()), "e+", tol));
    report.evidence.push_back(classify_nonparametric(def, model, restriction, mu0,
                                                     e_minus(model.n()), "e-", tol));
    const bool positive = size_control_preconditions(model, restriction, tol);
    report.verdict = assemble_verdict(report.evidence, positive, report.secondary);
    if (report.verdict == Verdict::PositiveCase) report.theorem = "ar1-size-control";
    return report;
}

DiagnosticReport audit_ar2(const LinearModel& model, const Restriction& restriction,
                           const TestDefinition& def, const std::vector<double>& nu_grid,
                           int direction_samples, std::uint64_t seed, Tolerances tol,
                           const Vector* mu0_override) {
    if (model.n() < 3) throw std::invalid_argument("the AR(2) audit needs n >= 3");
    if (def.adjusted) {
        TestDefinition plain = def;
        plain.adjusted.reset();
        LinearModel enlarged(def.adjusted->xbar, tol);
        Restriction enlarged_restriction(def.adjusted->rbar, def.adjusted->rhs, tol);
        return audit_ar2(enlarged, enlarged_restriction, plain, nu_grid, direction_samples, seed,
                         tol, mu0_override);
    }
    if (direction_samples < 1) throw std::invalid_argument("need at least one direction sample");

    DiagnosticReport report;
    report.theorem = "ar2-harmonic-concentration";
    if (def.kind == TestKind::WeightedAutocov) {
        report.aw = check_weight_pd(lag_window_weights(def.window, model.n()));
        const bool randx = check_r_and_x(model, restriction).verdict;
        report.r_and_x = randx;
        if (!randx) {
            report.verdict = Verdict::TrivialBreakdown;
            report.theorem = "variance-degenerate-everywhere";
            return report;
        }
    }

    const Vector mu0 = resolve_mu0(model, restriction, mu0_override);
    for (std::size_t g = 0; g < nu_grid.size(); ++g) {
        const HarmonicSpace space = harmonic_basis(model.n(), nu_grid[g]);
        const int samples = space.basis.cols() == 1 ? 1 : direction_samples;
        EvidenceRow representative;
        bool unanimous = true;
        for (int s = 0; s < samples; ++s) {
            Vector z;
            if (space.basis.cols() == 1) {
                z = space.basis.col(0);
            } else {
                auto engine = substream(seed, 0xa52u + static_cast<std::uint64_t>(g),
                                        static_cast<std::uint64_t>(s));
                Vector coeff(2);
                fill_standard_normal(engine, coeff);
                z = space.basis * coeff;
                const double norm = z.norm();
                if (norm < 1e-12) { --s; continue; }
                z /= norm;
            }
            EvidenceRow row = classify_nonparametric(def, model, restriction, mu0, z,
                                                     "E(" + std::to_string(space.nu) + ")", tol);
            if (s == 0) {
                representative = row;
            } else if (row.pattern != representative.pattern) {
                unanimous = false;
                break;
            }
        }
        if (!unanimous) {
            representative.pattern = kNone;
            representative.comparison = "mixed";
            representative.flags.push_back("non-unanimous-samples");
        }
        report.evidence.push_back(representative);
    }
    report.verdict = assemble_verdict(report.evidence, false, report.secondary);
    return report;
}

DiagnosticReport audit_gls(const LinearModel& model, const Restriction& restriction,
                           const RhoEstimatorSpec& spec, double critical, Tolerances tol,
                           const Vector* mu0_override) {
    if (!(critical > 0.0)) throw std::invalid_argument("critical value must be positive");
    if (model.k() > spec.a2(model.n()) - spec.a1) {
        throw std::invalid_argument("the GLS audit needs k <= a2 - a1");
    }
    const bool yule_walker = spec.a1 == 1 && spec.a2_from_n == 0;

    DiagnosticReport report;
    report.theorem = "gls-ar1-concentration";
    const Vector mu0 = resolve_mu0(model, restriction, mu0_override);
    const Vector directions[2] = {e_plus(model.n()), e_minus(model.n())};
    const char* labels[2] = {"e+", "e-"};

    for (int which = 0; which < 2; ++which) {
        const Vector& z = directions[which];
        const bool in_span = span_membership(model, z, tol.membership);
        const bool loads = rbeta_nonzero(model, restriction, z, tol);

        for (GlsKind kind : {GlsKind::Fgls, GlsKind::OlsAr1}) {
            EvidenceRow row;
            row.statistic = kind == GlsKind::Fgls ? "fgls" : "ols-ar1";
            row.direction = labels[which];
            row.critical = critical;
            row.pattern = kNone;

            bool excluded;
            std::string excluded_set;
            if (kind == GlsKind::Fgls) {
                const FglsComponents parts = fgls_components(model, restriction, z, spec);
                excluded = parts.flags.any();
                excluded_set = parts.flags.first_set();
            } else {
                const OlsAr1Omega parts = ols_ar1_omega(model, restriction, z, spec);
                excluded = parts.n0 || parts.n0_star;
                excluded_set = parts.n0 ? "N0" : "N0*";
            }

            if (in_span && loads) {
                // The direction sits inside the design span, so the test
                // statistic degenerates there and only the bracket constants
                // decide; the Yule-Walker estimator pins them at one.
                row.pattern = yule_walker ? kRejectAtLimit : kKBound;
                row.comparison = kExcluded;
                if (excluded) row.flags.push_back(excluded_set);
                if (!yule_walker) {
                    row.flags.push_back("k-bound");
                }
                report.evidence.push_back(row);
                continue;
            }

            if (excluded) {
                row.comparison = kExcluded;
                row.flags.push_back(excluded_set);
                report.evidence.push_back(row);
                continue;
            }

            TestDefinition def;
            def.kind = kind == GlsKind::Fgls ? TestKind::Fgls : TestKind::OlsAr1;
            def.rho = spec;
            def.critical = critical;
            const TestOutcome outcome = evaluate(def, model, restriction, z + mu0, tol);
            row.t_value = outcome.value;
            if (outcome.exceptional) row.flags.push_back(outcome.exceptional_set);
            row.comparison = comparison_of(outcome, critical, tol);
            if (!outcome.exceptional) {
                if (is_tie(outcome.value, critical, tol)) {
                    row.pattern = kTie;
                } else {
                    row.pattern = outcome.value > critical ? kRejectAtLimit : kAcceptAtLimit;
                }
            }
            report.evidence.push_back(row);
        }
    }

    bool has_k_bound = false;
    for (const auto& row : report.evidence) has_k_bound = has_k_bound || row.pattern == kKBound;
    const bool positive = size_control_preconditions(model, restriction, tol);
    report.verdict = assemble_verdict(report.evidence, positive, report.secondary);
    if (report.verdict == Verdict::PositiveCase) report.theorem = "gls-ar1-size-control";
    if (has_k_bound) {
        report.notes.push_back("a concentration direction lies in the design span with a "
                               "nonzero tested coefficient; estimate_k_bounds brackets the "
                               "size/power gap there");
    }
    return report;
}

DiagnosticReport audit_het(const LinearModel& model, const Restriction& restriction,
                           const TestDefinition& def, Tolerances tol,
                           const Vector* mu0_override) {
    if (def.kind != TestKind::Het && def.kind != TestKind::UncorrectedF) {
        throw std::invalid_argument("this audit covers the heteroskedasticity-robust and "
                                    "uncorrected F statistics only");
    }
    DiagnosticReport report;
    report.theorem = def.kind == TestKind::Het ? "het-basis-concentration"
                                               : "f-basis-concentration";
    if (def.kind == TestKind::Het) {
        const bool randx = check_r_and_x(model, restriction).verdict;
        report.r_and_x = randx;
        if (!randx) {
            report.verdict = Verdict::TrivialBreakdown;
            report.theorem = "variance-degenerate-everywhere";
            return report;
        }
    }

    const Vector mu0 = resolve_mu0(model, restriction, mu0_override);
    const Eigen::Index n = model.n();
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector z = Vector::Zero(n);
        z[i] = 1.0;
        EvidenceRow row;
        row.statistic = test_kind_name(def.kind);
        row.direction = "e_" + std::to_string(i + 1);
        row.critical = def.critical;

        bool rank_cond;
        bool zero_cond;
        if (def.kind == TestKind::Het) {
            const Matrix b = b_matrix(model, restriction, z);
            const Matrix gram_rt = model.solve_gram(restriction.R.transpose());
            const Matrix a = gram_rt.transpose() * model.design().transpose();
            const double scale = a.cwiseAbs().maxCoeff() * z.norm();
            zero_cond = matrix_is_zero(b, scale, tol);
            row.rank_b = zero_cond ? 0 : numerical_rank(b, tol);
            rank_cond = row.rank_b == restriction.q();
        } else {
            const bool in_span = span_membership(model, z, tol.membership);
            rank_cond = !in_span;
            zero_cond = in_span;
            row.rank_b = -1;
        }

        const TestOutcome outcome = evaluate(def, model, restriction, z + mu0, tol);
        row.t_value = outcome.value;
        if (outcome.exceptional) row.flags.push_back(outcome.exceptional_set);
        row.comparison = comparison_of(outcome, def.critical, tol);

        if (zero_cond && rbeta_nonzero(model, restriction, z, tol)) {
            row.pattern = kZeroVariance;
        } else if (rank_cond && !outcome.exceptional) {
            if (is_tie(outcome.value, def.critical, tol)) {
                row.pattern = kTie;
            } else {
                row.pattern = outcome.value > def.critical ? kRejectAtLimit : kAcceptAtLimit;
            }
        } else {
            row.pattern = kNone;
        }
        report.evidence.push_back(row);
    }
    report.verdict = assemble_verdict(report.evidence, false, report.secondary);
    return report;
}

double genericity_probe(Eigen::Index n, Eigen::Index k, const Restriction& restriction,
                        const TestDefinition& def, int samples, std::uint64_t seed,
                        bool intercept, Tolerances tol) {
    if (samples < 1) throw std::invalid_argument("need at least one sample");
    if (restriction.R.cols() != k) throw std::invalid_argument("restriction width != k");
    int applies = 0;
    for (int s = 0; s < samples; ++s) {
        auto engine = substream(seed, 0x6e4eu, static_cast<std::uint64_t>(s));
        Matrix x(n, k);
        for (Eigen::Index j = 0; j < k; ++j) {
            Vector col(n);
            fill_standard_normal(engine, col);
            x.col(j) = col;
        }
        if (intercept) x.col(0) = e_plus(n);
        DiagnosticReport report;
        try {
            LinearModel model(x, tol);
            switch (def.kind) {
                case TestKind::WeightedAutocov:
                case TestKind::GeneralQuadratic:
                case TestKind::Eicker:
                    report = audit_ar1_weighted(model, restriction, def, tol);
                    break;
                case TestKind::Fgls:
                case TestKind::OlsAr1:
                    report = audit_gls(model, restriction, def.rho, def.critical, tol);
                    break;
                case TestKind::Het:
                case TestKind::UncorrectedF:
                    report = audit_het(model, restriction, def, tol);
                    break;
            }
        } catch (const std::invalid_argument&) {
            continue;  // rank-deficient draw: the audit does not apply
        }
        if (report.verdict != Verdict::Inconclusive && report.verdict != Verdict::BoundaryTie) {
            ++applies;
        }
    }
    return static_cast<double>(applies) / static_cast<double>(samples);
}

KBoundEstimate estimate_k_bounds(const LinearModel& model, const Restriction& restriction,
                                 const RhoEstimatorSpec& spec, GlsKind kind, int direction,
                                 std::int64_t reps, std::uint64_t seed, Tolerances tol) {
    if (direction != 1 && direction != -1) throw std::invalid_argument("direction must be +1 or -1");
    if (reps < 100) throw std::invalid_argument("need at least 100 replications");
    const Eigen::Index n = model.n();
    const Vector z = direction == 1 ? e_plus(n) : e_minus(n);
    if (!rbeta_nonzero(model, restriction, z, tol)) {
        throw std::invalid_argument("k-bound estimation needs R beta_hat(direction) != 0");
    }
    const Vector v = restriction.R * model.ols(z);

    // sqrt of z z' is z z' / ||z||, and the projected-limit matrix is psd.
    const Matrix sigma_bar_sqrt = z * z.transpose() / z.norm();
    const Matrix d_sqrt = symmetric_sqrt(ar1_limit_d(n, direction));
    const Matrix mix = sigma_bar_sqrt + d_sqrt;

    std::int64_t hits = 0;
    for (std::int64_t rep = 0; rep < reps; ++rep) {
        auto engine = substream(seed, 0x6b62u, static_cast<std::uint64_t>(rep));
        Vector g(n);
        fill_standard_normal(engine, g);
        const Vector w = mix * g;
        bool nonnegative;
        if (kind == GlsKind::Fgls) {
            const FglsComponents parts = fgls_components(model, restriction, w, spec);
            if (parts.flags.any()) {
                nonnegative = true;  // the statistic takes the value zero there
            } else {
                Eigen::SelfAdjointEigenSolver<Matrix> eig(parts.omega);
                const Vector t = eig.eigenvectors().transpose() * v;
                double s = 0;
                for (Eigen::Index i = 0; i < t.size(); ++i) s += t[i] * t[i] / eig.eigenvalues()[i];
                nonnegative = s >= 0;
            }
        } else {
            const OlsAr1Omega parts = ols_ar1_omega(model, restriction, w, spec);
            if (parts.n0 || parts.n0_star) {
                nonnegative = true;
            } else {
                Eigen::SelfAdjointEigenSolver<Matrix> eig(parts.omega);
                const Vector t = eig.eigenvectors().transpose() * v;
                double s = 0;
                for (Eigen::Index i = 0; i < t.size(); ++i) s += t[i] * t[i] / eig.eigenvalues()[i];
                nonnegative = s >= 0;
            }
        }
        if (nonnegative) ++hits;
    }

    KBoundEstimate out;
    out.reps = reps;
    out.seed = seed;
    const double p = static_cast<double>(hits) / static_cast<double>(reps);
    // The concentration span here is one-dimensional, so the minimizing and
    // the averaged indicator coincide: xi_bar(gamma) scales by gamma^2.
    out.k1 = p;
    out.k2 = p;
    out.se_k1 = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
    out.se_k2 = out.se_k1;
    return out;
}

}  // namespace robustsize
