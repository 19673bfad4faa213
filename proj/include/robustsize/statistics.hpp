#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "robustsize/estimators.hpp"

namespace robustsize {

enum class TestKind {
    WeightedAutocov,
    GeneralQuadratic,
    Eicker,
    Het,
    Fgls,
    OlsAr1,
    UncorrectedF,
};

const char* test_kind_name(TestKind kind);

/// Enlarged design used by the adjusted ("purged") statistic: columns e+
/// and/or e- appended so the statistic ignores the harmonic limit directions.
/// scenario 0 means the original design already satisfies the size-control
/// preconditions and no column is added.
struct AdjustedDesign {
    Matrix xbar;
    Matrix rbar;   // (R, 0, ...) against xbar's columns
    Vector rhs;    // unchanged right-hand side r
    int scenario = 0;
    std::vector<std::string> added;   // "e+", "e-"
    std::vector<std::string> notes;   // near-tolerance ambiguity, etc.
    Eigen::Index kbar() const { return xbar.cols(); }
};

/// Raised by build_adjusted when no enlargement can restore size control.
class adjustment_error : public std::runtime_error {
public:
    enum class Reason { Impossible, SizeOne };
    adjustment_error(Reason reason, const std::string& what)
        : std::runtime_error(what), reason_(reason) {}
    Reason reason() const { return reason_; }

private:
    Reason reason_;
};

/// One test family plus its parameters and critical value C > 0. When
/// `adjusted` is set, evaluation runs on the enlarged design.
struct TestDefinition {
    TestKind kind = TestKind::WeightedAutocov;
    LagWindow window{LagWindowKind::Bartlett, 1.0, {}};
    Matrix wstar;                       // GeneralQuadratic
    HetVariant het = HetVariant::HC0;   // Het
    RhoEstimatorSpec rho{};             // Fgls / OlsAr1
    double critical = 2.0;
    std::shared_ptr<const AdjustedDesign> adjusted;
};

/// Value of the statistic; `exceptional` marks the convention value 0 taken
/// on the family's exceptional set, whose name is carried along.
struct TestOutcome {
    double value = 0;
    bool exceptional = false;
    std::string exceptional_set;
};

/// Precomputed evaluator for one (test, design, restriction) triple. All
/// state is immutable after construction; operator() is safe to call
/// concurrently from the Monte Carlo workers.
class TestEvaluator {
public:
    TestEvaluator(const TestDefinition& def, const LinearModel& model,
                  const Restriction& restriction, Tolerances tol = {});

    TestOutcome operator()(const Vector& y) const;

    double critical() const { return def_.critical; }
    const TestDefinition& definition() const { return def_; }
    /// The design the statistic actually runs on (enlarged when adjusted).
    const LinearModel& evaluation_model() const { return *model_; }
    const Restriction& evaluation_restriction() const { return *restriction_; }
    const Tolerances& tolerances() const { return tol_; }

private:
    TestOutcome quadratic_outcome(const Vector& rb, const Matrix& omega, double floor,
                                  const char* singular_set) const;
    TestOutcome eval_weighted(const Vector& y) const;
    TestOutcome eval_gq(const Vector& y) const;
    TestOutcome eval_eicker(const Vector& y) const;
    TestOutcome eval_het(const Vector& y) const;
    TestOutcome eval_fgls(const Vector& y) const;
    TestOutcome eval_ols_ar1(const Vector& y) const;
    TestOutcome eval_uncorrected(const Vector& y) const;

    TestDefinition def_;
    std::shared_ptr<const LinearModel> model_;
    std::shared_ptr<const Restriction> restriction_;
    Tolerances tol_;
    ToeplitzWeights weights_;   // WeightedAutocov
    Matrix a_;                  // R (X'X)^{-1} X'
    Matrix gram_rt_;            // (X'X)^{-1} R'
    Matrix s_chol_;             // R (X'X)^{-1} R' (UncorrectedF)
    double omega_unit_ = 0;     // Omega magnitude per unit squared residual norm
};

/// One-shot evaluation of the statistic at y.
TestOutcome evaluate(const TestDefinition& def, const LinearModel& model,
                     const Restriction& restriction, const Vector& y, Tolerances tol = {});

/// Selects the applicable enlargement scenario from the span pattern of e+
/// and e- and validates it. Throws adjustment_error when the enlarged design
/// degenerates (kbar = n, rank condition fails) or a side condition forces
/// size one.
AdjustedDesign build_adjusted(const LinearModel& model, const Restriction& restriction,
                              Tolerances tol = {});

/// Statistic on the enlarged design; the tested restriction stays (R, r)
/// through beta_bar = (I_k, 0) theta_bar.
TestOutcome evaluate_adjusted(const AdjustedDesign& adj, const TestDefinition& def,
                              const Vector& y, Tolerances tol = {});

}  // namespace robustsize
