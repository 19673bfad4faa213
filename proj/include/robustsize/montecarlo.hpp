#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "robustsize/diagnostics.hpp"
#include "robustsize/rng.hpp"
#include "robustsize/statistics.hpp"

namespace robustsize {

struct McConfig {
    std::int64_t reps = 100000;
    std::uint64_t seed = 0;
    std::int64_t chunk = 4096;
    void validate() const;
};

struct RejectionEstimate {
    double p = 0;
    double se = 0;  // sqrt(p (1-p) / reps)
    std::int64_t reps = 0;
    std::uint64_t seed = 0;
};

/// Draws mean + scale * G with scale a symmetric square root of sigma2 *
/// Sigma. Eigenvalues in [-1e-10, 0) relative are clamped to zero and
/// flagged.
class GaussianSampler {
public:
    GaussianSampler(Vector mean, double sigma2, const Matrix& sigma);

    const Vector& mean() const { return mean_; }
    const Matrix& scale() const { return scale_; }
    bool clamped() const { return clamped_; }
    double min_eigenvalue() const { return min_eig_; }
    bool positive_definite() const;

    template <class Engine>
    Vector draw(Engine& engine) const {
        Vector g(mean_.size());
        fill_standard_normal(engine, g);
        return mean_ + scale_ * g;
    }

private:
    Vector mean_;
    Matrix scale_;
    double min_eig_ = 0;
    double scale_ref_ = 0;
    bool clamped_ = false;
};

/// Worker count: ROBUSTSIZE_THREADS when set, hardware concurrency otherwise.
int worker_count();

/// Pr(T(mean + scale G) >= C) by mc.reps independent replications; requires a
/// positive definite Sigma behind the sampler. `stream` separates logical
/// uses of the same master seed.
RejectionEstimate rejection_probability(const TestEvaluator& evaluator,
                                        const GaussianSampler& sampler, const McConfig& mc,
                                        std::uint64_t stream = 0);

RejectionEstimate rejection_probability(const TestDefinition& def, const LinearModel& model,
                                        const Restriction& restriction, const Vector& mu,
                                        double sigma2, const Matrix& sigma, const McConfig& mc);

/// Null rejection probability at Lambda(rho) for each rho in the grid.
std::vector<std::pair<double, RejectionEstimate>> size_curve_ar1(
    const TestDefinition& def, const LinearModel& model, const Restriction& restriction,
    const std::vector<double>& rho_grid, const McConfig& mc);

/// Simulated statistic samples per grid point, kept sorted so rejection rates
/// at any threshold are exact order-statistic counts; the sup-size curve is
/// nonincreasing in C by construction.
class SizeSurface {
public:
    SizeSurface(const TestDefinition& def, const LinearModel& model,
                const Restriction& restriction, std::vector<double> rho_grid,
                const McConfig& mc);

    double size_at(std::size_t grid_index, double c) const;
    double sup_size(double c) const;
    std::size_t arg_sup(double c) const;
    const std::vector<double>& grid() const { return rho_grid_; }
    std::int64_t reps() const { return reps_; }

private:
    std::vector<double> rho_grid_;
    std::vector<std::vector<double>> sorted_t_;
    std::int64_t reps_ = 0;
};

/// Raised when calibration is requested for a design/test pair whose audit
/// is not a positive case (no critical value can control size there).
class AuditRefusal : public std::runtime_error {
public:
    AuditRefusal(DiagnosticReport report, const std::string& what)
        : std::runtime_error(what), report(std::move(report)) {}
    DiagnosticReport report;
};

struct CalibrationResult {
    double c_delta = 0;
    RejectionEstimate sup_size;   // certification estimate at the arg-sup point
    double arg_sup_rho = 0;
    double delta = 0;
    int bisection_steps = 0;
    std::vector<double> grid;
    std::int64_t calibration_reps = 0;
};

/// Smallest critical value (within tol_c) whose empirical sup-size over the
/// rho grid is <= delta, found by bracket expansion plus bisection on shared
/// statistic samples, then re-estimated at the arg-sup point with `cert`
/// replications. Refuses (AuditRefusal) unless the audit is a positive case.
CalibrationResult calibrate_critical(const TestDefinition& def, const LinearModel& model,
                                     const Restriction& restriction, double delta,
                                     const std::vector<double>& rho_grid, const McConfig& mc,
                                     double tol_c, const McConfig& cert);

/// The calibration default: +-{0.999, 0.99, 0.95, 0.9, 0.75, 0.5, 0.25} and 0.
std::vector<double> default_rho_grid();

struct PowerPoint {
    double d_over_sigma = 0;  // distance of mu1 to the null mean space, over sigma
    RejectionEstimate estimate;
};

std::vector<PowerPoint> power_probe(const TestDefinition& def, const LinearModel& model,
                                    const Restriction& restriction,
                                    const std::vector<Vector>& mu1_grid, double sigma2,
                                    const Matrix& sigma, const McConfig& mc);

enum class RadialLaw { Gaussian, ChiMixture, UnitScale };

struct EllipticalCheck {
    RejectionEstimate gaussian;
    RejectionEstimate elliptical;
    double z_score = 0;
};

/// Simulates y = mu0 + rho_radial * Sigma^{1/2} E with E uniform on the unit
/// sphere; for an invariant test the null rejection probability must match
/// the Gaussian one for every radial law.
EllipticalCheck elliptical_null_check(const TestDefinition& def, const LinearModel& model,
                                      const Restriction& restriction, const Matrix& sigma,
                                      RadialLaw radial, const McConfig& mc);

}  // namespace robustsize
