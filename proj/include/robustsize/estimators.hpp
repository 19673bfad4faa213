#pragma once

#include <vector>

#include "robustsize/model.hpp"

namespace robustsize {

enum class LagWindowKind { Bartlett, Parzen, QuadraticSpectral, CustomWeights };

/// A data-independent lag window: w(j, n) = w0(|j| / M) for the named
/// kernels, or explicit per-lag weights.
struct LagWindow {
    LagWindowKind kind = LagWindowKind::Bartlett;
    double bandwidth = 1.0;             // ignored for CustomWeights
    std::vector<double> custom;         // lag 0.. weights for CustomWeights
};

/// Lag weights w(0..n-1) with w(0) = 1; the induced symmetric Toeplitz
/// matrix W_n is what the variance estimator quadratic form sees.
struct ToeplitzWeights {
    std::vector<double> w;
    Matrix toeplitz() const;
};

enum class WeightClass { PositiveDefinite, NonnegativeOnly, Indefinite };

/// AR(1) coefficient estimator indices: numerator always sums lags over
/// t = 2..n, denominator over t = a1..a2 with a1 in {1,2} and a2 in {n-1,n}.
struct RhoEstimatorSpec {
    int a1 = 1;
    int a2_from_n = 0;  // a2 = n - a2_from_n, offset in {0,1}
    int a2(Eigen::Index n) const { return static_cast<int>(n) - a2_from_n; }
};

enum class HetVariant { HC0, HC1, HC2, HC3 };

ToeplitzWeights lag_window_weights(const LagWindow& window, Eigen::Index n);

/// Classify W_n by its smallest eigenvalue relative to the largest.
WeightClass check_weight_pd(const ToeplitzWeights& weights, double tol = 1e-10);

/// B(y) = R (X'X)^{-1} X' diag(u_hat(y)).
Matrix b_matrix(const LinearModel& model, const Restriction& restriction, const Vector& y);

struct RandXReport {
    bool verdict = false;
    std::vector<Eigen::Index> indices;  // 1-based indices i with e_i in span(X)
};

/// Deletes the columns of R (X'X)^{-1} X' whose basis vectors lie in span(X)
/// and checks the remainder still has rank q. When this fails the robust
/// variance estimator is singular for every sample point.
RandXReport check_r_and_x(const LinearModel& model, const Restriction& restriction);

/// Weighted sum of sample autocovariances of v_t = u_hat_t * x_t'.
Matrix psi_weighted(const LinearModel& model, const Vector& y, const ToeplitzWeights& weights);

/// n R (X'X)^{-1} psi_weighted (X'X)^{-1} R'.
Matrix omega_weighted(const LinearModel& model, const Restriction& restriction, const Vector& y,
                      const ToeplitzWeights& weights);

/// General quadratic form n^{-1} sum_{t,s} Wstar_{ts} v_t v_s'; equals
/// psi_weighted when Wstar is the Toeplitz weight matrix.
Matrix psi_general_quadratic(const LinearModel& model, const Vector& y, const Matrix& wstar);

struct GqOmega {
    Matrix omega;
    Eigen::Index bw_rank = 0;  // rank of B(y) Wstar, the singularity criterion
};

GqOmega omega_general_quadratic(const LinearModel& model, const Restriction& restriction,
                                const Vector& y, const Matrix& wstar);

/// n^{-1} X' K_hat X with K_hat the Toeplitz matrix of residual sample
/// autocovariances; positive definite iff y is outside span(X).
Matrix psi_eicker(const LinearModel& model, const Vector& y);

Vector leverages(const LinearModel& model);

/// (X'X)^{-1} X' diag(d_i u_i^2) X (X'X)^{-1} with the requested d_i;
/// d_i := 1 whenever h_ii = 1 within tolerance.
Matrix psi_het(const LinearModel& model, const Vector& y, HetVariant variant);

/// sum_{t=2..n} u_t u_{t-1} / sum_{t=a1..a2} u_t^2. Throws
/// exceptional_set_error("N0") when the denominator vanishes.
double rho_hat(const LinearModel& model, const Vector& y, const RhoEstimatorSpec& spec);

struct GlsFlags {
    bool n0 = false;      // rho denominator vanishes
    bool n1 = false;      // |rho| = 1 within tolerance
    bool n2 = false;      // X' Lambda^{-1}(rho) X singular
    bool n2_star = false; // sigma2 = 0 or R (X'Lambda^{-1}X)^{-1} R' singular
    bool any() const { return n0 || n1 || n2 || n2_star; }
    const char* first_set() const;
};

struct FglsComponents {
    Vector beta;     // (X' Lambda^{-1} X)^{-1} X' Lambda^{-1} y
    double sigma2 = 0;
    Matrix omega;    // sigma2 * R (X' Lambda^{-1} X)^{-1} R'
    double rho = 0;
    GlsFlags flags;
};

/// Feasible GLS pieces under the plugged-in AR(1) correlation; exceptional-set
/// membership is reported through flags instead of failing.
FglsComponents fgls_components(const LinearModel& model, const Restriction& restriction,
                               const Vector& y, const RhoEstimatorSpec& spec);

struct OlsAr1Omega {
    Matrix omega;    // sigma2_hat R (X'X)^{-1} X' Lambda(rho) X (X'X)^{-1} R'
    double sigma2 = 0;
    double rho = 0;
    bool n0 = false;
    bool n0_star = false;  // omega singular
};

OlsAr1Omega ols_ar1_omega(const LinearModel& model, const Restriction& restriction,
                          const Vector& y, const RhoEstimatorSpec& spec);

}  // namespace robustsize
