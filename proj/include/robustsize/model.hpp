#pragma once

#include <Eigen/QR>

#include "robustsize/numeric.hpp"

namespace robustsize {

/// A fixed n x k design matrix with validated full column rank (1 <= k < n).
/// Holds the QR factorization used by every least-squares solve; immutable
/// after construction and safe for concurrent reads.
class LinearModel {
public:
    explicit LinearModel(Matrix x, Tolerances tol = {});

    const Matrix& design() const { return x_; }
    Eigen::Index n() const { return x_.rows(); }
    Eigen::Index k() const { return x_.cols(); }
    const Tolerances& tolerances() const { return tol_; }

    /// (X'X)^{-1} X' y through the QR factors.
    Vector ols(const Vector& y) const;

    /// y - X (X'X)^{-1} X' y.
    Vector residuals(const Vector& y) const;

    /// (X'X)^{-1} rhs through two triangular solves on the R factor.
    Matrix solve_gram(const Matrix& rhs) const;

    /// Projection of v onto span(X).
    Vector project(const Vector& v) const;

    /// Diagonal of the hat matrix X (X'X)^{-1} X'.
    Vector leverages() const;

private:
    Matrix x_;
    Eigen::ColPivHouseholderQR<Matrix> qr_;
    Matrix thin_q_;
    Tolerances tol_;
};

/// The pair (R, r) describing the null R beta = r; R is q x k of full row
/// rank, 1 <= q <= k.
struct Restriction {
    Restriction(Matrix R_in, Vector r_in, Tolerances tol = {});

    Matrix R;
    Vector r;
    Eigen::Index q() const { return R.rows(); }
};

/// One point of the null mean space: beta0 with R beta0 = r and mu0 = X beta0.
struct NullPoint {
    Vector beta0;
    Vector mu0;
};

struct RestrictedFit {
    Vector beta;      // restricted least-squares coefficients
    Vector residual;  // y - X beta
};

Vector ols_estimate(const LinearModel& model, const Vector& y);
Vector residuals(const LinearModel& model, const Vector& y);

/// Restricted OLS: beta_hat - (X'X)^{-1} R' (R (X'X)^{-1} R')^{-1} (R beta_hat - r).
RestrictedFit restricted_ols(const LinearModel& model, const Restriction& restriction,
                             const Vector& y);

/// Minimum-norm solution beta0 = R'(RR')^{-1} r and its mean vector.
NullPoint null_representative(const LinearModel& model, const Restriction& restriction);

/// +-x with the first nonzero entry positive; 0 maps to 0.
Vector sign_normalize(Vector x);

/// True iff ||(I - P_X) v|| <= tol * ||v||; the zero vector is a member.
bool span_membership(const LinearModel& model, const Vector& v, double tol);
inline bool span_membership(const LinearModel& model, const Vector& v) {
    return span_membership(model, v, model.tolerances().membership);
}

/// Sign-normalized unit vector of the restricted-OLS residual of y; zero when
/// that residual vanishes. Invariant under y -> alpha (y - mu0) + mu0' for
/// alpha != 0 and mu0, mu0' in the null mean space.
Vector maximal_invariant(const LinearModel& model, const Restriction& restriction,
                         const Vector& y);

}  // namespace robustsize
