#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace robustsize {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical thresholds used throughout the library. All span/zero/boundary
/// checks are relative; `rank_scale` multiplies the usual machine-epsilon
/// rank cutoff.
struct Tolerances {
    double membership = 1e-8;   // relative span-membership / zero tests
    double boundary = 1e-8;     // |T - C| <= boundary * (1 + C) counts as a tie
    double singular = 1e-8;     // relative smallest-eigenvalue cutoff for q x q matrices
    double rank_scale = 64.0;   // sigma_max * max(m,n) * eps * rank_scale
};

/// Raised when an estimator is evaluated on its exceptional set; carries the
/// set's name (e.g. "N0").
class exceptional_set_error : public std::runtime_error {
public:
    exceptional_set_error(std::string set, const std::string& what)
        : std::runtime_error(what), set_(std::move(set)) {}
    const std::string& set() const noexcept { return set_; }

private:
    std::string set_;
};

/// Rank cutoff for a matrix with largest singular value `sigma_max`.
inline double rank_threshold(double sigma_max, Eigen::Index rows, Eigen::Index cols,
                             const Tolerances& tol = {}) {
    const double eps = std::numeric_limits<double>::epsilon();
    return sigma_max * static_cast<double>(std::max(rows, cols)) * eps * tol.rank_scale;
}

/// Numerical rank via SVD with the standard relative threshold.
Eigen::Index numerical_rank(const Matrix& a, const Tolerances& tol = {});

/// Symmetric nonnegative square root via eigendecomposition. Eigenvalues in
/// [-1e-10*scale, 0) are clamped to zero; `min_eigenvalue`, when non-null,
/// receives the smallest eigenvalue so callers can warn or reject.
Matrix symmetric_sqrt(const Matrix& a, double* min_eigenvalue = nullptr);

/// Relative near-zero test: |value| <= tol * max(scale, 1e-300).
inline bool near_zero(double value, double scale, double tol) {
    return std::abs(value) <= tol * std::max(scale, 1e-300);
}

}  // namespace robustsize
