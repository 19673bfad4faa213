#include "robustsize/model.hpp"

#include <Eigen/SVD>

namespace robustsize {

Eigen::Index numerical_rank(const Matrix& a, const Tolerances& tol) {
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& sv = svd.singularValues();
    const double cutoff = rank_threshold(sv(0), a.rows(), a.cols(), tol);
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;
    return rank;
}

Matrix symmetric_sqrt(const Matrix& a, double* min_eigenvalue) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    Vector values = eig.eigenvalues();
    if (min_eigenvalue) *min_eigenvalue = values.minCoeff();
    for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = std::sqrt(std::max(values[i], 0.0));
    return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

LinearModel::LinearModel(Matrix x, Tolerances tol) : x_(std::move(x)), tol_(tol) {
    const Eigen::Index n = x_.rows();
    const Eigen::Index k = x_.cols();
    if (k < 1 || k >= n) {
        throw std::invalid_argument("design must satisfy 1 <= k < n, got n=" +
                                    std::to_string(n) + " k=" + std::to_string(k));
    }
    if (!x_.allFinite()) throw std::invalid_argument("design has non-finite entries");
    if (numerical_rank(x_, tol_) != k) {
        throw std::invalid_argument("design is numerically rank deficient");
    }
    qr_.compute(x_);
    thin_q_ = qr_.householderQ() * Matrix::Identity(n, k);
}

Vector LinearModel::ols(const Vector& y) const { return qr_.solve(y); }

Vector LinearModel::residuals(const Vector& y) const {
    return y - thin_q_ * (thin_q_.transpose() * y);
}

Matrix LinearModel::solve_gram(const Matrix& rhs) const {
    // X'X = P R'R P' from the pivoted QR, so two triangular solves suffice.
    const Eigen::Index k = x_.cols();
    const auto r = qr_.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    Matrix z = qr_.colsPermutation().transpose() * rhs;
    z = r.transpose().solve(z);
    z = r.solve(z);
    return qr_.colsPermutation() * z;
}

Vector LinearModel::project(const Vector& v) const {
    return thin_q_ * (thin_q_.transpose() * v);
}

Vector LinearModel::leverages() const { return thin_q_.rowwise().squaredNorm(); }

Restriction::Restriction(Matrix R_in, Vector r_in, Tolerances tol)
    : R(std::move(R_in)), r(std::move(r_in)) {
    if (R.rows() < 1 || R.rows() > R.cols()) {
        throw std::invalid_argument("restriction must satisfy 1 <= q <= k");
    }
    if (r.size() != R.rows()) {
        throw std::invalid_argument("restriction right-hand side has wrong length");
    }
    if (!R.allFinite() || !r.allFinite()) {
        throw std::invalid_argument("restriction has non-finite entries");
    }
    if (numerical_rank(R, tol) != R.rows()) {
        throw std::invalid_argument("restriction matrix is numerically rank deficient");
    }
}

Vector ols_estimate(const LinearModel& model, const Vector& y) {
    if (!y.allFinite()) throw std::invalid_argument("y has non-finite entries");
    return model.ols(y);
}

Vector residuals(const LinearModel& model, const Vector& y) {
    if (!y.allFinite()) throw std::invalid_argument("y has non-finite entries");
    return model.residuals(y);
}

RestrictedFit restricted_ols(const LinearModel& model, const Restriction& restriction,
                             const Vector& y) {
    const Vector beta = ols_estimate(model, y);
    const Matrix gram_rt = model.solve_gram(restriction.R.transpose());  // (X'X)^{-1} R'
    const Matrix s = restriction.R * gram_rt;                            // R (X'X)^{-1} R'
    const Vector gap = restriction.R * beta - restriction.r;
    const Vector correction = gram_rt * s.ldlt().solve(gap);
    RestrictedFit fit;
    fit.beta = beta - correction;
    fit.residual = y - model.design() * fit.beta;
    return fit;
}

NullPoint null_representative(const LinearModel& model, const Restriction& restriction) {
    const Matrix rrt = restriction.R * restriction.R.transpose();
    NullPoint point;
    point.beta0 = restriction.R.transpose() * rrt.ldlt().solve(restriction.r);
    point.mu0 = model.design() * point.beta0;
    return point;
}

Vector sign_normalize(Vector x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0) {
            if (x[i] < 0.0) x = -x;
            return x;
        }
    }
    return x;
}

bool span_membership(const LinearModel& model, const Vector& v, double tol) {
    const double norm = v.norm();
    if (norm == 0.0) return true;
    return (v - model.project(v)).norm() <= tol * norm;
}

Vector maximal_invariant(const LinearModel& model, const Restriction& restriction,
                         const Vector& y) {
    const Vector z = restricted_ols(model, restriction, y).residual;
    const double norm = z.norm();
    if (norm <= model.tolerances().membership * (1.0 + y.norm())) {
        return Vector::Zero(y.size());
    }
    return sign_normalize(z / norm);
}

}  // namespace robustsize
