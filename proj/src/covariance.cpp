#include "robustsize/covariance.hpp"

#include <cmath>

namespace robustsize {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Ar1Param::Ar1Param(double rho_in) : rho(rho_in) {
    if (!(std::abs(rho) < 1.0)) {
        throw std::invalid_argument("AR(1) parameter requires |rho| < 1");
    }
}

Ar2Param::Ar2Param(double r_in, double nu_in) : r(r_in), nu(nu_in) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("AR(2) root modulus requires 0 < r < 1");
    if (!(nu > 0.0 && nu < kPi)) {
        throw std::invalid_argument("AR(2) angle requires 0 < nu < pi (use the AR(1) limits at the endpoints)");
    }
}

HetWeights::HetWeights(Vector tau2_in, double tol) : tau2(std::move(tau2_in)) {
    if (tau2.size() < 2) throw std::invalid_argument("need at least two variances");
    if ((tau2.array() <= 0.0).any()) throw std::invalid_argument("variances must be positive");
    if (std::abs(tau2.sum() - 1.0) > tol) {
        throw std::invalid_argument("variances must sum to one");
    }
}

Vector e_plus(Eigen::Index n) { return Vector::Ones(n); }

Vector e_minus(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index t = 0; t < n; ++t) v[t] = (t % 2 == 0) ? -1.0 : 1.0;
    return v;
}

Matrix ar1_matrix(Eigen::Index n, double rho) {
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = std::pow(rho, static_cast<double>(i - j));
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

Matrix ar1_inverse(Eigen::Index n, double rho) {
    const double det_factor = 1.0 - rho * rho;
    if (det_factor == 0.0) {
        throw std::domain_error("AR(1) correlation matrix is singular at |rho| = 1");
    }
    Matrix m = Matrix::Zero(n, n);
    const double diag_inner = (1.0 + rho * rho) / det_factor;
    const double diag_edge = 1.0 / det_factor;
    const double off = -rho / det_factor;
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = (i == 0 || i == n - 1) ? diag_edge : diag_inner;
        if (i + 1 < n) {
            m(i, i + 1) = off;
            m(i + 1, i) = off;
        }
    }
    if (n == 1) m(0, 0) = 1.0;
    return m;
}

Matrix ar2_matrix(Eigen::Index n, const Ar2Param& param) {
    const double phi1 = 2.0 * param.r * std::cos(param.nu);
    const double phi2 = -param.r * param.r;
    // Order-2 Yule-Walker in correlation form: rho_1 = phi1 / (1 - phi2),
    // then rho_j = phi1 rho_{j-1} + phi2 rho_{j-2}.
    std::vector<double> corr(static_cast<std::size_t>(n));
    corr[0] = 1.0;
    if (n > 1) corr[1] = phi1 / (1.0 - phi2);
    for (Eigen::Index j = 2; j < n; ++j) {
        corr[static_cast<std::size_t>(j)] = phi1 * corr[static_cast<std::size_t>(j - 1)] +
                                            phi2 * corr[static_cast<std::size_t>(j - 2)];
    }
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = corr[static_cast<std::size_t>(std::abs(i - j))];
    return m;
}

HarmonicSpace harmonic_basis(Eigen::Index n, double nu) {
    if (nu < 0.0 || nu > kPi) throw std::invalid_argument("frequency must lie in [0, pi]");
    HarmonicSpace space;
    space.nu = nu;
    if (nu == 0.0) {
        space.basis = e_plus(n);
    } else if (nu == kPi) {
        space.basis = e_minus(n);
    } else {
        space.basis.resize(n, 2);
        for (Eigen::Index t = 0; t < n; ++t) {
            const double arg = nu * static_cast<double>(t + 1);
            space.basis(t, 0) = std::cos(arg);
            space.basis(t, 1) = std::sin(arg);
        }
    }
    return space;
}

Matrix het_matrix(const HetWeights& weights) {
    return weights.tau2.asDiagonal();
}

Matrix ar1_limit_d(Eigen::Index n, int endpoint) {
    if (n < 2) throw std::invalid_argument("need n >= 2");
    if (endpoint != 1 && endpoint != -1) throw std::invalid_argument("endpoint must be +1 or -1");
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) total += static_cast<double>(std::abs(i - j));
    Matrix core(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double lag = static_cast<double>(std::abs(i - j));
            if (endpoint == 1) {
                core(i, j) = -static_cast<double>(n) * lag / total;
            } else {
                const double sign = (std::abs(i - j) % 2 == 0) ? -1.0 : 1.0;
                core(i, j) = sign * static_cast<double>(n) * lag / total;
            }
        }
    }
    const Vector e = (endpoint == 1) ? e_plus(n) : e_minus(n);
    const Matrix proj = Matrix::Identity(n, n) - e * e.transpose() / static_cast<double>(n);
    return proj * core * proj;
}

std::vector<ProbePoint> singular_approach_probe(const std::function<Matrix(double)>& sigma_at,
                                                const Matrix& z_basis,
                                                const std::vector<double>& rho_seq,
                                                Tolerances tol) {
    const Eigen::Index n = z_basis.rows();
    if (z_basis.cols() >= n) throw std::invalid_argument("z basis must span a proper subspace");
    if (numerical_rank(z_basis, tol) != z_basis.cols()) {
        throw std::invalid_argument("z basis is rank deficient");
    }
    // Orthonormalize to build P_Z and its complement projector.
    Eigen::HouseholderQR<Matrix> qr(z_basis);
    const Matrix q = qr.householderQ() * Matrix::Identity(n, z_basis.cols());
    const Matrix pz = q * q.transpose();
    const Matrix pperp = Matrix::Identity(n, n) - pz;

    std::vector<ProbePoint> out;
    out.reserve(rho_seq.size());
    for (double rho : rho_seq) {
        const Matrix sigma = sigma_at(rho);
        ProbePoint point;
        point.rho = rho;
        const Matrix projected = pperp * sigma * pperp;
        point.s = projected.trace();
        if (near_zero(point.s, sigma.trace(), tol.membership)) {
            throw exceptional_set_error("degenerate-probe",
                                        "projected covariance trace vanishes at rho=" +
                                            std::to_string(rho));
        }
        point.d = projected / point.s;
        point.cross = pperp * sigma * pz / std::sqrt(point.s);
        out.push_back(std::move(point));
    }
    return out;
}

}  // namespace robustsize
