#include "robustsize/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace robustsize {

namespace {

constexpr double kPi = 3.14159265358979323846;

double bartlett(double x) { return std::max(1.0 - std::abs(x), 0.0); }

double parzen(double x) {
    const double a = std::abs(x);
    if (a <= 0.5) return 1.0 - 6.0 * a * a + 6.0 * a * a * a;
    if (a <= 1.0) return 2.0 * std::pow(1.0 - a, 3.0);
    return 0.0;
}

double quadratic_spectral(double x) {
    if (x == 0.0) return 1.0;
    const double z = 6.0 * kPi * std::abs(x) / 5.0;
    return 25.0 / (12.0 * kPi * kPi * x * x) * (std::sin(z) / z - std::cos(z));
}

Matrix psi_from_residuals(const Matrix& x, const Vector& u, const ToeplitzWeights& weights) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    const Matrix v = u.asDiagonal() * x;  // rows are v_t' = u_t x_t'
    Matrix psi = Matrix::Zero(k, k);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double w = weights.w[static_cast<std::size_t>(j)];
        if (w == 0.0) continue;
        const Matrix gamma = v.bottomRows(n - j).transpose() * v.topRows(n - j);
        if (j == 0) {
            psi += w * gamma;
        } else {
            psi += w * (gamma + gamma.transpose());
        }
    }
    psi /= static_cast<double>(n);
    return 0.5 * (psi + psi.transpose());
}

Matrix residual_autocov_toeplitz(const Vector& u) {
    const Eigen::Index n = u.size();
    Vector gamma(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double acc = 0;
        for (Eigen::Index l = j; l < n; ++l) acc += u[l] * u[l - j];
        gamma[j] = acc / static_cast<double>(n);
    }
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) k(i, j) = gamma[std::abs(i - j)];
    return k;
}

void validate_rho_spec(const RhoEstimatorSpec& spec, Eigen::Index n, Eigen::Index k) {
    if (spec.a1 != 1 && spec.a1 != 2) throw std::invalid_argument("a1 must be 1 or 2");
    if (spec.a2_from_n != 0 && spec.a2_from_n != 1) {
        throw std::invalid_argument("a2 must be n or n-1");
    }
    const int a2 = spec.a2(n);
    if (spec.a1 > a2) throw std::invalid_argument("a1 must not exceed a2");
    if (k > a2 - spec.a1) {
        throw std::invalid_argument("rho estimator needs k <= a2 - a1");
    }
}

struct RhoResult {
    double value = 0;
    bool degenerate = false;  // denominator vanishes (the set N0)
};

// The denominator vanishes either because y sits in the design span (u is
// numerically zero relative to y) or because u has no mass in the a1..a2
// window.
RhoResult rho_from_residuals(const Vector& u, const RhoEstimatorSpec& spec, double tol,
                             double y_norm) {
    const Eigen::Index n = u.size();
    double num = 0;
    for (Eigen::Index t = 1; t < n; ++t) num += u[t] * u[t - 1];
    double den = 0;
    for (int t = spec.a1; t <= spec.a2(n); ++t) den += u[t - 1] * u[t - 1];
    RhoResult result;
    const double span_floor = tol * tol * y_norm * y_norm;
    if (u.squaredNorm() <= span_floor || near_zero(den, u.squaredNorm(), tol)) {
        result.degenerate = true;
        return result;
    }
    result.value = num / den;
    return result;
}

// Lambda^{-1}(b) applied to the columns of m, using the tridiagonal closed form.
Matrix apply_ar1_inverse(const Matrix& m, double b) {
    const Eigen::Index n = m.rows();
    const double f = 1.0 - b * b;
    const double diag_inner = (1.0 + b * b) / f;
    const double diag_edge = 1.0 / f;
    const double off = -b / f;
    Matrix out(n, m.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = (i == 0 || i == n - 1) ? diag_edge : diag_inner;
        out.row(i) = d * m.row(i);
        if (i > 0) out.row(i) += off * m.row(i - 1);
        if (i + 1 < n) out.row(i) += off * m.row(i + 1);
    }
    return out;
}

bool spectrally_singular(const Matrix& sym, double tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    const Vector abs_l = eig.eigenvalues().cwiseAbs();
    const double top = abs_l.maxCoeff();
    if (top == 0.0) return true;
    return abs_l.minCoeff() <= tol * top;
}

}  // namespace

Matrix ToeplitzWeights::toeplitz() const {
    const Eigen::Index n = static_cast<Eigen::Index>(w.size());
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = w[static_cast<std::size_t>(std::abs(i - j))];
    return m;
}

ToeplitzWeights lag_window_weights(const LagWindow& window, Eigen::Index n) {
    ToeplitzWeights out;
    out.w.resize(static_cast<std::size_t>(n), 0.0);
    if (window.kind == LagWindowKind::CustomWeights) {
        if (window.custom.empty() || window.custom[0] != 1.0) {
            throw std::invalid_argument("custom weights must start with w(0) = 1");
        }
        for (std::size_t j = 0; j < out.w.size(); ++j) {
            out.w[j] = j < window.custom.size() ? window.custom[j] : 0.0;
        }
        return out;
    }
    if (!(window.bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    for (Eigen::Index j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / window.bandwidth;
        double w = 0;
        switch (window.kind) {
            case LagWindowKind::Bartlett: w = bartlett(x); break;
            case LagWindowKind::Parzen: w = parzen(x); break;
            case LagWindowKind::QuadraticSpectral: w = quadratic_spectral(x); break;
            case LagWindowKind::CustomWeights: break;  // handled above
        }
        out.w[static_cast<std::size_t>(j)] = w;
    }
    out.w[0] = 1.0;
    return out;
}

WeightClass check_weight_pd(const ToeplitzWeights& weights, double tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(weights.toeplitz(), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    const double cutoff = tol * std::max(std::abs(hi), 1e-300);
    if (lo > cutoff) return WeightClass::PositiveDefinite;
    if (lo >= -cutoff) return WeightClass::NonnegativeOnly;
    return WeightClass::Indefinite;
}

Matrix b_matrix(const LinearModel& model, const Restriction& restriction, const Vector& y) {
    const Matrix gram_rt = model.solve_gram(restriction.R.transpose());  // (X'X)^{-1} R'
    const Matrix a = gram_rt.transpose() * model.design().transpose();   // R (X'X)^{-1} X'
    return a * model.residuals(y).asDiagonal();
}

RandXReport check_r_and_x(const LinearModel& model, const Restriction& restriction) {
    const Eigen::Index n = model.n();
    RandXReport report;
    const Matrix gram_rt = model.solve_gram(restriction.R.transpose());
    const Matrix a = gram_rt.transpose() * model.design().transpose();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector basis = Vector::Zero(n);
        basis[i] = 1.0;
        if (span_membership(model, basis)) {
            report.indices.push_back(i + 1);
        } else {
            keep.push_back(i);
        }
    }
    if (keep.empty()) {
        report.verdict = false;
        return report;
    }
    Matrix surviving(restriction.q(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) surviving.col(static_cast<Eigen::Index>(c)) = a.col(keep[c]);
    report.verdict = numerical_rank(surviving, model.tolerances()) == restriction.q();
    return report;
}

Matrix psi_weighted(const LinearModel& model, const Vector& y, const ToeplitzWeights& weights) {
    if (static_cast<Eigen::Index>(weights.w.size()) != model.n()) {
        throw std::invalid_argument("weights not sized for this sample");
    }
    return psi_from_residuals(model.design(), model.residuals(y), weights);
}

Matrix omega_weighted(const LinearModel& model, const Restriction& restriction, const Vector& y,
                      const ToeplitzWeights& weights) {
    const Matrix psi = psi_weighted(model, y, weights);
    const Matrix gram_rt = model.solve_gram(restriction.R.transpose());
    Matrix omega = static_cast<double>(model.n()) * gram_rt.transpose() * psi * gram_rt;
    return 0.5 * (omega + omega.transpose());
}

Matrix psi_general_quadratic(const LinearModel& model, const Vector& y, const Matrix& wstar) {
    const Eigen::Index n = model.n();
    if (wstar.rows() != n || wstar.cols() != n) {
        throw std::invalid_argument("quadratic weighting matrix must be n x n");
    }
    if ((wstar - wstar.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(wstar.cwiseAbs().maxCoeff(), 1.0)) {
        throw std::invalid_argument("quadratic weighting matrix must be symmetric");
    }
    const Matrix v = model.residuals(y).asDiagonal() * model.design();
    Matrix psi = v.transpose() * wstar * v / static_cast<double>(n);
    return 0.5 * (psi + psi.transpose());
}

GqOmega omega_general_quadratic(const LinearModel& model, const Restriction& restriction,
                                const Vector& y, const Matrix& wstar) {
    GqOmega out;
    const Matrix psi = psi_general_quadratic(model, y, wstar);
    const Matrix gram_rt = model.solve_gram(restriction.R.transpose());
    out.omega = static_cast<double>(model.n()) * gram_rt.transpose() * psi * gram_rt;
    out.omega = 0.5 * (out.omega + out.omega.transpose()).eval();
    out.bw_rank = numerical_rank(b_matrix(model, restriction, y) * wstar, model.tolerances());
    return out;
}

Matrix psi_eicker(const LinearModel& model, const Vector& y) {
    const Vector u = model.residuals(y);
    const Matrix k_hat = residual_autocov_toeplitz(u);
    Matrix psi = model.design().transpose() * k_hat * model.design() /
                 static_cast<double>(model.n());
    return 0.5 * (psi + psi.transpose());
}

Vector leverages(const LinearModel& model) { return model.leverages(); }

Matrix psi_het(const LinearModel& model, const Vector& y, HetVariant variant) {
    const Eigen::Index n = model.n();
    const Eigen::Index k = model.k();
    const Vector u = model.residuals(y);
    const Vector h = model.leverages();
    Vector d(n);
    const double tol = model.tolerances().membership;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double hi = h[i];
        switch (variant) {
            case HetVariant::HC0: d[i] = 1.0; break;
            case HetVariant::HC1: d[i] = static_cast<double>(n) / static_cast<double>(n - k); break;
            case HetVariant::HC2:
                d[i] = (hi >= 1.0 - tol) ? 1.0 : 1.0 / (1.0 - hi);
                break;
            case HetVariant::HC3:
                d[i] = (hi >= 1.0 - tol) ? 1.0 : 1.0 / ((1.0 - hi) * (1.0 - hi));
                break;
        }
    }
    const Matrix proj = model.solve_gram(model.design().transpose());  // (X'X)^{-1} X'
    const Vector scaled = d.array() * u.array().square();
    Matrix psi = proj * scaled.asDiagonal() * proj.transpose();
    return 0.5 * (psi + psi.transpose());
}

double rho_hat(const LinearModel& model, const Vector& y, const RhoEstimatorSpec& spec) {
    validate_rho_spec(spec, model.n(), model.k());
    const Vector u = model.residuals(y);
    const RhoResult rho = rho_from_residuals(u, spec, model.tolerances().membership, y.norm());
    if (rho.degenerate) {
        throw exceptional_set_error("N0", "rho denominator vanishes (y in N0(a1,a2))");
    }
    return rho.value;
}

const char* GlsFlags::first_set() const {
    if (n0) return "N0";
    if (n1) return "N1";
    if (n2) return "N2";
    if (n2_star) return "N2*";
    return "";
}

FglsComponents fgls_components(const LinearModel& model, const Restriction& restriction,
                               const Vector& y, const RhoEstimatorSpec& spec) {
    validate_rho_spec(spec, model.n(), model.k());
    const Eigen::Index n = model.n();
    const Eigen::Index k = model.k();
    const double tol = model.tolerances().singular;
    FglsComponents out;
    out.beta = Vector::Zero(k);
    out.omega = Matrix::Zero(restriction.q(), restriction.q());

    const Vector u = model.residuals(y);
    const RhoResult rho = rho_from_residuals(u, spec, model.tolerances().membership, y.norm());
    if (rho.degenerate) {
        out.flags.n0 = true;
        return out;
    }
    out.rho = rho.value;
    if (std::abs(std::abs(out.rho) - 1.0) <= model.tolerances().membership) {
        out.flags.n1 = true;
        return out;
    }

    const Matrix lx = apply_ar1_inverse(model.design(), out.rho);
    const Matrix xtlx = model.design().transpose() * lx;
    {
        Eigen::JacobiSVD<Matrix> svd(xtlx);
        const auto& sv = svd.singularValues();
        if (sv(0) == 0.0 || sv(sv.size() - 1) <= tol * sv(0)) {
            out.flags.n2 = true;
            return out;
        }
    }
    Eigen::PartialPivLU<Matrix> lu(xtlx);
    out.beta = lu.solve(lx.transpose() * y);
    const Vector resid = y - model.design() * out.beta;
    const Vector lresid = apply_ar1_inverse(resid, out.rho);
    out.sigma2 = resid.dot(lresid) / static_cast<double>(n - k);

    Matrix inner = restriction.R * lu.solve(restriction.R.transpose());
    inner = 0.5 * (inner + inner.transpose()).eval();
    const double rho_abs = std::abs(out.rho);
    const double lambda_inv_scale = (1.0 + rho_abs) * (1.0 + rho_abs) /
                                    std::abs(1.0 - out.rho * out.rho);
    const double sigma2_scale = resid.squaredNorm() * lambda_inv_scale /
                                static_cast<double>(n - k);
    if (near_zero(out.sigma2, sigma2_scale, tol) || spectrally_singular(inner, tol)) {
        out.flags.n2_star = true;
        return out;
    }
    out.omega = out.sigma2 * inner;
    return out;
}

OlsAr1Omega ols_ar1_omega(const LinearModel& model, const Restriction& restriction,
                          const Vector& y, const RhoEstimatorSpec& spec) {
    validate_rho_spec(spec, model.n(), model.k());
    const Eigen::Index n = model.n();
    OlsAr1Omega out;
    out.omega = Matrix::Zero(restriction.q(), restriction.q());

    const Vector u = model.residuals(y);
    const RhoResult rho = rho_from_residuals(u, spec, model.tolerances().membership, y.norm());
    if (rho.degenerate) {
        out.n0 = true;
        return out;
    }
    out.rho = rho.value;
    out.sigma2 = u.squaredNorm() / static_cast<double>(n - model.k());

    // Lambda(rho) itself stays well-defined for every rho, so only N0 and the
    // singularity of the sandwich are exceptional here.
    Matrix lambda(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        lambda(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = std::pow(out.rho, static_cast<double>(i - j));
            lambda(i, j) = v;
            lambda(j, i) = v;
        }
    }
    const Matrix gram_rt = model.solve_gram(restriction.R.transpose());
    const Matrix xg = model.design() * gram_rt;  // n x q
    Matrix omega = out.sigma2 * xg.transpose() * lambda * xg;
    omega = 0.5 * (omega + omega.transpose()).eval();
    if (spectrally_singular(omega, model.tolerances().singular)) {
        out.n0_star = true;
        return out;
    }
    out.omega = omega;
    return out;
}

}  // namespace robustsize
