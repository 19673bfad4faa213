#include "robustsize/statistics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "robustsize/covariance.hpp"

namespace robustsize {

namespace {

constexpr const char* kSingularOmega = "singular-omega";

bool restricted_coefficients_vanish(const LinearModel& model, const Restriction& restriction,
                                    const Vector& z, double tol) {
    const Vector g = restriction.R * model.ols(z);
    const double scale = restriction.R.cwiseAbs().maxCoeff() * z.norm();
    return near_zero(g.cwiseAbs().maxCoeff(), scale, tol);
}

double membership_margin(const LinearModel& model, const Vector& v) {
    const double norm = v.norm();
    if (norm == 0.0) return 0.0;
    return (v - model.project(v)).norm() / norm;
}

}  // namespace

const char* test_kind_name(TestKind kind) {
    switch (kind) {
        case TestKind::WeightedAutocov: return "weighted";
        case TestKind::GeneralQuadratic: return "gq";
        case TestKind::Eicker: return "eicker";
        case TestKind::Het: return "het";
        case TestKind::Fgls: return "fgls";
        case TestKind::OlsAr1: return "ols-ar1";
        case TestKind::UncorrectedF: return "f";
    }
    return "?";
}

TestEvaluator::TestEvaluator(const TestDefinition& def, const LinearModel& model,
                             const Restriction& restriction, Tolerances tol)
    : def_(def), tol_(tol) {
    if (!(def_.critical > 0.0) || !std::isfinite(def_.critical)) {
        throw std::invalid_argument("critical value must satisfy 0 < C < infinity");
    }
    if (def_.adjusted) {
        model_ = std::make_shared<LinearModel>(def_.adjusted->xbar, tol);
        restriction_ = std::make_shared<Restriction>(def_.adjusted->rbar, def_.adjusted->rhs, tol);
    } else {
        model_ = std::make_shared<LinearModel>(model);
        restriction_ = std::make_shared<Restriction>(restriction);
    }
    const LinearModel& m = *model_;
    const Restriction& rr = *restriction_;
    if (rr.R.cols() != m.k()) throw std::invalid_argument("restriction width != design width");

    gram_rt_ = m.solve_gram(rr.R.transpose());
    a_ = gram_rt_.transpose() * m.design().transpose();

    // Scale of Omega per unit ||u_hat||^2, used to recognize the estimator
    // collapsing because y sits (numerically) in the design span.
    const double sx = Eigen::JacobiSVD<Matrix>(m.design()).singularValues()(0);
    const double sg = Eigen::JacobiSVD<Matrix>(gram_rt_).singularValues()(0);
    const double nd = static_cast<double>(m.n());

    switch (def_.kind) {
        case TestKind::WeightedAutocov: {
            weights_ = lag_window_weights(def_.window, m.n());
            double wmax = 0;
            for (double w : weights_.w) wmax = std::max(wmax, std::abs(w));
            omega_unit_ = nd * wmax * sx * sx * sg * sg;
            break;
        }
        case TestKind::GeneralQuadratic:
            if (def_.wstar.rows() != m.n() || def_.wstar.cols() != m.n()) {
                throw std::invalid_argument("quadratic weighting matrix must be n x n");
            }
            omega_unit_ = nd * std::max(def_.wstar.cwiseAbs().maxCoeff(), 1e-300) * sx * sx *
                          sg * sg;
            break;
        case TestKind::Eicker:
            omega_unit_ = nd * sx * sx * sg * sg;
            break;
        case TestKind::Het: {
            const Vector h = m.leverages();
            double dmax = 1.0;
            if (def_.het == HetVariant::HC1) dmax = nd / static_cast<double>(m.n() - m.k());
            if (def_.het == HetVariant::HC2 || def_.het == HetVariant::HC3) {
                for (Eigen::Index i = 0; i < h.size(); ++i) {
                    if (h[i] >= 1.0 - tol_.membership) continue;
                    const double base = 1.0 / (1.0 - h[i]);
                    dmax = std::max(dmax, def_.het == HetVariant::HC2 ? base : base * base);
                }
            }
            const double sa = Eigen::JacobiSVD<Matrix>(a_).singularValues()(0);
            omega_unit_ = dmax * sa * sa;
            break;
        }
        case TestKind::Fgls:
        case TestKind::OlsAr1:
            if (def_.rho.a1 != 1 && def_.rho.a1 != 2) throw std::invalid_argument("a1 must be 1 or 2");
            break;
        case TestKind::UncorrectedF:
            s_chol_ = rr.R * gram_rt_;
            break;
    }
}

TestOutcome TestEvaluator::quadratic_outcome(const Vector& rb, const Matrix& omega, double floor,
                                             const char* singular_set) const {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(omega);
    const Vector abs_l = eig.eigenvalues().cwiseAbs();
    const double top = abs_l.maxCoeff();
    TestOutcome out;
    if (top <= floor || abs_l.minCoeff() <= tol_.singular * top) {
        out.exceptional = true;
        out.exceptional_set = singular_set;
        return out;
    }
    const Vector w = eig.eigenvectors().transpose() * rb;
    double value = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) value += w[i] * w[i] / eig.eigenvalues()[i];
    out.value = value;
    return out;
}

TestOutcome TestEvaluator::eval_weighted(const Vector& y) const {
    const LinearModel& m = *model_;
    const Vector rb = a_ * y - restriction_->r;
    const Matrix psi = psi_weighted(m, y, weights_);
    Matrix omega = static_cast<double>(m.n()) * gram_rt_.transpose() * psi * gram_rt_;
    omega = 0.5 * (omega + omega.transpose()).eval();
    const double span_scale = tol_.membership * y.norm();
    return quadratic_outcome(rb, omega, omega_unit_ * span_scale * span_scale, kSingularOmega);
}

TestOutcome TestEvaluator::eval_gq(const Vector& y) const {
    const LinearModel& m = *model_;
    const Vector rb = a_ * y - restriction_->r;
    const Matrix psi = psi_general_quadratic(m, y, def_.wstar);
    Matrix omega = static_cast<double>(m.n()) * gram_rt_.transpose() * psi * gram_rt_;
    omega = 0.5 * (omega + omega.transpose()).eval();
    const double span_scale = tol_.membership * y.norm();
    return quadratic_outcome(rb, omega, omega_unit_ * span_scale * span_scale, kSingularOmega);
}

TestOutcome TestEvaluator::eval_eicker(const Vector& y) const {
    const LinearModel& m = *model_;
    const Vector rb = a_ * y - restriction_->r;
    const Matrix psi = psi_eicker(m, y);
    Matrix omega = static_cast<double>(m.n()) * gram_rt_.transpose() * psi * gram_rt_;
    omega = 0.5 * (omega + omega.transpose()).eval();
    const double span_scale = tol_.membership * y.norm();
    return quadratic_outcome(rb, omega, omega_unit_ * span_scale * span_scale, kSingularOmega);
}

TestOutcome TestEvaluator::eval_het(const Vector& y) const {
    const LinearModel& m = *model_;
    const Vector rb = a_ * y - restriction_->r;
    const Matrix psi = psi_het(m, y, def_.het);
    Matrix omega = restriction_->R * psi * restriction_->R.transpose();
    omega = 0.5 * (omega + omega.transpose()).eval();
    const double span_scale = tol_.membership * y.norm();
    return quadratic_outcome(rb, omega, omega_unit_ * span_scale * span_scale, kSingularOmega);
}

TestOutcome TestEvaluator::eval_fgls(const Vector& y) const {
    const FglsComponents parts = fgls_components(*model_, *restriction_, y, def_.rho);
    if (parts.flags.any()) {
        TestOutcome out;
        out.exceptional = true;
        out.exceptional_set = parts.flags.first_set();
        return out;
    }
    const Vector rb = restriction_->R * parts.beta - restriction_->r;
    return quadratic_outcome(rb, parts.omega, 0.0, "N2*");
}

TestOutcome TestEvaluator::eval_ols_ar1(const Vector& y) const {
    const OlsAr1Omega parts = ols_ar1_omega(*model_, *restriction_, y, def_.rho);
    if (parts.n0 || parts.n0_star) {
        TestOutcome out;
        out.exceptional = true;
        out.exceptional_set = parts.n0 ? "N0" : "N0*";
        return out;
    }
    const Vector rb = a_ * y - restriction_->r;
    return quadratic_outcome(rb, parts.omega, 0.0, "N0*");
}

TestOutcome TestEvaluator::eval_uncorrected(const Vector& y) const {
    const LinearModel& m = *model_;
    const Vector u = m.residuals(y);
    const double rss = u.squaredNorm();
    TestOutcome out;
    if (rss <= tol_.membership * tol_.membership * y.squaredNorm() || rss == 0.0) {
        out.exceptional = true;
        out.exceptional_set = "span(X)";
        return out;
    }
    const Vector rb = a_ * y - restriction_->r;
    const Vector solved = s_chol_.ldlt().solve(rb);
    const double q = static_cast<double>(restriction_->q());
    out.value = (static_cast<double>(m.n() - m.k()) / q) * rb.dot(solved) / rss;
    return out;
}

TestOutcome TestEvaluator::operator()(const Vector& y) const {
    switch (def_.kind) {
        case TestKind::WeightedAutocov: return eval_weighted(y);
        case TestKind::GeneralQuadratic: return eval_gq(y);
        case TestKind::Eicker: return eval_eicker(y);
        case TestKind::Het: return eval_het(y);
        case TestKind::Fgls: return eval_fgls(y);
        case TestKind::OlsAr1: return eval_ols_ar1(y);
        case TestKind::UncorrectedF: return eval_uncorrected(y);
    }
    return {};
}

TestOutcome evaluate(const TestDefinition& def, const LinearModel& model,
                     const Restriction& restriction, const Vector& y, Tolerances tol) {
    return TestEvaluator(def, model, restriction, tol)(y);
}

AdjustedDesign build_adjusted(const LinearModel& model, const Restriction& restriction,
                              Tolerances tol) {
    const Eigen::Index n = model.n();
    const Eigen::Index k = model.k();
    const Eigen::Index q = restriction.q();
    const Vector ep = e_plus(n);
    const Vector em = e_minus(n);

    AdjustedDesign design;
    design.rhs = restriction.r;

    const double margin_p = membership_margin(model, ep);
    const double margin_m = membership_margin(model, em);
    const bool in_p = margin_p <= tol.membership;
    const bool in_m = margin_m <= tol.membership;
    for (auto [label, margin] : {std::pair{"e+", margin_p}, std::pair{"e-", margin_m}}) {
        if (margin > tol.membership / 16.0 && margin < tol.membership * 16.0) {
            design.notes.push_back(std::string("span test for ") + label +
                                   " is near the tolerance (margin " + std::to_string(margin) +
                                   "); scenario selection may be ambiguous");
        }
    }
    const bool rz_p = in_p && restricted_coefficients_vanish(model, restriction, ep, tol.membership);
    const bool rz_m = in_m && restricted_coefficients_vanish(model, restriction, em, tol.membership);

    auto with_columns = [&](std::initializer_list<const Vector*> cols) {
        Matrix xbar(n, k + static_cast<Eigen::Index>(cols.size()));
        xbar.leftCols(k) = model.design();
        Eigen::Index at = k;
        for (const Vector* c : cols) xbar.col(at++) = *c;
        return xbar;
    };
    auto finish = [&](Matrix xbar, int scenario, std::vector<std::string> added) {
        design.scenario = scenario;
        design.added = std::move(added);
        design.xbar = std::move(xbar);
        design.rbar = Matrix::Zero(q, design.xbar.cols());
        design.rbar.leftCols(k) = restriction.R;
        if (design.kbar() >= n) {
            throw adjustment_error(adjustment_error::Reason::Impossible,
                                   "enlarged design uses every degree of freedom (kbar = n); "
                                   "the adjusted statistic is identically zero");
        }
        LinearModel enlarged(design.xbar, tol);
        Restriction enlarged_restriction(design.rbar, design.rhs, tol);
        if (!check_r_and_x(enlarged, enlarged_restriction).verdict) {
            throw adjustment_error(adjustment_error::Reason::Impossible,
                                   "enlarged design fails the rank condition; the adjusted "
                                   "variance estimator is singular everywhere");
        }
        return design;
    };

    if (in_p && in_m) {
        if (rz_p && rz_m) {
            // Both limit directions already lie in the design span and are
            // untouched by the restriction: size control holds as is.
            design.scenario = 0;
            design.xbar = model.design();
            design.rbar = restriction.R;
            return design;
        }
        throw adjustment_error(adjustment_error::Reason::Impossible,
                               "a harmonic limit direction lies in the design span but the "
                               "tested restriction involves it (see the audit verdict)");
    }
    if (in_p && !in_m) {
        if (!rz_p) {
            throw adjustment_error(adjustment_error::Reason::Impossible,
                                   "the constant direction lies in the design span and the "
                                   "tested restriction involves it (see the audit verdict)");
        }
        return finish(with_columns({&em}), 1, {"e-"});
    }
    if (!in_p && in_m) {
        if (!rz_m) {
            throw adjustment_error(adjustment_error::Reason::Impossible,
                                   "the alternating direction lies in the design span and the "
                                   "tested restriction involves it (see the audit verdict)");
        }
        return finish(with_columns({&ep}), 2, {"e+"});
    }

    // Neither direction lies in the span; how many dimensions do they add?
    Matrix xpm(n, k + 2);
    xpm.leftCols(k) = model.design();
    xpm.col(k) = ep;
    xpm.col(k + 1) = em;
    const Eigen::Index augmented_rank = numerical_rank(xpm, tol);
    if (augmented_rank == k + 2) {
        return finish(std::move(xpm), 3, {"e+", "e-"});
    }

    // One added dimension covers both: take e+ (then e-) as the column and
    // require the leftover direction to drop out of the tested coefficients.
    {
        Matrix xbar = with_columns({&ep});
        LinearModel enlarged(xbar, tol);
        Matrix rbar = Matrix::Zero(q, k + 1);
        rbar.leftCols(k) = restriction.R;
        const Vector side = rbar * enlarged.ols(em);
        if (near_zero(side.cwiseAbs().maxCoeff(), rbar.cwiseAbs().maxCoeff() * em.norm(),
                      tol.membership)) {
            return finish(std::move(xbar), 4, {"e+"});
        }
    }
    {
        Matrix xbar = with_columns({&em});
        LinearModel enlarged(xbar, tol);
        Matrix rbar = Matrix::Zero(q, k + 1);
        rbar.leftCols(k) = restriction.R;
        const Vector side = rbar * enlarged.ols(ep);
        if (near_zero(side.cwiseAbs().maxCoeff(), rbar.cwiseAbs().maxCoeff() * ep.norm(),
                      tol.membership)) {
            return finish(std::move(xbar), 5, {"e-"});
        }
    }
    throw adjustment_error(adjustment_error::Reason::SizeOne,
                           "the leftover harmonic direction still loads on the tested "
                           "coefficients; the adjusted test has size one");
}

TestOutcome evaluate_adjusted(const AdjustedDesign& adj, const TestDefinition& def,
                              const Vector& y, Tolerances tol) {
    TestDefinition plain = def;
    plain.adjusted.reset();
    LinearModel enlarged(adj.xbar, tol);
    Restriction enlarged_restriction(adj.rbar, adj.rhs, tol);
    return TestEvaluator(plain, enlarged, enlarged_restriction, tol)(y);
}

}  // namespace robustsize
