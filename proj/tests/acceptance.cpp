// Acceptance suite: one line per criterion, nonzero exit on any failure.
// argv[1] (optional) is the path to the command-line tool, used by the
// reproducibility criterion.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "robustsize/csv.hpp"
#include "robustsize/montecarlo.hpp"

using namespace robustsize;
using testutil::change_in_mean_design;
using testutil::location_model;
using testutil::location_restriction;
using testutil::random_design;
using testutil::random_vector;
using testutil::second_coefficient_zero;

namespace {

int failures = 0;
std::string cli_path;

double now() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void criterion(int number, const std::string& title, const std::function<bool(std::string&)>& run) {
    std::string detail;
    const double t0 = now();
    bool ok = false;
    try {
        ok = run(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double elapsed = now() - t0;
    std::printf("criterion %2d %s %-48s (%.1fs)%s%s\n", number, ok ? "PASS" : "FAIL",
                title.c_str(), elapsed, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

TestDefinition bartlett_def(double bandwidth, double critical) {
    TestDefinition def;
    def.window = {LagWindowKind::Bartlett, bandwidth, {}};
    def.critical = critical;
    return def;
}

McConfig config(std::int64_t reps, std::uint64_t seed) {
    McConfig mc;
    mc.reps = reps;
    mc.seed = seed;
    return mc;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// 1. The sandwich form of the robust variance equals the B-matrix quadratic
//    form to 1e-10 relative Frobenius error on 100 random tuples.
bool omega_identity(std::string& detail) {
    double worst = 0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        auto engine = substream(8100 + i, 9, 0);
        const Eigen::Index n = 5 + static_cast<Eigen::Index>(engine() % 26);
        const Eigen::Index k = 1 + static_cast<Eigen::Index>(engine() % 3);
        const Eigen::Index q = 1 + static_cast<Eigen::Index>(engine() % k);
        LinearModel m(random_design(n, k, 8200 + i));
        Matrix r_mat(q, k);
        for (Eigen::Index a = 0; a < q; ++a)
            for (Eigen::Index b = 0; b < k; ++b)
                r_mat(a, b) = ((engine() % 7) - 3.0) + ((a + b) % 2 ? 0.5 : -0.25);
        if (numerical_rank(r_mat) != q) continue;
        Restriction r(r_mat, random_vector(q, 8300 + i));
        const Vector y = random_vector(n, 8400 + i);
        LagWindow window;
        window.kind = (i % 3 == 0)   ? LagWindowKind::Bartlett
                      : (i % 3 == 1) ? LagWindowKind::Parzen
                                     : LagWindowKind::QuadraticSpectral;
        window.bandwidth = 1.0 + static_cast<double>(engine() % 5);
        const auto w = lag_window_weights(window, n);
        const Matrix direct = omega_weighted(m, r, y, w);
        const Matrix b = b_matrix(m, r, y);
        const Matrix via_b = b * w.toeplitz() * b.transpose();
        const double err = (direct - via_b).norm() / std::max(via_b.norm(), 1e-100);
        worst = std::max(worst, err);
    }
    detail = "worst relative error " + fmt(worst);
    return worst <= 1e-10;
}

// 2. The odd-n Bartlett constant from the location model.
bool bartlett_constant(std::string& detail) {
    double worst = 0;
    int worst_n = 0;
    double worst_f = 0;
    int violations = 0;
    for (int n = 3; n <= 199; n += 2) {
        LinearModel m = location_model(n);
        for (int f = 1; f <= 10; ++f) {
            const auto w = lag_window_weights(
                {LagWindowKind::Bartlett, n * (f / 10.0), {}}, n);
            const double psi = psi_weighted(m, e_minus(n), w)(0, 0);
            const double value = 1.0 / (n * psi);
            if (!(value < 1.563)) ++violations;
            if (value > worst) {
                worst = value;
                worst_n = n;
                worst_f = f / 10.0;
            }
        }
    }
    detail = "max " + fmt(worst) + " at n=" + std::to_string(worst_n) + ", M/n=" + fmt(worst_f) +
             (violations ? "; " + std::to_string(violations) +
                               " grid cell(s) >= 1.563 (the bound holds for every odd n >= 5, "
                               "sup 25/16 at n=5)"
                         : "");
    return violations == 0;
}

// 3. Exact zeros of the weighted statistic at the alternating direction.
bool exact_zeros(std::string& detail) {
    double worst = 0;
    for (Eigen::Index n : {4, 8, 14}) {
        LinearModel m = location_model(n);
        const double beta0 = 1.3;
        const auto out = evaluate(bartlett_def(0.4 * n, 2.0), m, location_restriction(beta0),
                                  e_minus(n) + beta0 * e_plus(n));
        if (out.exceptional) {
            detail = "unexpected exceptional value in the location model";
            return false;
        }
        worst = std::max(worst, std::abs(out.value));
    }
    for (auto [n, t0] : {std::pair<Eigen::Index, Eigen::Index>{12, 6}, {8, 4}, {16, 6}}) {
        LinearModel m(change_in_mean_design(n, t0));
        const auto out = evaluate(bartlett_def(4.0, 2.0), m, second_coefficient_zero(),
                                  e_minus(n));
        if (out.exceptional) {
            detail = "unexpected exceptional value in the change-in-mean design";
            return false;
        }
        worst = std::max(worst, std::abs(out.value));
    }
    detail = "max |T| = " + fmt(worst);
    return worst <= 1e-12;
}

// 4. The uncorrected F statistic equals one at every basis vector.
bool uncorrected_f_ones(std::string& detail) {
    double worst = 0;
    TestDefinition def;
    def.kind = TestKind::UncorrectedF;
    def.critical = 2.0;
    for (Eigen::Index n = 2; n <= 20; ++n) {
        LinearModel m = location_model(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Vector e = Vector::Zero(n);
            e[i] = 1.0;
            const auto out = evaluate(def, m, location_restriction(), e);
            worst = std::max(worst, std::abs(out.value - 1.0));
        }
    }
    detail = "max |T - 1| = " + fmt(worst);
    return worst <= 1e-12;
}

// 5. The offending AR(1) sequence collapses the null rejection probability.
bool offending_sequence(std::string& detail) {
    LinearModel m = location_model(10);
    Restriction r = location_restriction();
    const TestDefinition def = bartlett_def(4.0, 2.0);
    const McConfig mc = config(100000, 42);
    const auto curve = size_curve_ar1(def, m, r, {0.999, 0.0, -0.999}, mc);
    const double p_hi = curve[0].second.p;
    const double p_mid = curve[1].second.p;
    const double p_lo = curve[2].second.p;
    detail = "p(0.999)=" + fmt(p_hi) + " p(0)=" + fmt(p_mid) + " p(-0.999)=" + fmt(p_lo);
    return p_hi >= 0.8 && (p_hi - p_mid) >= 0.5 && p_lo <= 0.05;
}

// 6. Calibrated critical value for the adjusted change-in-mean test.
bool adjusted_calibration(std::string& detail) {
    LinearModel m(change_in_mean_design(12, 6));
    Restriction r = second_coefficient_zero();
    const AdjustedDesign adj = build_adjusted(m, r);
    if (adj.scenario != 1) {
        detail = "expected the alternating-column scenario";
        return false;
    }
    TestDefinition def = bartlett_def(4.0, 1.0);
    def.adjusted = std::make_shared<AdjustedDesign>(adj);
    const auto result = calibrate_critical(def, m, r, 0.05, default_rho_grid(),
                                           config(1000000, 20240801), 1e-4,
                                           config(1000000, 20240801));
    const double bound = 0.05 + 3.0 * result.sup_size.se;
    detail = "C=" + fmt(result.c_delta) + " certified " + fmt(result.sup_size.p) + " <= " +
             fmt(bound) + " at rho=" + fmt(result.arg_sup_rho);
    return result.sup_size.p <= bound;
}

// 7. Yule-Walker FGLS: size-one audit and the Monte Carlo collapse.
bool fgls_size_one(std::string& detail) {
    LinearModel m = location_model(10);
    Restriction r = location_restriction();
    const auto report = audit_gls(m, r, RhoEstimatorSpec{1, 0}, 2.0);
    if (report.verdict != Verdict::SizeOne) {
        detail = std::string("audit verdict ") + verdict_name(report.verdict);
        return false;
    }
    TestDefinition def;
    def.kind = TestKind::Fgls;
    def.rho = RhoEstimatorSpec{1, 0};
    def.critical = 2.0;
    const auto est = rejection_probability(def, m, r, Vector::Zero(10), 1.0,
                                           ar1_matrix(10, 0.999), config(100000, 42));
    detail = "audit SizeOne; p(0.999) = " + fmt(est.p);
    return est.p > 0.8;
}

// 8. The closed-form tridiagonal inverse across the stationary range.
bool tridiagonal_inverse(std::string& detail) {
    double worst = 0;
    for (Eigen::Index n = 2; n <= 100; ++n) {
        for (int i = -99; i <= 99; ++i) {
            const double rho = i / 100.0;
            const Matrix lambda = ar1_matrix(n, rho);
            const Matrix inverse = ar1_inverse(n, rho);
            // band-limited product: the inverse is tridiagonal
            for (Eigen::Index a = 0; a < n; ++a) {
                for (Eigen::Index b = 0; b < n; ++b) {
                    double acc = lambda(a, b) * inverse(b, b);
                    if (b > 0) acc += lambda(a, b - 1) * inverse(b - 1, b);
                    if (b + 1 < n) acc += lambda(a, b + 1) * inverse(b + 1, b);
                    const double target = a == b ? 1.0 : 0.0;
                    worst = std::max(worst, std::abs(acc - target));
                }
            }
        }
    }
    detail = "max |Lambda Lambda^{-1} - I| = " + fmt(worst);
    return worst <= 1e-10;
}

// 9. The projected-and-normalized AR(1) family approaches its closed-form
//    limit matrix, with a vanishing cross term.
bool limit_matrices(std::string& detail) {
    double worst_d = 0, worst_cross = 0;
    for (Eigen::Index n : {4, 8, 16}) {
        for (int endpoint : {1, -1}) {
            const Matrix z = endpoint == 1 ? e_plus(n) : e_minus(n);
            const auto probe = singular_approach_probe(
                [&](double rho) { return ar1_matrix(n, rho); }, z,
                {endpoint * (1.0 - 1e-4)});
            const Matrix d = ar1_limit_d(n, endpoint);
            worst_d = std::max(worst_d, (probe[0].d - d).cwiseAbs().maxCoeff());
            worst_cross = std::max(worst_cross, probe[0].cross.cwiseAbs().maxCoeff());
        }
    }
    detail = "max |Dm - D| = " + fmt(worst_d) + ", max cross = " + fmt(worst_cross);
    return worst_d <= 1e-2 && worst_cross <= 1e-2;
}

// 10. The AR(2) correlation matrix concentrates on the harmonic span.
bool ar2_concentration(std::string& detail) {
    const double nu = 3.14159265358979323846 / 3.0;
    const Matrix basis = harmonic_basis(8, nu).basis;
    const Matrix limit = basis * basis.transpose();
    double prev = 1e18;
    bool decreasing = true;
    for (double r : {0.9, 0.99, 0.999}) {
        const double dist = (ar2_matrix(8, Ar2Param(r, nu)) - limit).norm();
        decreasing = decreasing && dist < prev;
        prev = dist;
    }
    const double final_dist = (ar2_matrix(8, Ar2Param(0.9999, nu)) - limit).norm();
    detail = "distance at r=0.9999: " + fmt(final_dist);
    return decreasing && final_dist <= 2e-3;
}

// 11. Invariance suites: the group action, shifts along the appended column,
//     and the Yule-Walker bound.
bool invariance_suites(std::string& detail) {
    const Eigen::Index n = 10;
    LinearModel m(random_design(n, 2, 77));
    Restriction r = second_coefficient_zero();
    const NullPoint np = null_representative(m, r);

    std::vector<TestDefinition> defs;
    defs.push_back(bartlett_def(3.0, 2.0));
    {
        TestDefinition gq;
        gq.kind = TestKind::GeneralQuadratic;
        gq.wstar = lag_window_weights({LagWindowKind::Parzen, 3.0, {}}, n).toeplitz();
        gq.critical = 2.0;
        defs.push_back(gq);
        TestDefinition eicker;
        eicker.kind = TestKind::Eicker;
        eicker.critical = 2.0;
        defs.push_back(eicker);
        TestDefinition het;
        het.kind = TestKind::Het;
        het.het = HetVariant::HC3;
        het.critical = 2.0;
        defs.push_back(het);
        TestDefinition fgls;
        fgls.kind = TestKind::Fgls;
        fgls.rho = RhoEstimatorSpec{1, 0};
        fgls.critical = 2.0;
        defs.push_back(fgls);
        TestDefinition ols;
        ols.kind = TestKind::OlsAr1;
        ols.rho = RhoEstimatorSpec{2, 1};
        ols.critical = 2.0;
        defs.push_back(ols);
        TestDefinition f;
        f.kind = TestKind::UncorrectedF;
        f.critical = 2.0;
        defs.push_back(f);
    }
    std::vector<TestEvaluator> evals;
    for (const auto& def : defs) evals.emplace_back(def, m, r, Tolerances{});

    double worst = 0;
    int tuples = 0;
    for (std::uint64_t i = 0; i < 30; ++i) {
        const Vector y = random_vector(n, 8800 + i);
        auto engine = substream(8900 + i, 4, 0);
        std::uniform_real_distribution<double> unif(-3.0, 3.0);
        double alpha = unif(engine);
        if (std::abs(alpha) < 0.05) alpha = -2.0;
        Vector shift(2);
        shift << unif(engine), 0.0;
        const Vector z = alpha * (y - np.mu0) + np.mu0 + m.design() * shift;
        for (const auto& eval : evals) {
            const auto base = eval(y);
            const auto moved = eval(z);
            worst = std::max(worst,
                             std::abs(moved.value - base.value) / (1.0 + std::abs(base.value)));
            ++tuples;
        }
    }
    if (tuples < 200 || worst > 1e-9) {
        detail = "group invariance error " + fmt(worst) + " over " + std::to_string(tuples);
        return false;
    }

    LinearModel cm(change_in_mean_design(12, 6));
    Restriction cr = second_coefficient_zero();
    const AdjustedDesign adj = build_adjusted(cm, cr);
    double worst_shift = 0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const Vector y = random_vector(12, 9000 + i);
        const double c = -5.0 + 0.2 * static_cast<double>(i);
        const auto base = evaluate_adjusted(adj, bartlett_def(4.0, 2.0), y);
        const auto moved = evaluate_adjusted(adj, bartlett_def(4.0, 2.0), y + c * e_minus(12));
        worst_shift = std::max(worst_shift, std::abs(moved.value - base.value) /
                                                (1.0 + std::abs(base.value)));
    }
    if (worst_shift > 1e-9) {
        detail = "adjusted shift invariance error " + fmt(worst_shift);
        return false;
    }

    int inside = 0;
    int total = 0;
    for (Eigen::Index nn = 3; nn <= 30; ++nn) {
        LinearModel loc = location_model(nn);
        for (std::uint64_t i = 0; i < 358; ++i) {
            const double rho = rho_hat(loc, random_vector(nn, 9100 + 1000 * nn + i),
                                       RhoEstimatorSpec{1, 0});
            if (std::abs(rho) < 1.0) ++inside;
            ++total;
        }
    }
    detail = "group err " + fmt(worst) + ", shift err " + fmt(worst_shift) + ", |rho|<1 on " +
             std::to_string(inside) + "/" + std::to_string(total);
    return inside == total && total >= 10000;
}

// 12. Null rejection does not depend on the null mean point or the scale.
bool null_invariance(std::string& detail) {
    LinearModel m(random_design(10, 2, 33));
    Restriction r = second_coefficient_zero();
    const Matrix sigma = ar1_matrix(10, 0.5);
    const TestDefinition def = bartlett_def(4.0, 2.0);
    const auto p1 = rejection_probability(def, m, r, Vector::Zero(10), 1.0, sigma,
                                          config(100000, 51));
    const auto p2 = rejection_probability(def, m, r, m.design().col(0) * 4.0, 1.0, sigma,
                                          config(100000, 52));
    const auto p3 = rejection_probability(def, m, r, m.design().col(0) * -1.5, 7.0, sigma,
                                          config(100000, 53));
    const double d12 = std::abs(p1.p - p2.p);
    const double d13 = std::abs(p1.p - p3.p);
    const double pooled12 = std::sqrt(p1.se * p1.se + p2.se * p2.se);
    const double pooled13 = std::sqrt(p1.se * p1.se + p3.se * p3.se);
    detail = "p = " + fmt(p1.p) + ", " + fmt(p2.p) + ", " + fmt(p3.p);
    return d12 <= 3.0 * pooled12 && d13 <= 3.0 * pooled13;
}

// 13. Elliptical errors reproduce the Gaussian null rejection probability.
bool elliptical_equivalence(std::string& detail) {
    LinearModel m(random_design(10, 2, 34));
    Restriction r = second_coefficient_zero();
    const Matrix sigma = ar1_matrix(10, 0.5);
    const McConfig mc = config(100000, 61);
    TestDefinition fgls;
    fgls.kind = TestKind::Fgls;
    fgls.rho = RhoEstimatorSpec{1, 0};
    fgls.critical = 2.0;
    double worst = 0;
    for (const TestDefinition& def : {bartlett_def(4.0, 2.0), fgls}) {
        for (RadialLaw law : {RadialLaw::UnitScale, RadialLaw::ChiMixture}) {
            const auto check = elliptical_null_check(def, m, r, sigma, law, mc);
            const double pooled = std::sqrt(check.gaussian.se * check.gaussian.se +
                                            check.elliptical.se * check.elliptical.se);
            const double gap = std::abs(check.gaussian.p - check.elliptical.p);
            if (gap > 4.0 * pooled + 1e-12) {
                detail = "gap " + fmt(gap) + " exceeds 4 pooled se";
                return false;
            }
            worst = std::max(worst, gap);
        }
    }
    detail = "max |pG - pE| = " + fmt(worst);
    return true;
}

// 14. Random designs essentially always satisfy the audit conditions.
bool genericity(std::string& detail) {
    const double fraction =
        genericity_probe(8, 2, second_coefficient_zero(), bartlett_def(3.0, 2.0), 1000, 314,
                         false);
    detail = "fraction " + fmt(fraction);
    return fraction == 1.0;
}

// 15. Identical seeds give bit-identical report files across worker counts.
bool reproducibility(std::string& detail) {
    if (cli_path.empty()) {
        detail = "cli path not supplied";
        return false;
    }
    const std::string dir = "acceptance_tmp";
    std::system(("mkdir -p " + dir).c_str());
    write_csv(dir + "/x.csv", Matrix(e_plus(10)));
    write_csv(dir + "/R.csv", Matrix::Ones(1, 1));

    auto run = [&](const std::string& threads, const std::string& out,
                   const std::string& command_tail) {
        const std::string cmd = "ROBUSTSIZE_THREADS=" + threads + " '" + cli_path + "' " +
                                command_tail + " --out " + out + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };

    const std::string size_tail = "size-curve --x " + dir + "/x.csv --r " + dir +
                                  "/R.csv --reps 10000 --seed 31 --rho-grid 0,0.9 --csv " + dir +
                                  "/curve1.csv";
    const std::string size_tail2 = "size-curve --x " + dir + "/x.csv --r " + dir +
                                   "/R.csv --reps 10000 --seed 31 --rho-grid 0,0.9 --csv " + dir +
                                   "/curve2.csv";
    if (!run("1", dir + "/size1.json", size_tail) || !run("4", dir + "/size2.json", size_tail2)) {
        detail = "size-curve invocation failed";
        return false;
    }
    if (slurp(dir + "/size1.json").empty() ||
        slurp(dir + "/size1.json") != slurp(dir + "/size2.json") ||
        slurp(dir + "/curve1.csv") != slurp(dir + "/curve2.csv")) {
        detail = "size-curve outputs differ across worker counts";
        return false;
    }

    const std::string ell_tail = "elliptical-check --x " + dir + "/x.csv --r " + dir +
                                 "/R.csv --reps 10000 --seed 31 --rho 0.5 --radial chi-mixture";
    if (!run("1", dir + "/ell1.json", ell_tail) || !run("4", dir + "/ell2.json", ell_tail)) {
        detail = "elliptical-check invocation failed";
        return false;
    }
    if (slurp(dir + "/ell1.json").empty() || slurp(dir + "/ell1.json") != slurp(dir + "/ell2.json")) {
        detail = "elliptical-check outputs differ across worker counts";
        return false;
    }
    detail = "size-curve and elliptical-check reports are byte-identical";
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) cli_path = argv[1];
    criterion(1, "robust variance equals the B-matrix form", omega_identity);
    criterion(2, "odd-n Bartlett constant stays below 1.563", bartlett_constant);
    criterion(3, "exact zeros at the alternating direction", exact_zeros);
    criterion(4, "uncorrected F equals one at basis vectors", uncorrected_f_ones);
    criterion(5, "offending AR(1) sequence collapses the size", offending_sequence);
    criterion(6, "adjusted test calibrates to the 5% level", adjusted_calibration);
    criterion(7, "Yule-Walker FGLS size-one pattern", fgls_size_one);
    criterion(8, "closed-form AR(1) inverse", tridiagonal_inverse);
    criterion(9, "projected AR(1) limit matrices", limit_matrices);
    criterion(10, "AR(2) concentration on the harmonic span", ar2_concentration);
    criterion(11, "invariance suites", invariance_suites);
    criterion(12, "null rejection free of the null point and scale", null_invariance);
    criterion(13, "elliptical null equivalence", elliptical_equivalence);
    criterion(14, "generic designs satisfy the audit conditions", genericity);
    criterion(15, "bit-identical reports across worker counts", reproducibility);
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures;
}
