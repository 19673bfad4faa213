#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "robustsize/csv.hpp"
#include "robustsize/montecarlo.hpp"

using namespace robustsize;
using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct TestFlags {
    std::string family = "weighted";
    std::string kernel = "bartlett";
    double bandwidth = 4.0;
    std::string weights_path;
    std::string wstar_path;
    int a1 = 1;
    std::string a2 = "n";
    int hc = 0;
    double critical = 2.0;
    bool adjust = false;
};

struct McFlags {
    std::int64_t reps = 100000;
    std::uint64_t seed = 0;
    std::int64_t chunk = 4096;
};

struct DataFlags {
    std::string x_path;
    std::string r_path;
    std::string rhs_path;
    double tol = 1e-8;
};

void add_data_options(CLI::App* cmd, DataFlags& data, bool require_x = true) {
    auto* x = cmd->add_option("--x", data.x_path, "design matrix CSV (n x k)");
    if (require_x) x->required();
    cmd->add_option("--r", data.r_path, "restriction matrix CSV (q x k)")->required();
    cmd->add_option("--rhs", data.rhs_path, "restriction right-hand side CSV (default: zeros)");
    cmd->add_option("--tol", data.tol, "relative membership/zero tolerance");
}

void add_test_options(CLI::App* cmd, TestFlags& flags, bool with_critical = true) {
    cmd->add_option("--test", flags.family, "test family")
        ->check(CLI::IsMember({"weighted", "gq", "eicker", "het", "fgls", "ols-ar1", "f"}));
    cmd->add_option("--kernel", flags.kernel, "lag window kernel")
        ->check(CLI::IsMember({"bartlett", "parzen", "qs", "custom"}));
    cmd->add_option("--bandwidth", flags.bandwidth, "lag window bandwidth M");
    cmd->add_option("--weights", flags.weights_path, "custom lag weights CSV");
    cmd->add_option("--wstar", flags.wstar_path, "general quadratic weighting matrix CSV");
    cmd->add_option("--a1", flags.a1, "rho estimator start index")->check(CLI::IsMember({1, 2}));
    cmd->add_option("--a2", flags.a2, "rho estimator end index")
        ->check(CLI::IsMember({"n", "n-1"}));
    cmd->add_option("--hc", flags.hc, "heteroskedasticity weight variant")
        ->check(CLI::Range(0, 3));
    if (with_critical) cmd->add_option("--critical", flags.critical, "critical value C");
    cmd->add_flag("--adjust", flags.adjust, "run the statistic on the enlarged design");
}

void add_mc_options(CLI::App* cmd, McFlags& mc) {
    cmd->add_option("--reps", mc.reps, "Monte Carlo replications");
    cmd->add_option("--seed", mc.seed, "master seed");
    cmd->add_option("--chunk", mc.chunk, "work chunk size");
}

Tolerances make_tolerances(const DataFlags& data) {
    Tolerances tol;
    tol.membership = data.tol;
    return tol;
}

struct Problem {
    LinearModel model;
    Restriction restriction;
};

Problem load_problem(const DataFlags& data) {
    const Matrix x = read_csv_matrix(data.x_path);
    const Matrix r_mat = read_csv_matrix(data.r_path);
    if (r_mat.cols() != x.cols()) {
        throw std::runtime_error("dimension mismatch: R has " + std::to_string(r_mat.cols()) +
                                 " columns but X has " + std::to_string(x.cols()));
    }
    Vector rhs = Vector::Zero(r_mat.rows());
    if (!data.rhs_path.empty()) {
        rhs = read_csv_vector(data.rhs_path);
        if (rhs.size() != r_mat.rows()) {
            throw std::runtime_error("dimension mismatch: r has length " +
                                     std::to_string(rhs.size()) + " but R has " +
                                     std::to_string(r_mat.rows()) + " rows");
        }
    }
    const Tolerances tol = make_tolerances(data);
    return Problem{LinearModel(x, tol), Restriction(r_mat, rhs, tol)};
}

TestDefinition build_definition(const TestFlags& flags, const Problem& problem,
                                const Tolerances& tol) {
    TestDefinition def;
    if (flags.family == "weighted") {
        def.kind = TestKind::WeightedAutocov;
    } else if (flags.family == "gq") {
        def.kind = TestKind::GeneralQuadratic;
    } else if (flags.family == "eicker") {
        def.kind = TestKind::Eicker;
    } else if (flags.family == "het") {
        def.kind = TestKind::Het;
    } else if (flags.family == "fgls") {
        def.kind = TestKind::Fgls;
    } else if (flags.family == "ols-ar1") {
        def.kind = TestKind::OlsAr1;
    } else if (flags.family == "f") {
        def.kind = TestKind::UncorrectedF;
    }
    if (flags.kernel == "bartlett") def.window.kind = LagWindowKind::Bartlett;
    if (flags.kernel == "parzen") def.window.kind = LagWindowKind::Parzen;
    if (flags.kernel == "qs") def.window.kind = LagWindowKind::QuadraticSpectral;
    if (flags.kernel == "custom") {
        def.window.kind = LagWindowKind::CustomWeights;
        if (flags.weights_path.empty()) {
            throw std::runtime_error("--kernel custom needs --weights");
        }
        const Vector w = read_csv_vector(flags.weights_path);
        def.window.custom.assign(w.data(), w.data() + w.size());
    }
    def.window.bandwidth = flags.bandwidth;
    if (def.kind == TestKind::GeneralQuadratic) {
        if (flags.wstar_path.empty()) throw std::runtime_error("--test gq needs --wstar");
        def.wstar = read_csv_matrix(flags.wstar_path);
    }
    def.het = static_cast<HetVariant>(flags.hc);
    def.rho.a1 = flags.a1;
    def.rho.a2_from_n = flags.a2 == "n" ? 0 : 1;
    def.critical = flags.critical;
    if (flags.adjust) {
        def.adjusted = std::make_shared<AdjustedDesign>(
            build_adjusted(problem.model, problem.restriction, tol));
    }
    return def;
}

json tolerances_json(const Tolerances& tol) {
    return json{{"membership", tol.membership},
                {"boundary", tol.boundary},
                {"singular", tol.singular},
                {"rankScale", tol.rank_scale}};
}

json test_json(const TestFlags& flags) {
    json out{{"family", flags.family}};
    if (flags.family == "weighted" || flags.family == "gq") {
        out["kernel"] = flags.kernel;
        out["bandwidth"] = flags.bandwidth;
    }
    if (flags.family == "fgls" || flags.family == "ols-ar1") {
        out["a1"] = flags.a1;
        out["a2"] = flags.a2;
    }
    if (flags.family == "het") out["hc"] = flags.hc;
    out["critical"] = flags.critical;
    out["adjusted"] = flags.adjust;
    return out;
}

const char* weight_class_name(WeightClass w) {
    switch (w) {
        case WeightClass::PositiveDefinite: return "positive-definite";
        case WeightClass::NonnegativeOnly: return "nonnegative-only";
        case WeightClass::Indefinite: return "indefinite";
    }
    return "?";
}

json report_json(const DiagnosticReport& report, double q, bool normalize_q) {
    json evidence = json::array();
    for (const auto& row : report.evidence) {
        evidence.push_back(json{{"statistic", row.statistic},
                                {"direction", row.direction},
                                {"rankB", row.rank_b},
                                {"T", normalize_q ? row.t_value / q : row.t_value},
                                {"C", normalize_q ? row.critical / q : row.critical},
                                {"comparison", row.comparison},
                                {"flags", row.flags},
                                {"pattern", row.pattern}});
    }
    json secondary = json::array();
    for (Verdict v : report.secondary) secondary.push_back(verdict_name(v));
    json out{{"verdict", verdict_name(report.verdict)},
             {"secondary", std::move(secondary)},
             {"theorem", report.theorem},
             {"evidence", std::move(evidence)},
             {"assumptions",
              json{{"AW", weight_class_name(report.aw)}, {"RandX", report.r_and_x}}},
             {"notes", report.notes}};
    if (normalize_q) out["normalizedByQ"] = true;
    return out;
}

json estimate_json(const RejectionEstimate& est) {
    return json{{"p", est.p}, {"se", est.se}, {"reps", est.reps}, {"seed", est.seed}};
}

void emit(const json& payload, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << payload.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
        out << payload.dump(2) << "\n";
    }
}

std::vector<double> parse_grid(const std::string& csv_list) {
    std::vector<double> grid;
    std::size_t pos = 0;
    while (pos <= csv_list.size()) {
        const std::size_t comma = csv_list.find(',', pos);
        const std::string token =
            csv_list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!token.empty()) grid.push_back(std::stod(token));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (grid.empty()) throw std::runtime_error("empty grid");
    return grid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-sample size/power toolkit for robust regression tests"};
    app.set_config("--config", "", "TOML config file; command-line flags take precedence");
    app.require_subcommand(1);

    DataFlags data;
    TestFlags test;
    McFlags mc;
    std::string out_path;
    std::string csv_path;
    bool normalize_q = false;

    auto* audit = app.add_subcommand("audit", "check the AR(1) limit conditions");
    add_data_options(audit, data);
    add_test_options(audit, test);
    audit->add_option("--out", out_path, "JSON report path (default stdout)");
    audit->add_flag("--normalize-q", normalize_q,
                    "display statistic values divided by q (display only)");

    int nu_points = 65;
    int direction_samples = 32;
    std::uint64_t audit_seed = 0;
    auto* audit_ar2_cmd = app.add_subcommand("audit-ar2", "check the AR(2) harmonic limits");
    add_data_options(audit_ar2_cmd, data);
    add_test_options(audit_ar2_cmd, test);
    audit_ar2_cmd->add_option("--nu-points", nu_points, "frequency grid size over [0, pi]");
    audit_ar2_cmd->add_option("--direction-samples", direction_samples,
                              "random directions per interior frequency");
    audit_ar2_cmd->add_option("--seed", audit_seed, "direction sampling seed");
    audit_ar2_cmd->add_option("--out", out_path, "JSON report path");
    audit_ar2_cmd->add_flag("--normalize-q", normalize_q, "display values divided by q");

    auto* audit_gls_cmd = app.add_subcommand("audit-gls", "check the GLS/OLS-AR(1) limits");
    add_data_options(audit_gls_cmd, data);
    add_test_options(audit_gls_cmd, test);
    audit_gls_cmd->add_option("--out", out_path, "JSON report path");
    audit_gls_cmd->add_flag("--normalize-q", normalize_q, "display values divided by q");

    auto* audit_het_cmd = app.add_subcommand("audit-het", "check the heteroskedastic limits");
    add_data_options(audit_het_cmd, data);
    add_test_options(audit_het_cmd, test);
    audit_het_cmd->add_option("--out", out_path, "JSON report path");
    audit_het_cmd->add_flag("--normalize-q", normalize_q, "display values divided by q");

    Eigen::Index gen_n = 8, gen_k = 2;
    int gen_samples = 1000;
    bool intercept = false;
    auto* genericity_cmd =
        app.add_subcommand("genericity", "fraction of random designs where the audit decides");
    add_data_options(genericity_cmd, data, false);
    add_test_options(genericity_cmd, test);
    genericity_cmd->add_option("--n", gen_n, "sample size")->required();
    genericity_cmd->add_option("--k", gen_k, "number of regressors")->required();
    genericity_cmd->add_option("--samples", gen_samples, "number of random designs");
    genericity_cmd->add_option("--seed", audit_seed, "design sampling seed");
    genericity_cmd->add_flag("--intercept", intercept, "force the first column to e+");
    genericity_cmd->add_option("--out", out_path, "JSON report path");

    double delta = 0.05;
    double tol_c = 1e-3;
    std::int64_t cert_reps = 1000000;
    std::string rho_grid_raw;
    auto* calibrate_cmd =
        app.add_subcommand("calibrate", "size-controlled critical value by simulation");
    add_data_options(calibrate_cmd, data);
    add_test_options(calibrate_cmd, test, false);
    add_mc_options(calibrate_cmd, mc);
    calibrate_cmd->add_option("--delta", delta, "target size");
    calibrate_cmd->add_option("--tol-c", tol_c, "bisection resolution");
    calibrate_cmd->add_option("--cert-reps", cert_reps, "certification replications");
    calibrate_cmd->add_option("--rho-grid", rho_grid_raw, "comma-separated rho grid");
    calibrate_cmd->add_option("--out", out_path, "JSON report path");

    auto* size_cmd = app.add_subcommand("size-curve", "null rejection over the AR(1) family");
    add_data_options(size_cmd, data);
    add_test_options(size_cmd, test);
    add_mc_options(size_cmd, mc);
    size_cmd->add_option("--rho-grid", rho_grid_raw, "comma-separated rho grid");
    size_cmd->add_option("--out", out_path, "JSON report path");
    size_cmd->add_option("--csv", csv_path, "CSV output (rho, p, se)");

    std::string mu1_path;
    std::string sigma_path;
    double sigma_rho = 0.0;
    double sigma2 = 1.0;
    auto* power_cmd = app.add_subcommand("power-curve", "rejection along alternatives");
    add_data_options(power_cmd, data);
    add_test_options(power_cmd, test);
    add_mc_options(power_cmd, mc);
    power_cmd->add_option("--mu1-grid", mu1_path, "CSV of alternatives, one mean per row")
        ->required();
    power_cmd->add_option("--sigma-csv", sigma_path, "error correlation matrix CSV");
    power_cmd->add_option("--rho", sigma_rho, "AR(1) error correlation (used without --sigma-csv)");
    power_cmd->add_option("--sigma2", sigma2, "error scale");
    power_cmd->add_option("--out", out_path, "JSON report path");
    power_cmd->add_option("--csv", csv_path, "CSV output (d/sigma, p, se)");

    std::string radial = "uniform-sphere-scale";
    auto* elliptical_cmd =
        app.add_subcommand("elliptical-check", "null equivalence under elliptical errors");
    add_data_options(elliptical_cmd, data);
    add_test_options(elliptical_cmd, test);
    add_mc_options(elliptical_cmd, mc);
    elliptical_cmd->add_option("--radial", radial, "radial law")
        ->check(CLI::IsMember({"gaussian", "chi-mixture", "uniform-sphere-scale"}));
    elliptical_cmd->add_option("--sigma-csv", sigma_path, "error correlation matrix CSV");
    elliptical_cmd->add_option("--rho", sigma_rho, "AR(1) error correlation");
    elliptical_cmd->add_option("--out", out_path, "JSON report path");

    double conc_nu = 0.0;
    double conc_r = 0.99;
    Eigen::Index conc_n = 8;
    auto* conc_cmd =
        app.add_subcommand("concentration", "AR(2) correlation matrix near its harmonic limit");
    conc_cmd->add_option("--nu", conc_nu, "angular frequency in (0, pi)")->required();
    conc_cmd->add_option("--r", conc_r, "root modulus in (0, 1)");
    conc_cmd->add_option("--n", conc_n, "matrix dimension");
    conc_cmd->add_option("--out", out_path, "JSON report path");
    conc_cmd->add_option("--csv", csv_path, "CSV output of the correlation matrix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << json{{"schema", 1},
                          {"error", json{{"kind", "usage"}, {"message", e.what()}}}}
                         .dump(2)
                  << "\n";
        return 1;
    }

    try {
        const Tolerances tol = make_tolerances(data);
        json payload{{"schema", 1}};

        if (audit->parsed() || audit_ar2_cmd->parsed() || audit_gls_cmd->parsed() ||
            audit_het_cmd->parsed()) {
            const Problem problem = load_problem(data);
            const TestDefinition def = build_definition(test, problem, tol);
            DiagnosticReport report;
            if (audit->parsed()) {
                payload["command"] = "audit";
                report = audit_ar1_weighted(problem.model, problem.restriction, def, tol);
            } else if (audit_ar2_cmd->parsed()) {
                payload["command"] = "audit-ar2";
                std::vector<double> nu_grid;
                for (int j = 0; j < nu_points; ++j) {
                    nu_grid.push_back(kPi * j / static_cast<double>(nu_points - 1));
                }
                report = audit_ar2(problem.model, problem.restriction, def, nu_grid,
                                   direction_samples, audit_seed, tol);
                payload["seed"] = audit_seed;
            } else if (audit_gls_cmd->parsed()) {
                payload["command"] = "audit-gls";
                report = audit_gls(problem.model, problem.restriction, def.rho, def.critical,
                                   tol);
            } else {
                payload["command"] = "audit-het";
                report = audit_het(problem.model, problem.restriction, def, tol);
            }
            payload.update(report_json(report, static_cast<double>(problem.restriction.q()),
                                       normalize_q));
            payload["test"] = test_json(test);
            payload["tolerances"] = tolerances_json(tol);
            emit(payload, out_path);
            return 0;
        }

        if (genericity_cmd->parsed()) {
            const Matrix r_mat = read_csv_matrix(data.r_path);
            Vector rhs = Vector::Zero(r_mat.rows());
            if (!data.rhs_path.empty()) rhs = read_csv_vector(data.rhs_path);
            Restriction restriction(r_mat, rhs, tol);
            TestFlags plain = test;
            plain.adjust = false;  // the probe draws its own designs
            Problem fake{LinearModel(Matrix::Identity(gen_n, gen_k).eval() +
                                         Matrix::Constant(gen_n, gen_k, 0.01),
                                     tol),
                         restriction};
            const TestDefinition def = build_definition(plain, fake, tol);
            const double fraction = genericity_probe(gen_n, gen_k, restriction, def, gen_samples,
                                                     audit_seed, intercept, tol);
            payload["command"] = "genericity";
            payload["n"] = gen_n;
            payload["k"] = gen_k;
            payload["samples"] = gen_samples;
            payload["seed"] = audit_seed;
            payload["intercept"] = intercept;
            payload["fraction"] = fraction;
            payload["test"] = test_json(test);
            payload["tolerances"] = tolerances_json(tol);
            emit(payload, out_path);
            return 0;
        }

        if (calibrate_cmd->parsed()) {
            const Problem problem = load_problem(data);
            TestDefinition def = build_definition(test, problem, tol);
            def.critical = 1.0;
            const McConfig cal{mc.reps, mc.seed, mc.chunk};
            const McConfig cert{cert_reps, mc.seed, mc.chunk};
            const std::vector<double> grid =
                rho_grid_raw.empty() ? default_rho_grid() : parse_grid(rho_grid_raw);
            const CalibrationResult result = calibrate_critical(
                def, problem.model, problem.restriction, delta, grid, cal, tol_c, cert);
            payload["command"] = "calibrate";
            payload["delta"] = delta;
            payload["cDelta"] = result.c_delta;
            payload["argSupRho"] = result.arg_sup_rho;
            payload["supSize"] = estimate_json(result.sup_size);
            payload["bisectionSteps"] = result.bisection_steps;
            payload["calibrationReps"] = result.calibration_reps;
            payload["seed"] = mc.seed;
            payload["grid"] = result.grid;
            payload["tolC"] = tol_c;
            payload["theorem"] = "ar1-size-control";
            payload["test"] = test_json(test);
            payload["tolerances"] = tolerances_json(tol);
            emit(payload, out_path);
            return 0;
        }

        if (size_cmd->parsed()) {
            const Problem problem = load_problem(data);
            const TestDefinition def = build_definition(test, problem, tol);
            const McConfig config{mc.reps, mc.seed, mc.chunk};
            const std::vector<double> grid =
                rho_grid_raw.empty() ? default_rho_grid() : parse_grid(rho_grid_raw);
            const auto curve =
                size_curve_ar1(def, problem.model, problem.restriction, grid, config);
            payload["command"] = "size-curve";
            payload["seed"] = mc.seed;
            payload["reps"] = mc.reps;
            payload["chunk"] = mc.chunk;
            payload["theorem"] = "ar1-concentration";
            json points = json::array();
            Matrix csv(static_cast<Eigen::Index>(curve.size()), 3);
            for (std::size_t i = 0; i < curve.size(); ++i) {
                points.push_back(json{{"rho", curve[i].first},
                                      {"p", curve[i].second.p},
                                      {"se", curve[i].second.se}});
                csv(static_cast<Eigen::Index>(i), 0) = curve[i].first;
                csv(static_cast<Eigen::Index>(i), 1) = curve[i].second.p;
                csv(static_cast<Eigen::Index>(i), 2) = curve[i].second.se;
            }
            payload["grid"] = std::move(points);
            payload["test"] = test_json(test);
            payload["tolerances"] = tolerances_json(tol);
            if (!csv_path.empty()) write_csv(csv_path, csv);
            emit(payload, out_path);
            return 0;
        }

        if (power_cmd->parsed()) {
            const Problem problem = load_problem(data);
            const TestDefinition def = build_definition(test, problem, tol);
            const McConfig config{mc.reps, mc.seed, mc.chunk};
            const Matrix mu_rows = read_csv_matrix(mu1_path);
            if (mu_rows.cols() != problem.model.n()) {
                throw std::runtime_error("each row of --mu1-grid must have n entries");
            }
            std::vector<Vector> mu1;
            for (Eigen::Index i = 0; i < mu_rows.rows(); ++i) {
                mu1.push_back(mu_rows.row(i).transpose());
            }
            const Matrix sigma = sigma_path.empty() ? ar1_matrix(problem.model.n(), sigma_rho)
                                                    : read_csv_matrix(sigma_path);
            const auto curve = power_probe(def, problem.model, problem.restriction, mu1, sigma2,
                                           sigma, config);
            payload["command"] = "power-curve";
            payload["seed"] = mc.seed;
            payload["reps"] = mc.reps;
            payload["sigma2"] = sigma2;
            payload["theorem"] = "ar1-size-control";
            json points = json::array();
            Matrix csv(static_cast<Eigen::Index>(curve.size()), 3);
            for (std::size_t i = 0; i < curve.size(); ++i) {
                points.push_back(json{{"point", i},
                                      {"dOverSigma", curve[i].d_over_sigma},
                                      {"p", curve[i].estimate.p},
                                      {"se", curve[i].estimate.se}});
                csv(static_cast<Eigen::Index>(i), 0) = curve[i].d_over_sigma;
                csv(static_cast<Eigen::Index>(i), 1) = curve[i].estimate.p;
                csv(static_cast<Eigen::Index>(i), 2) = curve[i].estimate.se;
            }
            payload["curve"] = std::move(points);
            payload["test"] = test_json(test);
            payload["tolerances"] = tolerances_json(tol);
            if (!csv_path.empty()) write_csv(csv_path, csv);
            emit(payload, out_path);
            return 0;
        }

        if (elliptical_cmd->parsed()) {
            const Problem problem = load_problem(data);
            const TestDefinition def = build_definition(test, problem, tol);
            const McConfig config{mc.reps, mc.seed, mc.chunk};
            const Matrix sigma = sigma_path.empty() ? ar1_matrix(problem.model.n(), sigma_rho)
                                                    : read_csv_matrix(sigma_path);
            RadialLaw law = RadialLaw::UnitScale;
            if (radial == "gaussian") law = RadialLaw::Gaussian;
            if (radial == "chi-mixture") law = RadialLaw::ChiMixture;
            const auto check = elliptical_null_check(def, problem.model, problem.restriction,
                                                     sigma, law, config);
            payload["command"] = "elliptical-check";
            payload["seed"] = mc.seed;
            payload["reps"] = mc.reps;
            payload["radial"] = radial;
            payload["pGaussian"] = estimate_json(check.gaussian);
            payload["pElliptical"] = estimate_json(check.elliptical);
            payload["zScore"] = check.z_score;
            payload["theorem"] = "elliptical-null-equivalence";
            payload["test"] = test_json(test);
            payload["tolerances"] = tolerances_json(tol);
            emit(payload, out_path);
            return 0;
        }

        if (conc_cmd->parsed()) {
            const Matrix sigma = ar2_matrix(conc_n, Ar2Param(conc_r, conc_nu));
            const Matrix basis = harmonic_basis(conc_n, conc_nu).basis;
            const Matrix limit = basis * basis.transpose();
            payload["command"] = "concentration";
            payload["n"] = conc_n;
            payload["nu"] = conc_nu;
            payload["r"] = conc_r;
            payload["frobeniusDistance"] = (sigma - limit).norm();
            payload["theorem"] = "ar2-harmonic-concentration";
            if (!csv_path.empty()) write_csv(csv_path, sigma);
            emit(payload, out_path);
            return 0;
        }
    } catch (const AuditRefusal& refusal) {
        json payload{{"schema", 1},
                     {"error", json{{"kind", "audit-refusal"}, {"message", refusal.what()}}}};
        payload["error"]["audit"] = report_json(refusal.report, 1.0, false);
        std::cerr << payload.dump(2) << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"schema", 1},
                          {"error", json{{"kind", "runtime"}, {"message", e.what()}}}}
                         .dump(2)
                  << "\n";
        return 1;
    }
    return 0;
}
