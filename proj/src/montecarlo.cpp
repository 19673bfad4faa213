#include "robustsize/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include "robustsize/covariance.hpp"

namespace robustsize {

namespace {

constexpr std::uint64_t kCertificationStream = 0xce21u;

/// Runs fn(begin, end) over disjoint chunks of [0, total). Replications are
/// indexed globally, so the partition never changes the results.
void run_chunked(std::int64_t total, std::int64_t chunk,
                 const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const int workers = std::min<std::int64_t>(worker_count(), (total + chunk - 1) / chunk);
    if (workers <= 1) {
        fn(0, total);
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto drain = [&] {
        while (true) {
            const std::int64_t begin = next.fetch_add(chunk);
            if (begin >= total) return;
            fn(begin, std::min(begin + chunk, total));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
}

std::int64_t count_rejections(const TestEvaluator& evaluator, const GaussianSampler& sampler,
                              const McConfig& mc, std::uint64_t stream) {
    std::atomic<std::int64_t> total_hits{0};
    run_chunked(mc.reps, mc.chunk, [&](std::int64_t begin, std::int64_t end) {
        std::int64_t hits = 0;
        const double c = evaluator.critical();
        for (std::int64_t rep = begin; rep < end; ++rep) {
            auto engine = substream(mc.seed, stream, static_cast<std::uint64_t>(rep));
            const Vector y = sampler.draw(engine);
            if (evaluator(y).value >= c) ++hits;
        }
        total_hits.fetch_add(hits);
    });
    return total_hits.load();
}

RejectionEstimate make_estimate(std::int64_t hits, const McConfig& mc) {
    RejectionEstimate est;
    est.reps = mc.reps;
    est.seed = mc.seed;
    est.p = static_cast<double>(hits) / static_cast<double>(mc.reps);
    est.se = std::sqrt(est.p * (1.0 - est.p) / static_cast<double>(mc.reps));
    return est;
}

DiagnosticReport run_matching_audit(const TestDefinition& def, const TestEvaluator& evaluator,
                                    const Tolerances& tol) {
    TestDefinition plain = def;
    plain.adjusted.reset();
    if (!(plain.critical > 0.0)) plain.critical = 1.0;
    const LinearModel& model = evaluator.evaluation_model();
    const Restriction& restriction = evaluator.evaluation_restriction();
    switch (def.kind) {
        case TestKind::WeightedAutocov:
        case TestKind::GeneralQuadratic:
        case TestKind::Eicker:
            return audit_ar1_weighted(model, restriction, plain, tol);
        case TestKind::Fgls:
        case TestKind::OlsAr1:
            return audit_gls(model, restriction, plain.rho, plain.critical, tol);
        case TestKind::Het:
        case TestKind::UncorrectedF:
            return audit_het(model, restriction, plain, tol);
    }
    return {};
}

}  // namespace

void McConfig::validate() const {
    if (reps < 100) throw std::invalid_argument("Monte Carlo needs reps >= 100");
    if (chunk < 1) throw std::invalid_argument("chunk must be positive");
}

GaussianSampler::GaussianSampler(Vector mean, double sigma2, const Matrix& sigma)
    : mean_(std::move(mean)) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    if (sigma.rows() != mean_.size() || sigma.cols() != mean_.size()) {
        throw std::invalid_argument("covariance dimension mismatch");
    }
    scale_ = symmetric_sqrt(sigma2 * sigma, &min_eig_);
    scale_ref_ = sigma2 * sigma.cwiseAbs().maxCoeff();
    clamped_ = min_eig_ < -1e-10 * std::max(scale_ref_, 1e-300);
}

bool GaussianSampler::positive_definite() const {
    return min_eig_ > 1e-14 * std::max(scale_ref_, 1e-300);
}

int worker_count() {
    if (const char* env = std::getenv("ROBUSTSIZE_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) return static_cast<int>(std::min(parsed, 256L));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

RejectionEstimate rejection_probability(const TestEvaluator& evaluator,
                                        const GaussianSampler& sampler, const McConfig& mc,
                                        std::uint64_t stream) {
    mc.validate();
    if (!sampler.positive_definite()) {
        throw std::invalid_argument("null simulation needs a positive definite Sigma");
    }
    return make_estimate(count_rejections(evaluator, sampler, mc, stream), mc);
}

RejectionEstimate rejection_probability(const TestDefinition& def, const LinearModel& model,
                                        const Restriction& restriction, const Vector& mu,
                                        double sigma2, const Matrix& sigma, const McConfig& mc) {
    const TestEvaluator evaluator(def, model, restriction, model.tolerances());
    const GaussianSampler sampler(mu, sigma2, sigma);
    return rejection_probability(evaluator, sampler, mc);
}

std::vector<std::pair<double, RejectionEstimate>> size_curve_ar1(
    const TestDefinition& def, const LinearModel& model, const Restriction& restriction,
    const std::vector<double>& rho_grid, const McConfig& mc) {
    mc.validate();
    const TestEvaluator evaluator(def, model, restriction, model.tolerances());
    const Vector mu0 = null_representative(evaluator.evaluation_model(),
                                           evaluator.evaluation_restriction())
                           .mu0;
    std::vector<std::pair<double, RejectionEstimate>> out;
    out.reserve(rho_grid.size());
    for (double rho : rho_grid) {
        if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("rho grid must lie inside (-1,1)");
        const GaussianSampler sampler(mu0, 1.0, ar1_matrix(mu0.size(), rho));
        out.emplace_back(rho, rejection_probability(evaluator, sampler, mc));
    }
    return out;
}

SizeSurface::SizeSurface(const TestDefinition& def, const LinearModel& model,
                         const Restriction& restriction, std::vector<double> rho_grid,
                         const McConfig& mc)
    : rho_grid_(std::move(rho_grid)), reps_(mc.reps) {
    mc.validate();
    if (rho_grid_.empty()) throw std::invalid_argument("empty rho grid");
    const TestEvaluator evaluator(def, model, restriction, model.tolerances());
    const Vector mu0 = null_representative(evaluator.evaluation_model(),
                                           evaluator.evaluation_restriction())
                           .mu0;
    sorted_t_.resize(rho_grid_.size());
    for (std::size_t g = 0; g < rho_grid_.size(); ++g) {
        if (!(std::abs(rho_grid_[g]) < 1.0)) {
            throw std::invalid_argument("rho grid must lie inside (-1,1)");
        }
        const GaussianSampler sampler(mu0, 1.0, ar1_matrix(mu0.size(), rho_grid_[g]));
        std::vector<double>& samples = sorted_t_[g];
        samples.resize(static_cast<std::size_t>(mc.reps));
        run_chunked(mc.reps, mc.chunk, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t rep = begin; rep < end; ++rep) {
                auto engine = substream(mc.seed, 0, static_cast<std::uint64_t>(rep));
                const Vector y = sampler.draw(engine);
                samples[static_cast<std::size_t>(rep)] = evaluator(y).value;
            }
        });
        std::sort(samples.begin(), samples.end());
    }
}

double SizeSurface::size_at(std::size_t grid_index, double c) const {
    const auto& samples = sorted_t_.at(grid_index);
    const auto first = std::lower_bound(samples.begin(), samples.end(), c);
    return static_cast<double>(samples.end() - first) / static_cast<double>(samples.size());
}

double SizeSurface::sup_size(double c) const {
    double sup = 0;
    for (std::size_t g = 0; g < sorted_t_.size(); ++g) sup = std::max(sup, size_at(g, c));
    return sup;
}

std::size_t SizeSurface::arg_sup(double c) const {
    std::size_t arg = 0;
    double sup = -1;
    for (std::size_t g = 0; g < sorted_t_.size(); ++g) {
        const double p = size_at(g, c);
        if (p > sup) {
            sup = p;
            arg = g;
        }
    }
    return arg;
}

std::vector<double> default_rho_grid() {
    return {-0.999, -0.99, -0.95, -0.9, -0.75, -0.5, -0.25, 0.0,
            0.25,   0.5,   0.75,  0.9,  0.95,  0.99, 0.999};
}

CalibrationResult calibrate_critical(const TestDefinition& def, const LinearModel& model,
                                     const Restriction& restriction, double delta,
                                     const std::vector<double>& rho_grid, const McConfig& mc,
                                     double tol_c, const McConfig& cert) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
    if (!(tol_c > 0.0)) throw std::invalid_argument("tol_c must be positive");
    mc.validate();
    cert.validate();

    TestDefinition working = def;
    if (!(working.critical > 0.0)) working.critical = 1.0;
    const Tolerances tol = model.tolerances();
    const TestEvaluator evaluator(working, model, restriction, tol);
    const DiagnosticReport audit = run_matching_audit(working, evaluator, tol);
    if (audit.verdict != Verdict::PositiveCase) {
        throw AuditRefusal(audit, std::string("calibration refused: audit verdict is ") +
                                      verdict_name(audit.verdict) +
                                      "; no critical value controls size for this "
                                      "design/restriction pair");
    }

    const SizeSurface surface(working, model, restriction, rho_grid, mc);
    double c_lo = 0.0;
    double c_hi = 1.0;
    int expansions = 0;
    while (surface.sup_size(c_hi) > delta) {
        c_lo = c_hi;
        c_hi *= 2.0;
        if (++expansions > 64) {
            throw std::runtime_error("calibration bracket expansion failed: sup-size still " +
                                     std::to_string(surface.sup_size(c_hi)) + " at C=" +
                                     std::to_string(c_hi));
        }
    }
    int steps = 0;
    while (c_hi - c_lo > tol_c) {
        const double mid = 0.5 * (c_lo + c_hi);
        if (surface.sup_size(mid) <= delta) {
            c_hi = mid;
        } else {
            c_lo = mid;
        }
        if (++steps > 200) {
            throw std::runtime_error("calibration bisection failed to converge in [" +
                                     std::to_string(c_lo) + ", " + std::to_string(c_hi) + "]");
        }
    }

    CalibrationResult result;
    result.c_delta = c_hi;
    result.delta = delta;
    result.bisection_steps = steps;
    result.grid = rho_grid;
    result.calibration_reps = mc.reps;
    result.arg_sup_rho = rho_grid[surface.arg_sup(c_hi)];

    TestDefinition certified = working;
    certified.critical = result.c_delta;
    const TestEvaluator cert_evaluator(certified, model, restriction, tol);
    const Vector mu0 = null_representative(cert_evaluator.evaluation_model(),
                                           cert_evaluator.evaluation_restriction())
                           .mu0;
    const GaussianSampler sampler(mu0, 1.0, ar1_matrix(mu0.size(), result.arg_sup_rho));
    result.sup_size = rejection_probability(cert_evaluator, sampler, cert, kCertificationStream);
    return result;
}

std::vector<PowerPoint> power_probe(const TestDefinition& def, const LinearModel& model,
                                    const Restriction& restriction,
                                    const std::vector<Vector>& mu1_grid, double sigma2,
                                    const Matrix& sigma, const McConfig& mc) {
    mc.validate();
    const TestEvaluator evaluator(def, model, restriction, model.tolerances());
    std::vector<PowerPoint> out;
    out.reserve(mu1_grid.size());
    for (const Vector& mu1 : mu1_grid) {
        PowerPoint point;
        point.d_over_sigma = restricted_ols(model, restriction, mu1).residual.norm() /
                             std::sqrt(sigma2);
        const GaussianSampler sampler(mu1, sigma2, sigma);
        point.estimate = rejection_probability(evaluator, sampler, mc);
        out.push_back(std::move(point));
    }
    return out;
}

EllipticalCheck elliptical_null_check(const TestDefinition& def, const LinearModel& model,
                                      const Restriction& restriction, const Matrix& sigma,
                                      RadialLaw radial, const McConfig& mc) {
    mc.validate();
    const TestEvaluator evaluator(def, model, restriction, model.tolerances());
    const Vector mu0 = null_representative(evaluator.evaluation_model(),
                                           evaluator.evaluation_restriction())
                           .mu0;
    double min_eig = 0;
    const Matrix scale = symmetric_sqrt(sigma, &min_eig);
    if (min_eig <= 1e-14 * std::max(sigma.cwiseAbs().maxCoeff(), 1e-300)) {
        throw std::invalid_argument("elliptical check needs a positive definite Sigma");
    }

    // Both passes replay the same substreams and draw the Gaussian vector
    // first, so the Gaussian radial law reproduces the reference experiment
    // draw for draw.
    auto simulate = [&](RadialLaw law) {
        std::atomic<std::int64_t> total_hits{0};
        run_chunked(mc.reps, mc.chunk, [&](std::int64_t begin, std::int64_t end) {
            std::int64_t hits = 0;
            const double c = evaluator.critical();
            for (std::int64_t rep = begin; rep < end; ++rep) {
                auto engine = substream(mc.seed, 0, static_cast<std::uint64_t>(rep));
                Vector g(mu0.size());
                fill_standard_normal(engine, g);
                Vector y;
                switch (law) {
                    case RadialLaw::Gaussian:
                        y = mu0 + scale * g;
                        break;
                    case RadialLaw::UnitScale:
                        y = mu0 + scale * (g / g.norm());
                        break;
                    case RadialLaw::ChiMixture: {
                        std::uniform_real_distribution<double> unif;
                        const double factor = unif(engine) < 0.5 ? 0.5 : 2.0;
                        y = mu0 + factor * (scale * g);
                        break;
                    }
                }
                if (evaluator(y).value >= c) ++hits;
            }
            total_hits.fetch_add(hits);
        });
        return make_estimate(total_hits.load(), mc);
    };

    EllipticalCheck check;
    check.gaussian = simulate(RadialLaw::Gaussian);
    check.elliptical = simulate(radial);
    const double pooled = std::sqrt(check.gaussian.se * check.gaussian.se +
                                    check.elliptical.se * check.elliptical.se);
    check.z_score = pooled > 0 ? (check.gaussian.p - check.elliptical.p) / pooled : 0.0;
    return check;
}

}  // namespace robustsize
