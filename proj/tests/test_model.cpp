#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "helpers.hpp"
#include "robustsize/model.hpp"

using namespace robustsize;
using testutil::location_model;
using testutil::location_restriction;
using testutil::random_design;
using testutil::random_vector;

TEST_CASE("construction validates dimensions and rank") {
    CHECK_THROWS_AS(LinearModel(Matrix::Ones(3, 3)), std::invalid_argument);  // k = n
    Matrix dup(5, 2);
    dup.col(0) = e_plus(5);
    dup.col(1) = 2.0 * e_plus(5);
    CHECK_THROWS_AS(LinearModel(dup), std::invalid_argument);  // rank deficient
    CHECK_THROWS_AS(Restriction(Matrix::Zero(1, 2), Vector::Zero(1)), std::invalid_argument);
    CHECK_THROWS_AS(Restriction(Matrix::Ones(3, 2), Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("ols estimate") {
    LinearModel m4 = location_model(4);
    Vector y(4);
    y << 1, 2, 3, 4;
    CHECK(ols_estimate(m4, y)(0) == doctest::Approx(2.5).epsilon(1e-14));

    LinearModel m2 = location_model(2);
    CHECK(ols_estimate(m2, e_minus(2))(0) == doctest::Approx(0.0).epsilon(1e-14));

    LinearModel mr(random_design(8, 3, 11));
    Vector beta(3);
    beta << 1, -2, 0.5;
    Vector fitted = mr.design() * beta;
    CHECK((ols_estimate(mr, fitted) - beta).norm() <= 1e-10);
}

TEST_CASE("residuals") {
    LinearModel m2 = location_model(2);
    CHECK(residuals(m2, e_plus(2)).norm() <= 1e-14);
    CHECK((residuals(m2, e_minus(2)) - e_minus(2)).norm() <= 1e-14);

    LinearModel m3 = location_model(3);
    const Vector expected = e_minus(3) + e_plus(3) / 3.0;  // y - e+(e+'y)/n evaluated directly
    CHECK((residuals(m3, e_minus(3)) - expected).norm() <= 1e-14);
}

TEST_CASE("residuals are orthogonal to the design") {
    for (std::uint64_t i = 0; i < 50; ++i) {
        LinearModel m(random_design(12, 3, 100 + i));
        const Vector y = random_vector(12, 200 + i);
        const Vector u = residuals(m, y);
        CHECK((u.transpose() * m.design()).cwiseAbs().maxCoeff() <=
              1e-10 * y.norm() * m.design().norm());
    }
}

TEST_CASE("restricted ols") {
    SUBCASE("fully pinned restriction returns beta0 for every y") {
        LinearModel m(random_design(9, 2, 3));
        Matrix r_mat = Matrix::Identity(2, 2);
        Vector beta0(2);
        beta0 << 1.5, -0.5;
        Restriction r(r_mat, beta0);
        for (std::uint64_t i = 0; i < 10; ++i) {
            auto fit = restricted_ols(m, r, random_vector(9, i));
            CHECK((fit.beta - beta0).norm() <= 1e-10);
        }
    }
    SUBCASE("exact null fit is recovered with zero residual") {
        LinearModel m(random_design(10, 3, 4));
        Matrix r_mat(1, 3);
        r_mat << 1, 1, 0;
        Vector beta(3);
        beta << 0.5, 1.5, -2;
        Restriction r(r_mat, Vector::Constant(1, 2.0));  // R beta = 2 holds
        auto fit = restricted_ols(m, r, m.design() * beta);
        CHECK((fit.beta - beta).norm() <= 1e-9);
        CHECK(fit.residual.norm() <= 1e-9);
    }
    SUBCASE("location model with r = 0 keeps y as the residual") {
        LinearModel m = location_model(2);
        Vector y(2);
        y << 1, 2;
        auto fit = restricted_ols(m, location_restriction(0.0), y);
        CHECK(fit.beta(0) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK((fit.residual - y).norm() <= 1e-14);
    }
    SUBCASE("restriction holds at the restricted estimate") {
        for (std::uint64_t i = 0; i < 40; ++i) {
            LinearModel m(random_design(11, 4, 300 + i));
            Matrix r_mat(2, 4);
            r_mat << 1, 0, -1, 0, 0, 2, 0, 1;
            Vector rhs(2);
            rhs << 0.3, -1.1;
            Restriction r(r_mat, rhs);
            auto fit = restricted_ols(m, r, random_vector(11, 400 + i));
            CHECK((r_mat * fit.beta - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }
    }
}

TEST_CASE("null representative") {
    LinearModel m(random_design(6, 2, 5));
    SUBCASE("zero rhs") {
        auto p = null_representative(m, testutil::second_coefficient_zero());
        CHECK(p.beta0.norm() == 0.0);
        CHECK(p.mu0.norm() == 0.0);
    }
    SUBCASE("coordinate restriction") {
        Matrix r_mat(1, 2);
        r_mat << 1, 0;
        auto p = null_representative(m, Restriction(r_mat, Vector::Constant(1, 3.0)));
        CHECK(p.beta0(0) == doctest::Approx(3.0));
        CHECK(p.beta0(1) == doctest::Approx(0.0));
    }
    SUBCASE("symmetric minimum norm") {
        Matrix r_mat(1, 2);
        r_mat << 1, 1;
        auto p = null_representative(m, Restriction(r_mat, Vector::Constant(1, 2.0)));
        CHECK(p.beta0(0) == doctest::Approx(1.0));
        CHECK(p.beta0(1) == doctest::Approx(1.0));
    }
}

TEST_CASE("sign normalize") {
    Vector a(2);
    a << -1, 2;
    CHECK(sign_normalize(a)(0) == 1.0);
    CHECK(sign_normalize(a)(1) == -2.0);
    CHECK(sign_normalize(Vector::Zero(2)).norm() == 0.0);
    Vector b(3);
    b << 0, -3, 1;
    const Vector nb = sign_normalize(b);
    CHECK(nb(0) == 0.0);
    CHECK(nb(1) == 3.0);
    CHECK(nb(2) == -1.0);

    for (std::uint64_t i = 0; i < 30; ++i) {
        const Vector x = random_vector(7, 500 + i);
        CHECK((sign_normalize(sign_normalize(x)) - sign_normalize(x)).norm() == 0.0);
        CHECK((sign_normalize(-x) - sign_normalize(x)).norm() == 0.0);
    }
}

TEST_CASE("span membership") {
    LinearModel m = location_model(4);
    CHECK(span_membership(m, e_plus(4)));
    CHECK(!span_membership(m, e_minus(4)));
    CHECK(span_membership(m, Vector::Zero(4)));

    Matrix x(4, 2);
    x.col(0) = e_plus(4);
    x.col(1) = e_minus(4);
    LinearModel both(x);
    CHECK(span_membership(both, e_minus(4)));
}

TEST_CASE("maximal invariant") {
    Matrix xd = random_design(8, 3, 21);
    LinearModel m(xd);
    Matrix r_mat(1, 3);
    r_mat << 0, 1, 0;
    Restriction r(r_mat, Vector::Constant(1, 0.7));
    const NullPoint np = null_representative(m, r);

    SUBCASE("vanishes on the null mean set") {
        Vector shift(3);
        shift << 2.0, 0.0, -1.0;  // R shift = 0 keeps R beta = r
        const Vector y = np.mu0 + xd * shift;
        CHECK(maximal_invariant(m, r, y).norm() == 0.0);
    }
    SUBCASE("unit norm or zero") {
        for (std::uint64_t i = 0; i < 20; ++i) {
            const double norm = maximal_invariant(m, r, random_vector(8, 600 + i)).norm();
            CHECK((norm == 0.0 || norm == doctest::Approx(1.0).epsilon(1e-12)));
        }
    }
    SUBCASE("invariant under the group action") {
        Vector null_dir(3);
        null_dir << 1.0, 0.0, 0.4;
        for (std::uint64_t i = 0; i < 100; ++i) {
            const Vector y = random_vector(8, 700 + i);
            auto engine = substream(900 + i, 1, 0);
            std::uniform_real_distribution<double> unif(-3.0, 3.0);
            double alpha = unif(engine);
            if (std::abs(alpha) < 0.05) alpha = 0.5;
            const double c1 = unif(engine);
            const double c2 = unif(engine);
            const Vector mu0 = np.mu0 + xd * (null_dir * c1);
            const Vector mu0p = np.mu0 + xd * (null_dir * c2);
            const Vector transformed = alpha * (y - mu0) + mu0p;
            const Vector h1 = maximal_invariant(m, r, y);
            const Vector h2 = maximal_invariant(m, r, transformed);
            CHECK((h1 - h2).cwiseAbs().maxCoeff() <= 1e-9);
        }
    }
}
