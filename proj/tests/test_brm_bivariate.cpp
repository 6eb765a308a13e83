#include <cmath>
#include <vector>

#include "doctest.h"
#include "simruin/brm_bivariate.hpp"
#include "simruin/brm_closed.hpp"
#include "simruin/errors.hpp"
#include "simruin/numerics.hpp"

using namespace simruin;
using namespace simruin::brm;
using numerics::GaussianPair;

namespace {

BivariateBRM model(double c1, double c2, double rho, double a, double u) {
    BivariateBRM m;
    m.c1 = c1;
    m.c2 = c2;
    m.rho = rho;
    m.a = a;
    m.u = u;
    return m;
}

}  // namespace

TEST_CASE("lambda pair") {
    auto l = lambda_pair(1.0, 0.0);
    CHECK(l.lambda1 == 1.0);
    CHECK(l.lambda2 == 1.0);
    l = lambda_pair(1.0, 0.5);
    CHECK(l.lambda1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(l.lambda2 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(lambda_pair(0.3, 0.5), RegimeError);
    CHECK_THROWS_AS(lambda_pair(0.5, 0.5), RegimeError);

    for (double rho = -0.95; rho < 0.96; rho += 0.05) {
        for (double a = rho + 0.01; a <= 1.0; a += 0.07) {
            const auto [l1, l2] = lambda_pair(a, rho);
            CHECK(l1 > 0.0);
            CHECK(l2 > 0.0);
            CHECK(l1 + rho * l2 == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(l1 + a * l2 == doctest::Approx(q_exponent(a, rho)).epsilon(1e-12));
        }
    }
}

TEST_CASE("decay exponent") {
    CHECK(q_exponent(0.3, 0.5) == 1.0);
    CHECK(q_exponent(1.0, 0.0) == 2.0);
    CHECK(q_exponent(0.5 + 1e-12, 0.5) == doctest::Approx(1.0).epsilon(1e-10));
    for (double rho = -0.95; rho < 0.96; rho += 0.05) {
        for (double a = -2.0; a <= 1.0; a += 0.03) {
            const double q = q_exponent(a, rho);
            CHECK(q >= 1.0);
            if (a > rho + 1e-6 && a < 1.0) CHECK(q > 1.0);
            if (a <= rho) CHECK(q == 1.0);
        }
    }
    // a = 1: q = 2 / (1 + rho).
    CHECK(q_exponent(1.0, 0.4) == doctest::Approx(2.0 / 1.4).epsilon(1e-14));
    CHECK_THROWS_AS(q_exponent(1.5, 0.0), InvalidInput);
}

TEST_CASE("regime classification") {
    CHECK(classify(1.0, 0.0).tag == Regime::above_rho);
    CHECK(classify(0.0, 0.5).tag == Regime::below_rho);
    CHECK(classify(0.5, 0.5).tag == Regime::at_rho);
    CHECK(classify(0.5 + 1e-11, 0.5).near_boundary);
    CHECK_FALSE(classify(0.6, 0.5).near_boundary);
}

TEST_CASE("two-sided bound") {
    auto b = prop1_bounds(model(0, 0, 0, 1, 0), 0.0);
    CHECK(b.lower == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(b.upper == doctest::Approx(1.0).epsilon(1e-13));

    b = prop1_bounds(model(0, 0, 0, 1, 1), 1.0);
    CHECK(std::abs(b.lower - 0.025171489600055118) <= 1e-12);

    CHECK_THROWS_AS(prop1_bounds(model(0, 0, 0, 1, -1), 0.0), InvalidInput);
    CHECK_THROWS_AS(prop1_bounds(model(0, 0, 0, 1, 0), -0.5), InvalidInput);
    CHECK_NOTHROW(prop1_bounds(model(0, 0, 0, 1, -1), 0.5));

    for (double rho : {-0.8, 0.0, 0.6}) {
        for (double c : {-0.5, 0.0, 0.5}) {
            for (double u : {0.1, 1.0, 3.0}) {
                for (double v : {-1.0, 0.5, 2.0}) {
                    const auto r = prop1_bounds(model(c, c, rho, 1, u), v);
                    CHECK(r.lower >= 0.0);
                    CHECK(r.lower <= r.upper);
                    CHECK(r.upper <= 1.0);
                }
            }
        }
    }
}

TEST_CASE("crude upper bound") {
    CHECK(std::abs(crude_upper_bound(model(1, 1, 0.3, 1, 1)) - 0.09041777356648555) <= 1e-14);
    CHECK(crude_upper_bound(model(1, 1, -0.7, 1, 1)) == crude_upper_bound(model(1, 1, 0.3, 1, 1)));
    CHECK(crude_upper_bound(model(0.5, 2.0, 0, 0.5, 2)) ==
          std::min(ruin_finite({0.5, 1, 2, 1}), ruin_finite({2.0, 1, 1, 1})));
    for (double rho : {-0.5, 0.0, 0.5}) {
        for (double u : {0.5, 1.0, 2.0}) {
            const auto m = model(0.5, 0.5, rho, 1, u);
            CHECK(crude_upper_bound(m) >= prop1_bounds(m, u).lower);
        }
    }
}

TEST_CASE("asymptotic approximation") {
    SUBCASE("constant required above rho") {
        CHECK_THROWS_AS(asym_approx(model(0, 0, 0, 1, 3), std::nullopt), MissingConstant);
        CHECK_NOTHROW(asym_approx(model(0, 0, 0.5, 0, 3), std::nullopt));
    }
    SUBCASE("the boundary factor halves the a < rho expression at c = 0") {
        const double below = asym_approx(model(0, 0, 0.5, 0.5 - 1e-7, 4), std::nullopt);
        const double at = asym_approx(model(0, 0, 0.5, 0.5, 4), std::nullopt);
        CHECK(at / below == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("below rho: explicit evaluation") {
        // c = 0: 2 sqrt(2 pi (1 - rho^2)) u^{-1} phi_rho(u, rho u) = 2 phi(u) / u.
        const double u = 3.0;
        CHECK(asym_approx(model(0, 0, 0.5, 0, u), std::nullopt) ==
              doctest::Approx(2.0 * numerics::std_normal_pdf(u) / u).epsilon(1e-13));
    }
    SUBCASE("log-approximation over -u^2/2 tends to q") {
        struct Case {
            double a, rho;
        };
        for (const auto& [a, rho] : std::vector<Case>{{1.0, 0.0}, {0.8, 0.3}, {0.0, 0.5}, {-0.5, 0.2}}) {
            double prev_gap = INFINITY;
            const double q = q_exponent(a, rho);
            for (double u : {5.0, 9.0, 13.0, 18.0}) {
                const double approx = asym_approx(model(0.3, -0.2, rho, a, u), 2.0);
                const double gap = std::abs(std::log(approx) / (-u * u / 2.0) - q);
                CHECK(gap < prev_gap);
                prev_gap = gap;
            }
            CHECK(prev_gap < 0.06);
        }
    }
    SUBCASE("tail form differs from the density form only by Mills ratios") {
        // rho = 0, a = 1, c = 0: ratio is (u Psi(u) / phi(u))^2 exactly.
        double prev = 0.0;
        for (double u : {4.0, 6.0, 8.0}) {
            const auto m = model(0, 0, 0, 1, u);
            const double ratio = tail_equivalent_form(m, 2.5) / asym_approx(m, 2.5);
            const double mills = u * numerics::std_normal_sf(u) / numerics::std_normal_pdf(u);
            CHECK(ratio == doctest::Approx(mills * mills).epsilon(1e-8));
            CHECK(ratio > prev);
            CHECK(ratio < 1.0);
            prev = ratio;
        }
        CHECK(prev > 0.96);
    }
    SUBCASE("a <= rho is twice the dominant bivariate tail") {
        for (double rho : {0.3, 0.6}) {
            const auto m = model(0, 0, rho, 0.0, 8);
            const double two_tails = 2.0 * numerics::bivariate_normal_tail(8.0, 0.0, GaussianPair(rho));
            CHECK(asym_approx(m, std::nullopt) / two_tails == doctest::Approx(1.0).epsilon(0.05));
            CHECK(tail_equivalent_form(m, std::nullopt) / two_tails == doctest::Approx(1.0).epsilon(0.05));
        }
    }
    SUBCASE("a > rho decays faster than a <= rho") {
        // Even with the constant at its analytic upper bound.
        CHECK(asym_approx(model(0, 0, 0, 1, 6), 4.0) < asym_approx(model(0, 0, 0, 0, 6), std::nullopt));
        double prev = INFINITY;
        for (double u : {3.0, 5.0, 7.0, 9.0}) {
            const double ratio = asym_approx(model(0, 0, 0, 1, u), 4.0) / asym_approx(model(0, 0, 0, 0, u), std::nullopt);
            CHECK(ratio < prev);
            prev = ratio;
        }
        CHECK(prev < 1e-15);
    }
    SUBCASE("decreasing in u") {
        for (const auto& [a, rho] : std::vector<std::pair<double, double>>{{1.0, 0.0}, {0.0, 0.5}, {0.5, 0.5}}) {
            double prev = INFINITY;
            for (double u = 2.0; u <= 10.0; u += 0.5) {
                const double v = asym_approx(model(0.2, 0.1, rho, a, u), 1.0);
                CHECK(v < prev);
                prev = v;
            }
        }
    }
}

TEST_CASE("early-window bound") {
    const auto m = model(0.3, 0.2, 0.1, 1, 5);
    const auto upper = prop1_bounds(m, m.v()).upper;
    CHECK(early_window_bound(m, 1e-9).bound == doctest::Approx(upper).epsilon(1e-9));
    const double b1 = early_window_bound(m, 1.0).bound;
    const double b2 = early_window_bound(m, 2.0).bound;
    CHECK(b2 / b1 == doctest::Approx(std::exp(-1.0 / 8.0)).epsilon(1e-13));
    CHECK_THROWS_AS(early_window_bound(model(0, 0, 0, 1, 2), 4.0), InvalidInput);

    const auto w = early_window_bound(model(0, 0, 0, 1, 3), 4.0);
    CHECK(std::isfinite(w.u_min));
    CHECK(w.u_min >= 2.0);
    CHECK(early_window_bound(model(0, 0, 0, 1, w.u_min * 1.01), 4.0).valid);
    CHECK(std::isinf(early_window_bound(model(0, 0, 0, -0.5, 3), 1.0).u_min));
}

TEST_CASE("ruin-time limit law") {
    CHECK(ruin_time_limit_cdf(0.0, 1.0, 0.0) == 0.0);
    CHECK(ruin_time_limit_cdf(2.0 * std::log(2.0), 0.2, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    for (double x : {0.1, 1.0, 3.0}) CHECK(ruin_time_limit_cdf(x, 1.0, 0.0) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-14));
    CHECK_THROWS_AS(ruin_time_limit_cdf(-0.1, 1.0, 0.0), InvalidInput);
}
