#include <cmath>
#include <vector>

#include "doctest.h"
#include "simruin/brm_closed.hpp"
#include "simruin/errors.hpp"
#include "simruin/numerics.hpp"

using namespace simruin;
using namespace simruin::brm;

namespace {

// First-passage time density of u + c s - sigma W(s) integrated over [0, T];
// shares nothing with the reflection formula under test.
double first_passage_oracle(double c, double sigma, double u, double T) {
    numerics::QuadratureSpec spec;
    spec.abs_tol = 1e-13;
    spec.rel_tol = 1e-12;
    spec.truncation_tail_mass = 1e-14;
    const auto density = [=](double s) {
        if (s <= 0.0) return 0.0;
        const double z = u + c * s;
        return u / (sigma * std::sqrt(2.0 * numerics::kPi * s * s * s)) * std::exp(-z * z / (2.0 * sigma * sigma * s));
    };
    return numerics::integrate_1d(density, 0.0, T, spec).value;
}

}  // namespace

TEST_CASE("finite-horizon ruin examples") {
    CHECK(ruin_finite({1.0, 1.0, 0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(ruin_finite({0.0, 1.0, 1.0, 1.0}) - 0.3173105078629141) <= 1e-14);
    CHECK(std::abs(ruin_finite({1.0, 1.0, 1.0, 1.0}) - 0.09041777356648555) <= 1e-14);
    CHECK(ruin_finite({1.0, 1.0, 1.0, 1.0}) ==
          doctest::Approx(numerics::std_normal_cdf(-2.0) + std::exp(-2.0) * 0.5).epsilon(1e-14));
}

TEST_CASE("general volatility agrees with the first-passage density") {
    for (double sigma : {0.5, 1.0, 2.0}) {
        for (double c : {-1.0, 0.0, 0.7, 2.0}) {
            for (double u : {0.3, 1.0, 2.5}) {
                for (double T : {0.5, 1.0, 3.0}) {
                    CAPTURE(sigma);
                    CAPTURE(c);
                    CAPTURE(u);
                    CAPTURE(T);
                    CHECK(std::abs(ruin_finite({c, sigma, u, T}) - first_passage_oracle(c, sigma, u, T)) <= 1e-10);
                }
            }
        }
    }
}

TEST_CASE("finite-horizon ruin properties") {
    std::vector<double> grid{0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
    for (double c : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
        for (double u : grid) {
            const double p = ruin_finite({c, 1.3, u, 0.8});
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            CHECK(ruin_finite({c, 1.3, u + 0.1, 0.8}) <= p + 1e-15);
            CHECK(ruin_finite({c + 0.1, 1.3, u, 0.8}) <= p + 1e-15);
            CHECK(ruin_finite({c, 1.3, u, 0.9}) >= p - 1e-15);
            // More noise helps ruin only against a non-negative drift.
            if (c >= 0.0) CHECK(ruin_finite({c, 1.4, u, 0.8}) >= p - 1e-15);
        }
    }
    // Large negative drift drives the reflected term through overflow range.
    CHECK(ruin_finite({-40.0, 1.0, 30.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-12));

    for (double c : {0.5, 1.0, 2.0}) {
        for (double u : {0.5, 1.0, 3.0}) {
            const double limit = ruin_infinite({c, 1.0, u, INFINITY}).probability;
            CHECK(std::abs(ruin_finite({c, 1.0, u, 1e3}) - limit) <= 1e-6);
        }
    }
}

TEST_CASE("finite-horizon ruin rejects invalid input") {
    CHECK_THROWS_AS(ruin_finite({1.0, 1.0, -0.1, 1.0}), InvalidInput);
    CHECK_THROWS_AS(ruin_finite({1.0, 1.0, 1.0, 0.0}), InvalidInput);
    CHECK_THROWS_AS(ruin_finite({1.0, 0.0, 1.0, 1.0}), InvalidInput);
    CHECK_THROWS_AS(ruin_finite({1.0, 1.0, 1.0, INFINITY}), InvalidInput);
}

TEST_CASE("infinite-horizon ruin") {
    CHECK(ruin_infinite({1.0, 1.0, 1.0, INFINITY}).probability == doctest::Approx(0.1353352832366127).epsilon(1e-15));
    CHECK(ruin_infinite({1.0, 1.0, 0.0, INFINITY}).probability == 1.0);
    CHECK(ruin_infinite({2.0, 1.0, 1.0, INFINITY}).probability == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
    CHECK(ruin_infinite({1.0, 2.0, 1.0, INFINITY}).probability == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    const auto degenerate = ruin_infinite({0.0, 1.0, 1.0, INFINITY});
    CHECK(degenerate.degenerate);
    CHECK(degenerate.probability == 1.0);
    CHECK_FALSE(ruin_infinite({0.1, 1.0, 1.0, INFINITY}).degenerate);
}

TEST_CASE("self-similarity normalization") {
    const auto id = normalize(0.0, 0.0, 1.0, 1.0, 0.7, 1.3, 1.0);
    CHECK(id.c1 == 0.0);
    CHECK(id.u == 0.7);
    CHECK(id.v == 1.3);

    const auto n = normalize(1.0, 0.0, 2.0, 1.0, 2.0, 0.0, 4.0);
    CHECK(n.c1 == doctest::Approx(1.0));
    CHECK(n.u == doctest::Approx(0.5));

    for (double c : {-1.0, 0.5, 2.0}) {
        for (double sigma : {0.4, 1.0, 3.0}) {
            for (double T : {0.2, 1.0, 7.0}) {
                const double u = 1.1;
                const auto s = normalize(c, c, sigma, sigma, u, u, T);
                CHECK(ruin_finite({c, sigma, u, T}) == doctest::Approx(ruin_finite({s.c1, 1.0, s.u, 1.0})).epsilon(1e-13));
            }
        }
    }
    CHECK_THROWS_AS(normalize(0, 0, 0.0, 1.0, 1, 1, 1), InvalidInput);
    CHECK_THROWS_AS(normalize(0, 0, 1.0, 1.0, 1, 1, -1), InvalidInput);
}
