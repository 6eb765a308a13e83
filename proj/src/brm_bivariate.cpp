#include "simruin/brm_bivariate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "simruin/brm_closed.hpp"
#include "simruin/errors.hpp"
#include "simruin/numerics.hpp"

namespace simruin::brm {

using numerics::GaussianPair;

void BivariateBRM::validate() const {
    if (!std::isfinite(c1) || !std::isfinite(c2) || !std::isfinite(u) || !std::isfinite(a))
        throw InvalidInput("model parameters must be finite");
    if (!(rho > -1.0 && rho < 1.0)) throw InvalidInput("correlation must lie in (-1, 1)");
    if (a > 1.0) throw InvalidInput("capital ratio a must not exceed 1");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("T must be positive and finite");
}

BivariateBRM BivariateBRM::normalized() const {
    validate();
    BivariateBRM n = *this;
    const double root_t = std::sqrt(T);
    n.c1 = c1 * root_t;
    n.c2 = c2 * root_t;
    n.u = u / root_t;
    n.T = 1.0;
    return n;
}

RegimeClass classify(double a, double rho) {
    if (a == rho) return {Regime::at_rho, false};
    const bool near = std::abs(a - rho) < 1e-9;
    return {a > rho ? Regime::above_rho : Regime::below_rho, near};
}

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::above_rho: return "above_rho";
        case Regime::below_rho: return "below_rho";
        case Regime::at_rho: return "at_rho";
    }
    return "?";
}

LambdaPair lambda_pair(double a, double rho) {
    if (!(rho > -1.0 && rho < 1.0)) throw InvalidInput("correlation must lie in (-1, 1)");
    if (!(a > rho)) throw RegimeError("lambda_pair needs a > rho");
    const double det = (1.0 - rho) * (1.0 + rho);
    return {(1.0 - a * rho) / det, (a - rho) / det};
}

double q_exponent(double a, double rho) {
    if (!(rho > -1.0 && rho < 1.0)) throw InvalidInput("correlation must lie in (-1, 1)");
    if (a > 1.0) throw InvalidInput("capital ratio a must not exceed 1");
    if (a <= rho) return 1.0;
    // (1 - 2 a rho + a^2) / (1 - rho^2), written so that q > 1 survives rounding.
    return 1.0 + (a - rho) * (a - rho) / ((1.0 - rho) * (1.0 + rho));
}

namespace {

double positive_orthant(double c1, double c2, const GaussianPair& pair) {
    return numerics::bivariate_normal_tail(std::max(c1, 0.0), std::max(c2, 0.0), pair);
}

}  // namespace

Bounds prop1_bounds(const BivariateBRM& model, double v) {
    const BivariateBRM m = model.normalized();
    const double v1 = v / std::sqrt(model.T);
    if (!std::isfinite(v1)) throw InvalidInput("v must be finite");
    if (m.u <= 0.0 && v1 <= 0.0 && !(m.u == 0.0 && v1 == 0.0))
        throw InvalidInput("(u, v) lies in the closed negative quadrant");
    const GaussianPair pair(m.rho);
    const double lower = numerics::bivariate_normal_tail(m.u + m.c1, v1 + m.c2, pair);
    const double upper = std::min(1.0, lower / positive_orthant(m.c1, m.c2, pair));
    return {lower, upper};
}

double crude_upper_bound(const BivariateBRM& model) {
    const BivariateBRM m = model.normalized();
    const double first = ruin_finite({m.c1, 1.0, m.u, 1.0});
    // A negative second capital means the second portfolio is already ruined.
    const double second = m.v() < 0.0 ? 1.0 : ruin_finite({m.c2, 1.0, m.v(), 1.0});
    return std::min(first, second);
}

namespace {

// Phi*(c1 rho - c2) of the a <= rho branch.
double boundary_factor(const BivariateBRM& m, const GaussianPair& pair) {
    if (m.a != m.rho) return 1.0;
    return numerics::std_normal_cdf((m.c1 * m.rho - m.c2) / pair.rho_star());
}

}  // namespace

double asym_approx(const BivariateBRM& model, std::optional<double> constant) {
    const BivariateBRM m = model.normalized();
    if (!(m.u > 0.0)) throw InvalidInput("asymptotics need u > 0");
    const GaussianPair pair(m.rho);
    const double x = m.u + m.c1;
    if (classify(m.a, m.rho).tag == Regime::above_rho) {
        if (!constant) throw MissingConstant("a > rho needs an estimate of the constant");
        if (!(*constant > 0.0)) throw InvalidInput("constant must be positive");
        return *constant * std::exp(-2.0 * std::log(m.u) + numerics::log_bivariate_normal_pdf(x, m.a * m.u + m.c2, pair));
    }
    const double det = (1.0 - m.rho) * (1.0 + m.rho);
    const double shift = m.c2 - m.rho * m.c1;
    const double log_value = std::log(2.0 * std::sqrt(2.0 * numerics::kPi * det)) + shift * shift / (2.0 * det) -
                             std::log(m.u) + numerics::log_bivariate_normal_pdf(x, m.rho * m.u + m.c2, pair);
    return boundary_factor(m, pair) * std::exp(log_value);
}

double tail_equivalent_form(const BivariateBRM& model, std::optional<double> constant) {
    const BivariateBRM m = model.normalized();
    const GaussianPair pair(m.rho);
    if (classify(m.a, m.rho).tag == Regime::above_rho) {
        if (!constant) throw MissingConstant("a > rho needs an estimate of the constant");
        if (!(*constant > 0.0)) throw InvalidInput("constant must be positive");
        const auto [l1, l2] = lambda_pair(m.a, m.rho);
        return *constant * l1 * l2 * numerics::bivariate_normal_tail(m.u + m.c1, m.a * m.u + m.c2, pair);
    }
    return 2.0 * boundary_factor(m, pair) * numerics::std_normal_sf(m.u + m.c1);
}

namespace {

bool early_window_steps_hold(const BivariateBRM& m, double window, double u) {
    const double delta = 1.0 - window / (u * u);
    const double delta_half = 1.0 - window / (2.0 * u * u);
    if (!(delta > 0.0)) return false;
    const double nu = 1.0 / std::sqrt(delta);
    const double nu_bar = 1.0 / std::sqrt(delta_half);
    const double x = u + m.c1;
    if (!(x > 0.0)) return false;
    if (nu * u + m.c1 / nu < nu_bar * x) return false;
    if (nu * m.a * u + m.c2 / nu < nu_bar * (m.a * u + m.c2)) return false;
    // Last step: nu_bar^2 exp(-window x^2 / (4 u^2)) <= exp(-window / 8).
    return 2.0 * std::log(nu_bar) - window * x * x / (4.0 * u * u) <= -window / 8.0;
}

double early_window_u_min(const BivariateBRM& m, double window) {
    // The conditions hold on a half-line when they hold at all; scan a
    // geometric grid for the last failure and bisect the crossing.
    constexpr double kTop = 1e6;
    double last_fail = std::sqrt(window);
    for (double u = last_fail; u <= kTop; u *= 1.05) {
        if (!early_window_steps_hold(m, window, u)) last_fail = u;
    }
    if (!early_window_steps_hold(m, window, kTop)) return std::numeric_limits<double>::infinity();
    double lo = last_fail, hi = last_fail * 1.05;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (early_window_steps_hold(m, window, mid) ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace

EarlyWindowBound early_window_bound(const BivariateBRM& model, double window) {
    const BivariateBRM m = model.normalized();
    if (!(window > 0.0) || !std::isfinite(window)) throw InvalidInput("window must be positive");
    if (!(1.0 - window / (m.u * m.u) > 0.0)) throw InvalidInput("need 1 - window / u^2 > 0");
    const GaussianPair pair(m.rho);
    const double tail = numerics::bivariate_normal_tail(m.u + m.c1, m.a * m.u + m.c2, pair);
    const double bound = std::exp(-window / 8.0) * tail / positive_orthant(m.c1, m.c2, pair);
    const double u_min = early_window_u_min(m, window);
    return {bound, u_min, m.u >= u_min};
}

double ruin_time_limit_cdf(double x, double a, double rho) {
    if (!(x >= 0.0)) throw InvalidInput("x must be non-negative");
    return -std::expm1(-q_exponent(a, rho) * x / 2.0);
}

}  // namespace simruin::brm
