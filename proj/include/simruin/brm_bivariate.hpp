#pragma once

#include <optional>

namespace simruin::brm {

// Two portfolios driven by a correlated Brownian pair with unit volatilities:
// ruin of both at a common time t <= T, with capitals u and v = a u.
struct BivariateBRM {
    double c1 = 0.0;
    double c2 = 0.0;
    double rho = 0.0;
    double a = 1.0;
    double u = 0.0;
    double T = 1.0;

    void validate() const;
    /// Same problem rescaled to T = 1 (a and rho are scale free).
    BivariateBRM normalized() const;
    double v() const { return a * u; }
};

enum class Regime { above_rho, below_rho, at_rho };

struct RegimeClass {
    Regime tag;
    // |a - rho| < 1e-9 without being equal: both asymptotic branches are poor here.
    bool near_boundary;
};

RegimeClass classify(double a, double rho);
const char* regime_name(Regime r);

struct LambdaPair {
    double lambda1, lambda2;
};

/// Throws RegimeError unless a > rho.
LambdaPair lambda_pair(double a, double rho);

/// Gaussian decay exponent: psi(u, au) = exp(-q u^2 / 2 + o(u^2)).
double q_exponent(double a, double rho);

struct Bounds {
    double lower, upper;
};

/// Two-sided bound for the simultaneous ruin probability at capitals (u, v).
/// The origin is accepted; the rest of the closed negative quadrant is not.
Bounds prop1_bounds(const BivariateBRM& m, double v);

/// min of the two marginal ruin probabilities.
double crude_upper_bound(const BivariateBRM& m);

/// Leading-order asymptotics of psi(u, au) for u -> infinity.
/// Throws MissingConstant when a > rho and no constant is supplied.
double asym_approx(const BivariateBRM& m, std::optional<double> constant);

/// Equivalent form through the Gaussian tail instead of the density.
double tail_equivalent_form(const BivariateBRM& m, std::optional<double> constant);

struct EarlyWindowBound {
    double bound;
    // Smallest capital from which the step inequalities behind the bound hold
    // (+infinity when they never do, e.g. a < 0).
    double u_min;
    bool valid;
};

/// Bound on the ruin probability restricted to [0, 1 - window / u^2].
EarlyWindowBound early_window_bound(const BivariateBRM& m, double window);

/// Limit law of u^2 (1 - tau) given simultaneous ruin by time 1.
double ruin_time_limit_cdf(double x, double a, double rho);

}  // namespace simruin::brm
