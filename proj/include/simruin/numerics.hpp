#pragma once

#include <functional>
#include <span>
#include <vector>

namespace simruin::numerics {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSqrt2Pi = 2.506628274631000502415765284811045253;

// Phi(x); absolute error at the level of erfc itself (~1e-16).
double std_normal_cdf(double x);
// Psi(x) = 1 - Phi(x), taken from the complementary branch so far tails keep
// relative accuracy.
double std_normal_sf(double x);
double std_normal_pdf(double x);
// log Psi(x), finite for every finite x (asymptotic series past x = 30).
double log_std_normal_sf(double x);

/// Correlation of a standard Gaussian pair (W1(1), W2(1)).
class GaussianPair {
public:
    explicit GaussianPair(double rho);
    double rho() const noexcept { return rho_; }
    /// sqrt(1 - rho^2), the loading of the independent driver.
    double rho_star() const noexcept { return rho_star_; }

private:
    double rho_;
    double rho_star_;
};

/// P(W1(1) > h, W2(1) > k).
///
/// Genz's double-precision refinement of the Drezner-Wesolowsky method:
/// Gauss-Legendre on the arcsine form for |rho| < 0.925 and an asymptotic
/// expansion around |rho| = 1 otherwise. Absolute error ~1e-15.
double bivariate_normal_tail(double h, double k, const GaussianPair& pair);

double bivariate_normal_pdf(double x, double y, const GaussianPair& pair);
double log_bivariate_normal_pdf(double x, double y, const GaussianPair& pair);

/// ln Gamma(t) for t > 0; throws InvalidInput otherwise.
double log_gamma(double t);

enum class SingularityTransform {
    none,
    // s = upper - w^2: removes an (upper - s)^(-1/2) endpoint singularity.
    sqrt_endpoint,
    // Split at the midpoint and substitute at both ends.
    sqrt_both,
};

struct QuadratureSpec {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_subdivisions = 2000;
    // Mass allowed beyond the truncation point of a semi-infinite range.
    double truncation_tail_mass = 1e-12;
    SingularityTransform singularity_transform = SingularityTransform::none;

    /// Throws InvalidInput when an invariant is broken.
    void validate() const;
    QuadratureSpec with_transform(SingularityTransform t) const;
    QuadratureSpec tightened(double factor) const;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    int subdivisions = 0;
    bool converged = true;
};

using Integrand = std::function<double(double)>;

// Upper bound on the integral of |f| over [x, +inf); must be non-increasing.
using TailEnvelope = std::function<double(double)>;

/// Tail mass of amplitude * exp(-(x - center)^2 / (2 scale^2)) past x.
TailEnvelope gaussian_envelope(double amplitude, double center, double scale);

/// Adaptive Gauss-Kronrod (10/21) integration of f over [lower, upper].
///
/// `upper` may be +infinity. With a tail envelope the range is truncated at
/// the first point whose envelope mass is below spec.truncation_tail_mass and
/// that mass is added to the error; without one the half-line is mapped onto
/// [0, 1) by x = lower + t / (1 - t).
///
/// Never throws on a failed integral: `converged` is false and value/error
/// hold the best estimate reached.
QuadratureResult integrate_1d(const Integrand& f, double lower, double upper, const QuadratureSpec& spec,
                              const TailEnvelope& envelope = {});

/// Integrates over consecutive pieces [b0,b1], [b1,b2], ... and sums the results.
QuadratureResult integrate_pieces(const Integrand& f, std::span<const double> breaks, const QuadratureSpec& spec);

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    bool empty() const noexcept { return x_.empty(); }
    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

private:
    std::vector<double> x_, y_, slope_;
};

}  // namespace simruin::numerics
