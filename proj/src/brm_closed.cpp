#include "simruin/brm_closed.hpp"

#include <cmath>

#include "simruin/errors.hpp"
#include "simruin/numerics.hpp"

namespace simruin::brm {

void SinglePortfolio::validate() const {
    if (!std::isfinite(c) || !std::isfinite(u)) throw InvalidInput("c and u must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be positive");
    if (!(T > 0.0)) throw InvalidInput("T must be positive");
    if (u < 0.0) throw InvalidInput("initial capital must be non-negative");
}

double ruin_finite(const SinglePortfolio& p) {
    p.validate();
    if (!std::isfinite(p.T)) throw InvalidInput("ruin_finite needs a finite horizon");
    const double root_t = std::sqrt(p.T);
    const double c = p.c * root_t / p.sigma;
    const double u = p.u / (p.sigma * root_t);

    // The reflected term is formed in logs: for c < 0 the exponential
    // overflows long before the product does.
    const double direct = numerics::std_normal_sf(u + c);
    const double reflected = std::exp(-2.0 * c * u + numerics::log_std_normal_sf(u - c));
    const double value = direct + reflected;
    if (value > 1.0) {
        if (value > 1.0 + 1e-12) throw NonConvergence("ruin_finite left [0, 1]", value, value - 1.0);
        return 1.0;
    }
    return value;
}

InfiniteRuin ruin_infinite(const SinglePortfolio& p) {
    p.validate();
    if (p.c <= 0.0) return {1.0, true};
    return {std::exp(-2.0 * p.c * p.u / (p.sigma * p.sigma)), false};
}

Normalized normalize(double c1, double c2, double sigma1, double sigma2, double u, double v, double T) {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw InvalidInput("volatilities must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("T must be positive and finite");
    const double root_t = std::sqrt(T);
    return {c1 * root_t / sigma1, c2 * root_t / sigma2, u / (sigma1 * root_t), v / (sigma2 * root_t)};
}

}  // namespace simruin::brm
