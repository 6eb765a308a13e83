#pragma once

namespace simruin::brm {

// R(t) = u + c t - sigma W(t) on [0, T]; T may be +infinity.
struct SinglePortfolio {
    double c = 0.0;
    double sigma = 1.0;
    double u = 0.0;
    double T = 1.0;

    void validate() const;
};

/// P(inf_{t <= T} R(t) < 0) for finite T.
///
/// Evaluated after scaling to T = 1, sigma = 1, which gives the exponent
/// exp(-2 c u / sigma^2) for general sigma.
double ruin_finite(const SinglePortfolio& p);

struct InfiniteRuin {
    double probability;
    // Set when c <= 0: ruin is certain and the value is 1 by convention.
    bool degenerate;
};

InfiniteRuin ruin_infinite(const SinglePortfolio& p);

struct Normalized {
    double c1, c2, u, v;
};

/// Rescales a two-portfolio problem to T = 1 and unit volatilities.
Normalized normalize(double c1, double c2, double sigma1, double sigma2, double u, double v, double T);

}  // namespace simruin::brm
