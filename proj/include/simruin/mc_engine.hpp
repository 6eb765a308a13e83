#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "simruin/brm_bivariate.hpp"
#include "simruin/brm_closed.hpp"
#include "simruin/levy.hpp"

namespace simruin::mc {

struct SimConfig {
    std::uint64_t n_paths = 100000;
    int n_steps = 256;
    std::uint64_t seed = 1;
    int workers = 1;
    // Drift added to the independent driving pair (B1, B2); weights use the
    // exact Gaussian likelihood ratio.
    std::optional<std::array<double, 2>> is_drift;
    // Fraction of the horizon that is simulated.
    double window_end = 1.0;

    void validate() const;
};

// Same paths read on every other grid point.
struct StepHalving {
    int coarse_steps;
    double coarse_value;
    double difference;  // fine - coarse
    double difference_stderr;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double n_effective = 0.0;
    std::uint64_t n_paths = 0;
    std::string method;
    std::optional<StepHalving> halving;
};

/// Grid size that resolves the u^-2 ruin window: 256 u^2, at least 256, even.
int recommended_steps(double u);

/// Tilt that moves the endpoint of the driving pair to the most likely point
/// of {W1(1) > u + c1, W2(1) > v + c2}, scaled to the simulated window.
std::array<double, 2> default_is_drift(const brm::BivariateBRM& m, double window_end = 1.0);

/// Grid-supremum estimate of the simultaneous ruin probability psi(u, a u).
/// Throws DegenerateIS when importance weights leave fewer than 100
/// effective ruined paths.
Estimate simulate_psi(const brm::BivariateBRM& m, const SimConfig& cfg);

struct OneDimEstimate {
    Estimate bridge;  // Brownian-bridge corrected between grid points
    Estimate raw;     // grid points only
};

OneDimEstimate simulate_one_dim(const brm::SinglePortfolio& p, const SimConfig& cfg);

/// Probability that one path Z crosses max(x + c1 t, y + c2 t) on [0, T]
/// (cfg.window_end is not used; the horizon is barrier.T).
///
/// Brownian: exact bridge crossing probabilities against the piecewise-linear
/// barrier, with the kink on the grid. Gamma: the grid is refined dyadically by
/// gamma bridges and intervals that cannot cross are never sampled, which gives
/// the exact law of the grid supremum. Stable and perturbed gamma: plain grid.
Estimate simulate_levy_psi(const levy::LevyModel& model, const levy::TwoLineBarrier& barrier, const SimConfig& cfg);

struct RuinTimeSample {
    std::vector<double> values;   // u^2 (1 - tau)
    std::vector<double> weights;  // importance weights, all > 0
    std::uint64_t n_paths = 0;

    double n_effective() const;
    double weighted_mean() const;
};

/// Ruined paths' scaled ruin times, tau being the first grid time with both
/// clearances positive. Throws DegenerateIS below 1000 effective samples.
RuinTimeSample sample_ruin_time(const brm::BivariateBRM& m, const SimConfig& cfg);

/// Weighted Kolmogorov-Smirnov distance to a continuous CDF.
double ks_statistic(const RuinTimeSample& sample, const std::function<double(double)>& cdf);

}  // namespace simruin::mc
