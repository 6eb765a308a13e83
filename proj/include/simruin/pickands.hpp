#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simruin/mc_engine.hpp"

namespace simruin::pickands {

// I(T) = int int P(exists t <= T: W1(t) - t > x, W2(t) - a t > y) exp(l1 x + l2 y) dx dy
// and its limit C = I(infinity), for the correlated pair (W1, W2).

enum class Method {
    // Per path the covered set is a union of quadrants whose weighted area is
    // a finite staircase sum; no spatial discretization at all.
    pathwise,
    // Inner probabilities on an (x, y) lattice, bilinear in each cell against
    // the exact cell mass of exp(l1 x + l2 y), inside a truncation box.
    lattice,
};

struct LatticeSpec {
    double spacing = 0.05;
    // Upper bound allowed for the integral outside the truncation box.
    double tail_budget = 1e-3;
};

struct Box {
    double x_lo, x_hi, y_lo, y_hi;
};

/// Smallest box whose outside mass is provably below `budget` at horizon T.
/// Throws NonConvergence when no box within |coordinate| <= 1e3 qualifies.
Box truncation_box(double a, double rho, double T, double budget);

struct LadderPoint {
    double T;
    double value;
    double std_error;
};

struct ConstantEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double T_used = 0.0;
    std::string grid;
    std::uint64_t inner_paths = 0;
    std::uint64_t seed = 0;
    std::string method;
    int steps_per_unit = 0;
    // Same paths read on every other time point, and the extrapolation to
    // continuous time assuming a bias linear in sqrt(dt).
    double coarse_value = 0.0;
    double continuous_value = 0.0;
    std::vector<LadderPoint> ladder;
    double extrapolation_error = 0.0;
};

/// cfg.n_steps is read as grid steps per unit time.
ConstantEstimate estimate_I_T(double a, double rho, double T, const mc::SimConfig& cfg, Method method = Method::pathwise,
                              const LatticeSpec& lattice = {});

/// Runs the ladder on common paths, checks that increments beyond T = 4
/// contract by at least 1.5 per doubling (NonConvergence otherwise) and adds
/// a geometric tail for the remaining horizon.
ConstantEstimate extrapolate_C(double a, double rho, const mc::SimConfig& cfg, Method method = Method::pathwise,
                               const LatticeSpec& lattice = {}, std::vector<double> ladder = {1, 2, 4, 8, 16});

struct InnerProbabilities {
    std::vector<double> xs, ys;
    // Row-major over (x, y): P(exists t <= T: X(t) > x, Y(t) > y) and its standard error.
    std::vector<double> p, std_error;
    double at(std::size_t i, std::size_t j) const { return p[i * ys.size() + j]; }
    double se(std::size_t i, std::size_t j) const { return std_error[i * ys.size() + j]; }
};

/// Inner probabilities of the lattice method at chosen nodes, from shared paths.
InnerProbabilities inner_probabilities(double a, double rho, double T, const mc::SimConfig& cfg, std::vector<double> xs,
                                       std::vector<double> ys);

/// 1 / (l1 l2 P(W1 > max(c1, 0), W2 > max(c2, 0))).
double upper_bound_C(double a, double rho, double c1, double c2);

}  // namespace simruin::pickands
