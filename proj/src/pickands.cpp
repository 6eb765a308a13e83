#include "simruin/pickands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <tuple>

#include "parallel.hpp"
#include "simruin/brm_bivariate.hpp"
#include "simruin/brm_closed.hpp"
#include "simruin/errors.hpp"
#include "simruin/numerics.hpp"
#include "simruin/rng.hpp"

namespace simruin::pickands {

namespace {

constexpr double kMaxBox = 1e3;

// P(sup_{t <= T} (W(t) - c t) > x).
double sup_tail(double c, double T, double x) {
    if (x <= 0.0) return 1.0;
    return brm::ruin_finite({c, 1.0, x, T});
}

numerics::QuadratureSpec box_quadrature() {
    numerics::QuadratureSpec spec;
    spec.abs_tol = 1e-12;
    spec.rel_tol = 1e-9;
    spec.truncation_tail_mass = 1e-13;
    return spec;
}

// Smallest z >= 0 with tail(z) <= target, for a non-increasing tail.
template <class Tail>
double solve_tail(Tail tail, double target) {
    if (tail(0.0) <= target) return 0.0;
    double hi = 1.0;
    while (tail(hi) > target) {
        hi *= 2.0;
        if (hi > kMaxBox) throw NonConvergence("truncation box exceeds the tail-mass budget", hi, tail(hi));
    }
    double lo = hi / 2.0;
    if (hi == 1.0) lo = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) > target ? lo : hi) = mid;
    }
    return hi;
}

// Integral of p(z) exp(lambda z) over the real line, p = 1 on z <= 0.
double exponential_mass(double c, double T, double lambda) {
    const auto spec = box_quadrature();
    const auto r = numerics::integrate_1d(
        [&](double z) {
            const double p = sup_tail(c, T, z);
            return p > 0.0 ? std::exp(std::log(p) + lambda * z) : 0.0;
        },
        0.0, INFINITY, spec);
    if (!std::isfinite(r.value)) throw NonConvergence("marginal exponential mass diverges", r.value, r.error);
    return 1.0 / lambda + r.value;
}

}  // namespace

double upper_bound_C(double a, double rho, double c1, double c2) {
    const auto [l1, l2] = brm::lambda_pair(a, rho);
    return 1.0 / (l1 * l2 * numerics::bivariate_normal_tail(std::max(c1, 0.0), std::max(c2, 0.0), numerics::GaussianPair(rho)));
}

Box truncation_box(double a, double rho, double T, double budget) {
    if (!(budget > 0.0)) throw InvalidInput("tail budget must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("T must be positive and finite");
    const auto [l1, l2] = brm::lambda_pair(a, rho);
    const double quarter = budget / 4.0;
    const auto spec = box_quadrature();

    // Positive strips: P(x, y) <= min(P(sup X > x), exp(-2 (l1 x + l2 y))), since
    // l1 X + l2 Y is a Brownian motion with variance q and drift -q. Integrating
    // out y leaves (2 / l2) sqrt(P(sup X > x)).
    auto strip = [&](double c, double other_lambda) {
        return [&, c, other_lambda](double z) {
            return 2.0 / other_lambda *
                   numerics::integrate_1d([&](double s) { return std::sqrt(sup_tail(c, T, s)); }, z, INFINITY, spec).value;
        };
    };
    Box box{};
    box.x_hi = solve_tail(strip(1.0, l2), quarter);
    box.y_hi = solve_tail(strip(a, l1), quarter);

    // Negative strips: P(x, y) <= P(sup Y > y) and the x-weight integrates to exp(l1 x) / l1.
    const double mass_y = exponential_mass(a, T, l2);
    const double mass_x = exponential_mass(1.0, T, l1);
    box.x_lo = -solve_tail([&](double z) { return std::exp(-l1 * z) / l1 * mass_y; }, quarter);
    box.y_lo = -solve_tail([&](double z) { return std::exp(-l2 * z) / l2 * mass_x; }, quarter);
    return box;
}

namespace {

struct Point {
    double x, y;
    int k;
};

// Nodes and cell-mass weights for one lattice axis.
struct Axis {
    std::vector<double> nodes;
    std::vector<double> weights;
    // prefix[j] = weights[0] + ... + weights[j-1]
    std::vector<double> prefix;

    Axis(double lo, double hi, double h, double lambda, int stride) {
        const int n = static_cast<int>(std::ceil((hi - lo) / h));
        for (int i = 0; i <= n; i += stride) nodes.push_back(lo + i * h);
        if (nodes.back() < lo + n * h) nodes.push_back(lo + n * h);
        weights.assign(nodes.size(), 0.0);
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            // Linear hat functions on [x0, x1] against exp(lambda s).
            const double x0 = nodes[i], width = nodes[i + 1] - x0;
            const double e0 = std::exp(lambda * x0);
            const double rise = e0 * std::expm1(lambda * width);
            const double w1 = (e0 + rise) / lambda - rise / (lambda * lambda * width);
            weights[i] += rise / lambda - w1;
            weights[i + 1] += w1;
        }
        prefix.assign(nodes.size() + 1, 0.0);
        for (std::size_t i = 0; i < nodes.size(); ++i) prefix[i + 1] = prefix[i] + weights[i];
    }

    // Total weight of nodes strictly below h.
    double mass_below(double h) const {
        const auto it = std::lower_bound(nodes.begin(), nodes.end(), h);
        return prefix[static_cast<std::size_t>(it - nodes.begin())];
    }
};

struct Lattice {
    Axis x, y;
};

double lattice_sum(const std::vector<std::pair<double, double>>& frontier, const Lattice& lat) {
    // frontier: X descending, running max of Y ascending. For a node x the
    // covered height is the running max over frontier points with X > x.
    double total = 0.0;
    std::size_t f = 0;
    double height = -std::numeric_limits<double>::infinity();
    for (std::size_t i = lat.x.nodes.size(); i-- > 0;) {
        const double xi = lat.x.nodes[i];
        while (f < frontier.size() && frontier[f].first > xi) height = frontier[f++].second;
        if (height == -std::numeric_limits<double>::infinity()) continue;
        total += lat.x.weights[i] * lat.y.mass_below(height);
    }
    return total;
}

struct Channels {
    std::vector<double> sum, sumsq;
    std::uint64_t n = 0;
};

struct LadderResult {
    std::vector<double> T;
    std::vector<double> fine, fine_se, coarse, lattice, lattice_se, lattice_half;
    std::uint64_t paths = 0;
};

LadderResult run_ladder(double a, double rho, const std::vector<double>& ladder, const mc::SimConfig& cfg, Method method,
                        const LatticeSpec& lspec, Box* box_out) {
    cfg.validate();
    const auto [l1, l2] = brm::lambda_pair(a, rho);
    const double norm = 1.0 / (l1 * l2);
    const double rho_star = std::sqrt((1.0 - rho) * (1.0 + rho));
    const int spu = cfg.n_steps;
    const double dt = 1.0 / spu;
    const double sdt = std::sqrt(dt);
    std::vector<int> last_index;
    for (double T : ladder) {
        if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("ladder horizons must be positive");
        const double n = std::round(T * spu);
        if (n < 1 || n > 1e8) throw InvalidInput("ladder horizon gives an unusable grid");
        last_index.push_back(static_cast<int>(n));
    }
    if (!std::is_sorted(ladder.begin(), ladder.end())) throw InvalidInput("ladder must be increasing");
    const int n_total = last_index.back();
    const std::size_t L = ladder.size();

    const bool use_lattice = method == Method::lattice;
    std::optional<Lattice> fine_lat, half_lat;
    if (use_lattice) {
        if (!(lspec.spacing > 0.0)) throw InvalidInput("lattice spacing must be positive");
        const Box box = truncation_box(a, rho, ladder.back(), lspec.tail_budget);
        if (box_out) *box_out = box;
        fine_lat.emplace(Lattice{Axis(box.x_lo, box.x_hi, lspec.spacing, l1, 1), Axis(box.y_lo, box.y_hi, lspec.spacing, l2, 1)});
        half_lat.emplace(Lattice{Axis(box.x_lo, box.x_hi, lspec.spacing, l1, 2), Axis(box.y_lo, box.y_hi, lspec.spacing, l2, 2)});
    }
    // Per ladder entry: fine, coarse, lattice, half-lattice.
    const std::size_t n_channels = 4 * L;

    Channels init;
    init.sum.assign(n_channels, 0.0);
    init.sumsq.assign(n_channels, 0.0);
    auto blocks = detail::for_each_block(cfg.n_paths, cfg.workers, init, [&](std::uint64_t first, std::uint64_t last, Channels& acc) {
        std::vector<Point> pts;
        std::vector<double> out(n_channels);
        std::vector<std::pair<double, double>> frontier;
        for (std::uint64_t path = first; path < last; ++path) {
            mc::Rng rng(cfg.seed, path);
            pts.clear();
            pts.push_back({0.0, 0.0, 0});
            double b1 = 0.0, b2 = 0.0;
            for (int k = 1; k <= n_total; ++k) {
                b1 += sdt * mc::standard_normal(rng);
                b2 += sdt * mc::standard_normal(rng);
                const double t = k * dt;
                const double x = b1 - t;
                const double y = rho * b1 + rho_star * b2 - a * t;
                // Points in the negative quadrant are dominated by the origin.
                if (x > 0.0 || y > 0.0) pts.push_back({x, y, k});
            }
            std::sort(pts.begin(), pts.end(), [](const Point& p, const Point& q) { return p.x > q.x || (p.x == q.x && p.k < q.k); });

            for (std::size_t j = 0; j < L; ++j) {
                for (int stride : {1, 2}) {
                    double area = 0.0;
                    double top = -std::numeric_limits<double>::infinity();
                    const bool record = stride == 1 && use_lattice;
                    if (record) frontier.clear();
                    for (const Point& p : pts) {
                        if (p.k > last_index[j] || p.k % stride != 0 || p.y <= top) continue;
                        const double lower = std::isinf(top) ? 0.0 : std::exp(l2 * top);
                        area += std::exp(l1 * p.x) * (std::exp(l2 * p.y) - lower);
                        top = p.y;
                        if (record) frontier.emplace_back(p.x, p.y);
                    }
                    out[4 * j + (stride == 1 ? 0 : 1)] = area * norm;
                }
                if (use_lattice) {
                    out[4 * j + 2] = lattice_sum(frontier, *fine_lat);
                    out[4 * j + 3] = lattice_sum(frontier, *half_lat);
                } else {
                    out[4 * j + 2] = out[4 * j + 3] = 0.0;
                }
            }
            for (std::size_t c = 0; c < n_channels; ++c) {
                acc.sum[c] += out[c];
                acc.sumsq[c] += out[c] * out[c];
            }
            ++acc.n;
        }
    });

    Channels total = init;
    for (const auto& b : blocks) {
        for (std::size_t c = 0; c < n_channels; ++c) {
            total.sum[c] += b.sum[c];
            total.sumsq[c] += b.sumsq[c];
        }
        total.n += b.n;
    }
    const double n = static_cast<double>(total.n);
    auto mean = [&](std::size_t c) { return total.sum[c] / n; };
    auto se = [&](std::size_t c) {
        if (total.n < 2) return 0.0;
        const double m = mean(c);
        return std::sqrt(std::max(0.0, (total.sumsq[c] - n * m * m) / (n - 1.0)) / n);
    };
    LadderResult r;
    r.T = ladder;
    r.paths = total.n;
    for (std::size_t j = 0; j < L; ++j) {
        r.fine.push_back(mean(4 * j));
        r.fine_se.push_back(se(4 * j));
        r.coarse.push_back(mean(4 * j + 1));
        r.lattice.push_back(mean(4 * j + 2));
        r.lattice_se.push_back(se(4 * j + 2));
        r.lattice_half.push_back(mean(4 * j + 3));
    }
    return r;
}

std::string describe_grid(Method method, const Box& box, const LatticeSpec& lspec, int spu) {
    char buf[256];
    if (method == Method::pathwise) {
        std::snprintf(buf, sizeof buf, "pathwise staircase, dt=1/%d", spu);
    } else {
        std::snprintf(buf, sizeof buf, "lattice h=%g on [%.4g,%.4g]x[%.4g,%.4g], dt=1/%d", lspec.spacing, box.x_lo, box.x_hi, box.y_lo,
                      box.y_hi, spu);
    }
    return buf;
}

// Value and error at ladder entry j for the chosen method.
std::pair<double, double> ladder_value(const LadderResult& r, std::size_t j, Method method, const LatticeSpec& lspec) {
    if (method == Method::pathwise) return {r.fine[j], r.fine_se[j]};
    const double quad = std::abs(r.lattice[j] - r.lattice_half[j]);
    return {r.lattice[j], std::hypot(r.lattice_se[j], quad) + lspec.tail_budget};
}

ConstantEstimate package(const LadderResult& r, std::size_t j, Method method, const LatticeSpec& lspec, const Box& box,
                         const mc::SimConfig& cfg) {
    ConstantEstimate e;
    std::tie(e.value, e.std_error) = ladder_value(r, j, method, lspec);
    e.T_used = r.T[j];
    e.grid = describe_grid(method, box, lspec, cfg.n_steps);
    e.inner_paths = r.paths;
    e.seed = cfg.seed;
    e.method = method == Method::pathwise ? "pathwise" : "lattice";
    e.steps_per_unit = cfg.n_steps;
    e.coarse_value = r.coarse[j];
    e.continuous_value = (std::sqrt(2.0) * r.fine[j] - r.coarse[j]) / (std::sqrt(2.0) - 1.0);
    for (std::size_t i = 0; i < r.T.size(); ++i) {
        const auto [v, s] = ladder_value(r, i, method, lspec);
        e.ladder.push_back({r.T[i], v, s});
    }
    return e;
}

}  // namespace

ConstantEstimate estimate_I_T(double a, double rho, double T, const mc::SimConfig& cfg, Method method, const LatticeSpec& lattice) {
    Box box{};
    const auto r = run_ladder(a, rho, {T}, cfg, method, lattice, &box);
    return package(r, 0, method, lattice, box, cfg);
}

ConstantEstimate extrapolate_C(double a, double rho, const mc::SimConfig& cfg, Method method, const LatticeSpec& lattice,
                               std::vector<double> ladder) {
    if (ladder.size() < 2) throw InvalidInput("ladder needs at least two horizons");
    Box box{};
    const auto r = run_ladder(a, rho, ladder, cfg, method, lattice, &box);
    const std::size_t last = ladder.size() - 1;
    ConstantEstimate e = package(r, last, method, lattice, box, cfg);

    std::vector<double> inc;
    for (std::size_t j = 0; j < last; ++j) inc.push_back(e.ladder[j + 1].value - e.ladder[j].value);
    for (std::size_t j = 0; j + 1 < inc.size(); ++j) {
        if (ladder[j] < 4.0) continue;
        if (inc[j] < 1.5 * inc[j + 1])
            throw NonConvergence("ladder increments do not contract by 1.5 per doubling", e.value, e.std_error + std::abs(inc[j + 1]));
    }

    // Geometric tail beyond the last horizon, with the last observed ratio.
    double tail = 0.0;
    if (inc.size() >= 2 && inc.back() > 0.0) {
        const double ratio = inc[inc.size() - 2] > 0.0 ? inc.back() / inc[inc.size() - 2] : 1.0;
        tail = ratio < 1.0 ? inc.back() * ratio / (1.0 - ratio) : inc.back();
    }
    e.extrapolation_error = tail;
    e.value += tail;
    e.continuous_value += tail;
    e.std_error += tail;
    return e;
}

InnerProbabilities inner_probabilities(double a, double rho, double T, const mc::SimConfig& cfg, std::vector<double> xs,
                                       std::vector<double> ys) {
    cfg.validate();
    brm::lambda_pair(a, rho);
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("T must be positive and finite");
    const double rho_star = std::sqrt((1.0 - rho) * (1.0 + rho));
    const int n = static_cast<int>(std::round(T * cfg.n_steps));
    if (n < 1) throw InvalidInput("horizon shorter than one step");
    const double dt = T / n, sdt = std::sqrt(dt);
    const std::size_t nx = xs.size(), ny = ys.size();

    Channels init;
    init.sum.assign(nx * ny, 0.0);
    auto blocks = detail::for_each_block(cfg.n_paths, cfg.workers, init, [&](std::uint64_t first, std::uint64_t last, Channels& acc) {
        std::vector<double> top(nx);
        for (std::uint64_t path = first; path < last; ++path) {
            mc::Rng rng(cfg.seed, path);
            // Highest Y reached while X exceeds each x node; the origin is the t = 0 point.
            for (std::size_t i = 0; i < nx; ++i) top[i] = xs[i] < 0.0 ? 0.0 : -INFINITY;
            double b1 = 0.0, b2 = 0.0;
            for (int k = 1; k <= n; ++k) {
                b1 += sdt * mc::standard_normal(rng);
                b2 += sdt * mc::standard_normal(rng);
                const double x = b1 - k * dt;
                const double y = rho * b1 + rho_star * b2 - a * k * dt;
                for (std::size_t i = 0; i < nx; ++i)
                    if (xs[i] < x && y > top[i]) top[i] = y;
            }
            for (std::size_t i = 0; i < nx; ++i)
                for (std::size_t j = 0; j < ny; ++j)
                    if (ys[j] < top[i]) acc.sum[i * ny + j] += 1.0;
            ++acc.n;
        }
    });
    InnerProbabilities out;
    out.p.assign(nx * ny, 0.0);
    double total = 0.0;
    for (const auto& b : blocks) {
        for (std::size_t c = 0; c < nx * ny; ++c) out.p[c] += b.sum[c];
        total += static_cast<double>(b.n);
    }
    out.std_error.resize(nx * ny);
    for (std::size_t c = 0; c < nx * ny; ++c) {
        out.p[c] /= total;
        out.std_error[c] = std::sqrt(out.p[c] * (1.0 - out.p[c]) / total);
    }
    out.xs = std::move(xs);
    out.ys = std::move(ys);
    return out;
}

}  // namespace simruin::pickands
