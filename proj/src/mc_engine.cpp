#include "simruin/mc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>

#include "parallel.hpp"
#include "simruin/errors.hpp"
#include "simruin/rng.hpp"

namespace simruin::mc {

namespace {

constexpr double kZ975 = 1.959963984540054;
constexpr double kMinEffective = 100.0;

template <int N>
struct Moments {
    std::array<double, N> sum{};
    std::array<double, N> sumsq{};
    std::uint64_t n = 0;

    void add(const std::array<double, N>& x) {
        for (int i = 0; i < N; ++i) {
            sum[i] += x[i];
            sumsq[i] += x[i] * x[i];
        }
        ++n;
    }
    void merge(const Moments& o) {
        for (int i = 0; i < N; ++i) {
            sum[i] += o.sum[i];
            sumsq[i] += o.sumsq[i];
        }
        n += o.n;
    }
    double mean(int i) const { return sum[i] / static_cast<double>(n); }
    double std_error(int i) const {
        if (n < 2) return 0.0;
        const double m = mean(i);
        const double var = std::max(0.0, (sumsq[i] - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
        return std::sqrt(var / static_cast<double>(n));
    }
};

template <int N>
Moments<N> reduce(const std::vector<Moments<N>>& blocks) {
    Moments<N> total;
    for (const auto& b : blocks) total.merge(b);
    return total;
}

template <int N>
Estimate make_estimate(const Moments<N>& m, int channel, std::string method) {
    Estimate e;
    e.value = m.mean(channel);
    e.std_error = m.std_error(channel);
    e.ci_low = e.value - kZ975 * e.std_error;
    e.ci_high = e.value + kZ975 * e.std_error;
    e.n_paths = m.n;
    e.n_effective = static_cast<double>(m.n);
    e.method = std::move(method);
    return e;
}

}  // namespace

void SimConfig::validate() const {
    if (n_paths < 1) throw InvalidInput("n_paths must be positive");
    if (n_steps < 2) throw InvalidInput("n_steps must be at least 2");
    if (workers < 1) throw InvalidInput("workers must be positive");
    if (!(window_end > 0.0 && window_end <= 1.0)) throw InvalidInput("window_end must lie in (0, 1]");
    if (is_drift && (!std::isfinite((*is_drift)[0]) || !std::isfinite((*is_drift)[1])))
        throw InvalidInput("importance-sampling drift must be finite");
}

int recommended_steps(double u) {
    const double n = std::max(256.0, std::ceil(256.0 * u * u));
    if (!(n < 1e8)) throw InvalidInput("capital too large for a grid estimator");
    const int steps = static_cast<int>(n);
    return steps + steps % 2;
}

std::array<double, 2> default_is_drift(const brm::BivariateBRM& model, double window_end) {
    const brm::BivariateBRM m = model.normalized();
    const double rho = m.rho;
    const double rho_star = std::sqrt((1.0 - rho) * (1.0 + rho));
    const double x1 = m.u + m.c1 * window_end;
    const double x2 = m.v() + m.c2 * window_end;
    // Most likely point of the quadrant {W1 > x1, W2 > x2} at time window_end.
    double w1 = x1, w2 = x2;
    if (x2 < rho * x1) w2 = rho * x1;
    else if (x1 < rho * x2) w1 = rho * x2;
    return {w1 / window_end, (w2 - rho * w1) / (rho_star * window_end)};
}

Estimate simulate_psi(const brm::BivariateBRM& model, const SimConfig& cfg) {
    cfg.validate();
    const brm::BivariateBRM m = model.normalized();
    const double rho = m.rho;
    const double rho_star = std::sqrt((1.0 - rho) * (1.0 + rho));
    const double u = m.u, v = m.v(), c1 = m.c1, c2 = m.c2;
    const int n = cfg.n_steps;
    const double t_end = cfg.window_end;
    const double dt = t_end / n;
    const double sdt = std::sqrt(dt);
    const bool tilted = cfg.is_drift.has_value();
    const double th1 = tilted ? (*cfg.is_drift)[0] : 0.0;
    const double th2 = tilted ? (*cfg.is_drift)[1] : 0.0;
    const bool at_origin = 0.0 > u && 0.0 > v;

    // Channels: fine grid, coarse grid, fine - coarse.
    auto blocks = detail::for_each_block(cfg.n_paths, cfg.workers, Moments<3>{}, [&](std::uint64_t first, std::uint64_t last, Moments<3>& acc) {
        for (std::uint64_t path = first; path < last; ++path) {
            Rng rng(cfg.seed, path);
            double b1 = 0.0, b2 = 0.0;
            bool fine = at_origin, coarse = at_origin;
            int k = 1;
            for (; k <= n && !coarse; ++k) {
                b1 += th1 * dt + sdt * standard_normal(rng);
                b2 += th2 * dt + sdt * standard_normal(rng);
                const double t = k * dt;
                if (b1 - c1 * t > u && rho * b1 + rho_star * b2 - c2 * t > v) {
                    fine = true;
                    coarse = k % 2 == 0;
                }
            }
            double weight = 1.0;
            if (tilted) {
                const double remaining = t_end - (k - 1) * dt;
                if (remaining > 0.0) {
                    const double s = std::sqrt(remaining);
                    b1 += th1 * remaining + s * standard_normal(rng);
                    b2 += th2 * remaining + s * standard_normal(rng);
                }
                weight = std::exp(-(th1 * b1 + th2 * b2) + 0.5 * (th1 * th1 + th2 * th2) * t_end);
            }
            const double xf = fine ? weight : 0.0;
            const double xc = coarse ? weight : 0.0;
            acc.add({xf, xc, xf - xc});
        }
    });
    const auto total = reduce(blocks);

    Estimate e = make_estimate(total, 0, tilted ? "grid-sup, importance sampling" : "grid-sup");
    if (tilted) {
        e.n_effective = total.sumsq[0] > 0.0 ? total.sum[0] * total.sum[0] / total.sumsq[0] : 0.0;
        if (e.n_effective < kMinEffective)
            throw DegenerateIS("importance sampling left too few effective ruined paths", e.n_effective);
    }
    e.halving = StepHalving{n / 2, total.mean(1), total.mean(2), total.std_error(2)};
    return e;
}

OneDimEstimate simulate_one_dim(const brm::SinglePortfolio& p, const SimConfig& cfg) {
    cfg.validate();
    p.validate();
    if (!std::isfinite(p.T)) throw InvalidInput("simulation needs a finite horizon");
    const int n = cfg.n_steps;
    const double dt = p.T * cfg.window_end / n;
    const double sdt = std::sqrt(dt);
    const double var_dt = p.sigma * p.sigma * dt;

    auto blocks = detail::for_each_block(cfg.n_paths, cfg.workers, Moments<2>{}, [&](std::uint64_t first, std::uint64_t last, Moments<2>& acc) {
        for (std::uint64_t path = first; path < last; ++path) {
            Rng rng(cfg.seed, path);
            double x_prev = p.u;
            double survive = 1.0;
            bool hit = false;
            for (int k = 1; k <= n; ++k) {
                const double x = x_prev + p.c * dt - p.sigma * sdt * standard_normal(rng);
                if (x <= 0.0) {
                    hit = true;
                    break;
                }
                // Probability that the bridge between the two grid values dips below 0.
                survive *= -std::expm1(-2.0 * x_prev * x / var_dt);
                x_prev = x;
            }
            const double raw = hit ? 1.0 : 0.0;
            acc.add({hit ? 1.0 : 1.0 - survive, raw});
        }
    });
    const auto total = reduce(blocks);
    return {make_estimate(total, 0, "grid + bridge crossing"), make_estimate(total, 1, "grid")};
}

namespace {

struct LevyHits {
    bool fine = false;
    bool coarse = false;
    double fine_value = 0.0;  // Rao-Blackwellized values (Brownian only)
    double coarse_value = 0.0;
};

// Convex barrier max(x + c1 t, y + c2 t) on the uniform grid t_k = k T / n.
struct GridBarrier {
    levy::TwoLineBarrier b;
    int n;
    double dt;
    double at_time(double t) const { return std::max(b.x + b.c1 * t, b.y + b.c2 * t); }
    double at(int k) const { return at_time(k * dt); }
    // Smallest barrier value over grid indices in [lo, hi] that are multiples of `stride`.
    double min_over(int lo, int hi, int stride) const {
        lo = (lo + stride - 1) / stride * stride;
        hi = hi / stride * stride;
        if (lo > hi) return std::numeric_limits<double>::infinity();
        double m = std::min(at(lo), at(hi));
        if (b.c1 != b.c2) {
            const double kink = (b.y - b.x) / (b.c1 - b.c2) / dt;
            for (double k : {std::floor(kink / stride) * stride, std::ceil(kink / stride) * stride})
                if (k >= lo && k <= hi) m = std::min(m, at(static_cast<int>(k)));
        }
        return m;
    }
};

// Bridge between two points at distances d0, d1 > 0 below a straight barrier.
double bridge_cross(double d0, double d1, double dt) { return std::exp(-2.0 * d0 * d1 / dt); }

LevyHits brownian_path(Rng& rng, const GridBarrier& g, double kink) {
    LevyHits h;
    double t_prev = 0.0, z_prev = 0.0, t_coarse = 0.0, z_coarse = 0.0;
    double keep_fine = 1.0, keep_coarse = 1.0;
    int k = 1;
    bool kink_done = !(kink > 0.0 && kink < g.b.T);
    while (k <= g.n) {
        const double t_grid = k * g.dt;
        const bool take_kink = !kink_done && kink < t_grid;
        const double t = take_kink ? kink : t_grid;
        const double z = z_prev + std::sqrt(t - t_prev) * standard_normal(rng);
        const double d_prev = g.at_time(t_prev) - z_prev;
        const double d = g.at_time(t) - z;
        if (d < 0.0) {
            h.fine = h.coarse = true;
            h.fine_value = h.coarse_value = 1.0;
            return h;
        }
        keep_fine *= 1.0 - bridge_cross(d_prev, d, t - t_prev);
        const bool on_coarse = take_kink || k % 2 == 0 || k == g.n;
        if (on_coarse) {
            keep_coarse *= 1.0 - bridge_cross(g.at_time(t_coarse) - z_coarse, d, t - t_coarse);
            t_coarse = t;
            z_coarse = z;
        }
        t_prev = t;
        z_prev = z;
        if (take_kink) kink_done = true;
        else ++k;
    }
    h.fine_value = 1.0 - keep_fine;
    h.coarse_value = 1.0 - keep_coarse;
    return h;
}

// Refines (s, e) by gamma bridges while some interior grid point could still
// lie above the barrier; a nondecreasing path is below z_e inside the interval.
void gamma_refine(Rng& rng, const GridBarrier& g, int s, int e, double zs, double ze, LevyHits& h) {
    if (h.coarse || e - s < 2) return;
    const bool need_fine = !h.fine && ze > g.min_over(s + 1, e - 1, 1);
    const bool need_coarse = ze > g.min_over(s + 1, e - 1, 2);
    if (!need_fine && !need_coarse) return;
    const int mid = (s + e) / 2;
    const double la = log_gamma_variate(rng, (mid - s) * g.dt);
    const double lb = log_gamma_variate(rng, (e - mid) * g.dt);
    const double zm = zs + (ze - zs) / (1.0 + std::exp(lb - la));
    if (zm > g.at(mid)) {
        h.fine = true;
        if (mid % 2 == 0) h.coarse = true;
    }
    gamma_refine(rng, g, s, mid, zs, zm, h);
    gamma_refine(rng, g, mid, e, zm, ze, h);
}

}  // namespace

Estimate simulate_levy_psi(const levy::LevyModel& model, const levy::TwoLineBarrier& barrier, const SimConfig& cfg) {
    cfg.validate();
    const levy::TwoLineBarrier b = barrier.oriented();
    const int n = cfg.n_steps;
    const GridBarrier grid{b, n, b.T / n};
    const double kink = b.xi();
    const levy::ModelKind kind = model.kind();

    double lambda = 1.0, sigma = 0.0, alpha = 1.5;
    if (const auto* m = dynamic_cast<const levy::GammaModel*>(&model)) lambda = m->lambda();
    if (const auto* m = dynamic_cast<const levy::PerturbedGammaModel*>(&model)) {
        lambda = m->lambda();
        sigma = m->sigma();
    }
    if (const auto* m = dynamic_cast<const levy::StableModel*>(&model)) alpha = m->alpha();
    const double stable_scale = std::pow(grid.dt, 1.0 / alpha);
    const double noise_scale = sigma * std::sqrt(grid.dt);

    auto blocks = detail::for_each_block(cfg.n_paths, cfg.workers, Moments<3>{}, [&](std::uint64_t first, std::uint64_t last, Moments<3>& acc) {
        for (std::uint64_t path = first; path < last; ++path) {
            Rng rng(cfg.seed, path);
            LevyHits h;
            switch (kind) {
                case levy::ModelKind::brownian:
                    h = brownian_path(rng, grid, kink);
                    break;
                case levy::ModelKind::gamma: {
                    const double z_end = gamma_variate(rng, b.T, lambda);
                    if (z_end > grid.at(n)) h.fine = h.coarse = true;
                    else gamma_refine(rng, grid, 0, n, 0.0, z_end, h);
                    break;
                }
                case levy::ModelKind::stable:
                case levy::ModelKind::perturbed_gamma: {
                    double z = 0.0;
                    for (int k = 1; k <= n && !h.coarse; ++k) {
                        z += kind == levy::ModelKind::stable
                                 ? stable_scale * stable_variate(rng, alpha, 1.0)
                                 : gamma_variate(rng, grid.dt, lambda) + noise_scale * standard_normal(rng);
                        if (z > grid.at(k)) {
                            h.fine = true;
                            if (k % 2 == 0) h.coarse = true;
                        }
                    }
                    break;
                }
            }
            if (kind != levy::ModelKind::brownian) {
                h.fine_value = h.fine ? 1.0 : 0.0;
                h.coarse_value = h.coarse ? 1.0 : 0.0;
            }
            acc.add({h.fine_value, h.coarse_value, h.fine_value - h.coarse_value});
        }
    });
    const auto total = reduce(blocks);
    const char* method = kind == levy::ModelKind::brownian ? "grid + bridge crossing"
                         : kind == levy::ModelKind::gamma  ? "gamma-bridge refined grid"
                                                           : "grid";
    Estimate e = make_estimate(total, 0, method);
    e.halving = StepHalving{n / 2, total.mean(1), total.mean(2), total.std_error(2)};
    return e;
}

double RuinTimeSample::n_effective() const {
    const double s = std::accumulate(weights.begin(), weights.end(), 0.0);
    double s2 = 0.0;
    for (double w : weights) s2 += w * w;
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

double RuinTimeSample::weighted_mean() const {
    if (values.empty()) throw EmptySample("no ruined paths");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        num += weights[i] * values[i];
        den += weights[i];
    }
    return num / den;
}

RuinTimeSample sample_ruin_time(const brm::BivariateBRM& model, const SimConfig& cfg) {
    cfg.validate();
    const brm::BivariateBRM m = model.normalized();
    const double rho = m.rho;
    const double rho_star = std::sqrt((1.0 - rho) * (1.0 + rho));
    const double u = m.u, v = m.v(), c1 = m.c1, c2 = m.c2;
    const int n = cfg.n_steps;
    const double t_end = cfg.window_end;
    const double dt = t_end / n;
    const double sdt = std::sqrt(dt);
    const bool tilted = cfg.is_drift.has_value();
    const double th1 = tilted ? (*cfg.is_drift)[0] : 0.0;
    const double th2 = tilted ? (*cfg.is_drift)[1] : 0.0;

    struct Block {
        std::vector<double> values, weights;
    };
    auto blocks = detail::for_each_block(cfg.n_paths, cfg.workers, Block{}, [&](std::uint64_t first, std::uint64_t last, Block& out) {
        for (std::uint64_t path = first; path < last; ++path) {
            Rng rng(cfg.seed, path);
            double b1 = 0.0, b2 = 0.0;
            double tau = -1.0;
            if (0.0 > u && 0.0 > v) tau = 0.0;
            int k = 1;
            for (; k <= n && tau < 0.0; ++k) {
                b1 += th1 * dt + sdt * standard_normal(rng);
                b2 += th2 * dt + sdt * standard_normal(rng);
                const double t = k * dt;
                if (b1 - c1 * t > u && rho * b1 + rho_star * b2 - c2 * t > v) tau = t;
            }
            if (tau < 0.0) continue;
            double weight = 1.0;
            if (tilted) {
                const double remaining = t_end - (k - 1) * dt;
                if (remaining > 0.0) {
                    const double s = std::sqrt(remaining);
                    b1 += th1 * remaining + s * standard_normal(rng);
                    b2 += th2 * remaining + s * standard_normal(rng);
                }
                weight = std::exp(-(th1 * b1 + th2 * b2) + 0.5 * (th1 * th1 + th2 * th2) * t_end);
            }
            if (!(weight > 0.0)) continue;
            out.values.push_back(u * u * (1.0 - tau));
            out.weights.push_back(weight);
        }
    });

    RuinTimeSample sample;
    sample.n_paths = cfg.n_paths;
    for (auto& b : blocks) {
        sample.values.insert(sample.values.end(), b.values.begin(), b.values.end());
        sample.weights.insert(sample.weights.end(), b.weights.begin(), b.weights.end());
    }
    const double ess = sample.n_effective();
    if (ess < 1000.0) throw DegenerateIS("fewer than 1000 effective ruined paths", ess);
    return sample;
}

double ks_statistic(const RuinTimeSample& sample, const std::function<double(double)>& cdf) {
    if (sample.values.empty()) throw EmptySample("KS statistic of an empty sample");
    if (sample.values.size() != sample.weights.size()) throw InvalidInput("values and weights differ in length");
    std::vector<std::size_t> order(sample.values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return sample.values[i] < sample.values[j] || (sample.values[i] == sample.values[j] && sample.weights[i] < sample.weights[j]);
    });
    double total = 0.0;
    for (std::size_t i : order) total += sample.weights[i];

    double below = 0.0, d = 0.0;
    for (std::size_t pos = 0; pos < order.size();) {
        const double x = sample.values[order[pos]];
        double mass = 0.0;
        for (; pos < order.size() && sample.values[order[pos]] == x; ++pos) mass += sample.weights[order[pos]];
        const double f = cdf(x);
        d = std::max({d, std::abs(below / total - f), std::abs((below + mass) / total - f)});
        below += mass;
    }
    return d;
}

}  // namespace simruin::mc
