#include "simruin/levy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "simruin/errors.hpp"

namespace simruin::levy {

using numerics::Integrand;
using numerics::QuadratureResult;
using numerics::QuadratureSpec;
using numerics::SingularityTransform;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double require(const QuadratureResult& r, const char* what) {
    if (!r.converged) throw NonConvergence(what, r.value, r.error);
    return r.value;
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(name) + " must be positive and finite");
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

// Sorted breakpoints inside [lo, hi], endpoints included.
std::vector<double> breakpoints(double lo, double hi, std::initializer_list<double> inner) {
    std::vector<double> b{lo};
    for (double v : inner)
        if (v > lo && v < hi) b.push_back(v);
    b.push_back(hi);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

// E min(0, N(mu, sd^2)).
double normal_shortfall(double mu, double sd) {
    return mu * numerics::std_normal_cdf(-mu / sd) - sd * numerics::std_normal_pdf(mu / sd);
}

// Integral of g(w) against the Gamma(shape t, rate lambda) density over
// (lo, hi). Below shape 1 the substitution v = w^t turns w^(t-1) dw into dv / t.
QuadratureResult gamma_expect(double lambda, double t, const Integrand& g, double lo, double hi,
                              std::initializer_list<double> kinks, const QuadratureSpec& spec) {
    lo = std::max(lo, 0.0);
    const double w_max = boost::math::gamma_q_inv(t, spec.truncation_tail_mass) / lambda;
    hi = std::min(hi, w_max);
    if (!(hi > lo)) return {};
    if (t < 1.0) {
        const double scale = std::exp(t * std::log(lambda) - numerics::log_gamma(t + 1.0));
        const auto h = [&](double v) {
            const double w = std::pow(v, 1.0 / t);
            return scale * g(w) * std::exp(-lambda * w);
        };
        std::vector<double> b{std::pow(lo, t), std::pow(hi, t)};
        for (double w : kinks)
            if (w > lo && w < hi) b.push_back(std::pow(w, t));
        for (double w : {0.1 / lambda, 1.0 / lambda, 4.0 / lambda})
            if (w > lo && w < hi) b.push_back(std::pow(w, t));
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        return numerics::integrate_pieces(h, b, spec);
    }
    const double log_norm = t * std::log(lambda) - numerics::log_gamma(t);
    const auto h = [&](double w) {
        if (w <= 0.0) return 0.0;
        return g(w) * std::exp(log_norm + (t - 1.0) * std::log(w) - lambda * w);
    };
    std::vector<double> b = breakpoints(lo, hi, {(t - 1.0) / lambda});
    for (double w : kinks)
        if (w > lo && w < hi) b.push_back(w);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return numerics::integrate_pieces(h, b, spec);
}

// Half-width, in standard deviations, beyond which Gaussian mass is negligible.
double gaussian_cut(const QuadratureSpec& spec) { return std::sqrt(2.0 * std::log(1.0 / spec.truncation_tail_mass)) + 1.0; }

}  // namespace

// Brownian ---------------------------------------------------------------

std::string BrownianModel::describe() const {
    return sign_ == SpectralSign::positive ? "brownian" : "brownian(negative)";
}

double BrownianModel::density(double u, double t) const {
    const double sd = std::sqrt(t);
    return numerics::std_normal_pdf(u / sd) / sd;
}

double BrownianModel::tail(double z, double t) const { return numerics::std_normal_sf(z / std::sqrt(t)); }

double BrownianModel::expected_min(double c, double s) const { return normal_shortfall(-c * s, std::sqrt(s)); }

QuadratureResult BrownianModel::expect(const Integrand& g, double t, double lo, double hi,
                                       const QuadratureSpec& spec) const {
    const double sd = std::sqrt(t);
    const double k = gaussian_cut(spec) * sd;
    lo = std::max(lo, -k);
    hi = std::min(hi, k);
    if (!(hi > lo)) return {};
    const auto b = breakpoints(lo, hi, {-sd, 0.0, sd});
    return numerics::integrate_pieces([&](double w) { return g(w) * density(w, t); }, b, spec);
}

// Gamma ------------------------------------------------------------------

GammaModel::GammaModel(double lambda) : lambda_(lambda) { require_positive(lambda, "gamma rate lambda"); }

std::string GammaModel::describe() const {
    std::ostringstream os;
    os << "gamma(lambda=" << lambda_ << ")";
    return os.str();
}

double GammaModel::density(double u, double t) const {
    if (u <= 0.0) return 0.0;
    return std::exp(t * std::log(lambda_) + (t - 1.0) * std::log(u) - lambda_ * u - numerics::log_gamma(t));
}

double GammaModel::tail(double z, double t) const {
    if (z <= 0.0) return 1.0;
    return boost::math::gamma_q(t, lambda_ * z);
}

double GammaModel::expected_min(double c, double s) const {
    if (c <= 0.0) return 0.0;
    const double level = lambda_ * c * s;
    return -(c * s * boost::math::gamma_p(s, level) - (s / lambda_) * boost::math::gamma_p(s + 1.0, level));
}

QuadratureResult GammaModel::expect(const Integrand& g, double t, double lo, double hi,
                                    const QuadratureSpec& spec) const {
    return gamma_expect(lambda_, t, g, lo, hi, {}, spec);
}

// Stable -----------------------------------------------------------------

QuadratureSpec StableModel::default_inner() {
    QuadratureSpec s;
    s.abs_tol = 1e-12;
    s.rel_tol = 1e-11;
    s.truncation_tail_mass = 1e-14;
    s.max_subdivisions = 4000;
    return s;
}

StableModel::StableModel(double alpha, QuadratureSpec inner) : alpha_(alpha), inner_(inner) {
    if (!(alpha > 1.0 && alpha < 2.0)) throw InvalidInput("stable index alpha must lie in (1, 2)");
    inner_.validate();
    tan_ = std::tan(numerics::kPi * alpha / 2.0);
    x_max_ = std::pow(40.0, 1.0 / alpha);
    double x = -0.5;
    while (x > -400.0 && unit_cdf(x) > 1e-11) x -= 0.5;
    // The left tail decays faster than any exponential, so one more unit is ample.
    left_cut_ = x - 1.0;
}

std::string StableModel::describe() const {
    std::ostringstream os;
    os << "stable(alpha=" << alpha_ << ")";
    return os.str();
}

namespace {

// Breakpoints every ~period of the oscillation over [0, x_max].
std::vector<double> oscillation_grid(double frequency, double x_max) {
    const int pieces = std::clamp(static_cast<int>(std::ceil(x_max * frequency / (2.0 * numerics::kPi))), 1, 4000);
    std::vector<double> b(pieces + 1);
    for (int i = 0; i <= pieces; ++i) b[i] = x_max * i / pieces;
    return b;
}

}  // namespace

double StableModel::unit_density(double x) const {
    const double freq = std::abs(x) + alpha_ * std::pow(x_max_, alpha_ - 1.0) * std::abs(tan_) + 1.0;
    const auto f = [&](double t) {
        const double ta = std::pow(t, alpha_);
        return std::exp(-ta) * std::cos(x * t - ta * tan_);
    };
    const double v = require(numerics::integrate_pieces(f, oscillation_grid(freq, x_max_), inner_), "stable density");
    return std::max(0.0, v / numerics::kPi);
}

double StableModel::unit_cdf(double x) const {
    const double freq = std::abs(x) + alpha_ * std::pow(x_max_, alpha_ - 1.0) * std::abs(tan_) + 1.0;
    const auto f = [&](double t) {
        const double ta = std::pow(t, alpha_);
        return std::exp(-ta) * std::sin(x * t - ta * tan_) / t;
    };
    const double v = require(numerics::integrate_pieces(f, oscillation_grid(freq, x_max_), inner_), "stable cdf");
    return clamp01(0.5 + v / numerics::kPi);
}

double StableModel::unit_shortfall(double k) const {
    // -int_{left}^{k} F(z) dz with F from the inversion formula; integrating
    // sin(z t - theta) / t over z in closed form leaves one oscillatory integral.
    const double lo = left_cut_;
    if (k <= lo) return 0.0;
    const double freq = std::max(std::abs(k), std::abs(lo)) + alpha_ * std::pow(x_max_, alpha_ - 1.0) * std::abs(tan_) + 1.0;
    const auto f = [&](double t) {
        const double ta = std::pow(t, alpha_);
        const double theta = ta * tan_;
        return std::exp(-ta) * 2.0 * std::sin(0.5 * (lo + k) * t - theta) * std::sin(0.5 * (k - lo) * t) / (t * t);
    };
    const double v = require(numerics::integrate_pieces(f, oscillation_grid(freq, x_max_), inner_), "stable shortfall");
    return std::min(0.0, -(0.5 * (k - lo) + v / numerics::kPi));
}

double StableModel::density(double u, double t) const {
    const double scale = std::pow(t, 1.0 / alpha_);
    return unit_density(u / scale) / scale;
}

double StableModel::tail(double z, double t) const { return 1.0 - unit_cdf(z / std::pow(t, 1.0 / alpha_)); }

double StableModel::expected_min(double c, double s) const {
    constexpr double k_mid = 10.0, k_hi = 60.0;
    std::call_once(table_once_, [this] {
        std::vector<double> ks, gs;
        for (double k = left_cut_; k < k_mid; k += 0.02) ks.push_back(k);
        for (double k = k_mid; k <= k_hi; k += 0.25) ks.push_back(k);
        gs.reserve(ks.size());
        for (double k : ks) gs.push_back(unit_shortfall(k));
        shortfall_table_ = numerics::MonotoneCubic(std::move(ks), std::move(gs));
    });
    const double k = c * std::pow(s, 1.0 - 1.0 / alpha_);
    const double g = (k <= left_cut_) ? 0.0 : (k < shortfall_table_.back() ? shortfall_table_(k) : unit_shortfall(k));
    return std::min(0.0, std::pow(s, 1.0 / alpha_) * g);
}

QuadratureResult StableModel::expect(const Integrand& g, double t, double lo, double hi,
                                     const QuadratureSpec& spec) const {
    if (std::isinf(hi)) throw InvalidInput("stable expectations need a finite upper limit (heavy right tail)");
    const double scale = std::pow(t, 1.0 / alpha_);
    lo = std::max(lo, left_cut_ * scale);
    if (!(hi > lo)) return {};
    const auto b = breakpoints(lo, hi, {-scale, 0.0, scale, 4.0 * scale});
    return numerics::integrate_pieces([&](double w) { return g(w) * density(w, t); }, b, spec);
}

// Perturbed gamma ----------------------------------------------------------

PerturbedGammaModel::PerturbedGammaModel(double lambda, double sigma, QuadratureSpec inner)
    : gamma_(lambda), lambda_(lambda), sigma_(sigma), inner_(inner) {
    require_positive(sigma, "perturbation sigma");
    inner_.validate();
}

std::string PerturbedGammaModel::describe() const {
    std::ostringstream os;
    os << "perturbed-gamma(lambda=" << lambda_ << ", sigma=" << sigma_ << ")";
    return os.str();
}

QuadratureResult PerturbedGammaModel::gamma_average(const Integrand& h, double t, std::initializer_list<double> kinks,
                                                    const QuadratureSpec& spec) const {
    return gamma_expect(lambda_, t, h, 0.0, kInf, kinks, spec);
}

double PerturbedGammaModel::density(double u, double t) const {
    const double sd = sigma_ * std::sqrt(t);
    const double k = 8.0 * sd;
    const auto h = [&](double y) { return numerics::std_normal_pdf((u - y) / sd) / sd; };
    return std::max(0.0, require(gamma_average(h, t, {u - k, u - sd, u, u + sd, u + k}, inner_), "perturbed gamma density"));
}

double PerturbedGammaModel::tail(double z, double t) const {
    const double sd = sigma_ * std::sqrt(t);
    const double k = 8.0 * sd;
    const auto h = [&](double y) { return numerics::std_normal_sf((z - y) / sd); };
    return clamp01(require(gamma_average(h, t, {z - k, z, z + k}, inner_), "perturbed gamma tail"));
}

double PerturbedGammaModel::expected_min(double c, double s) const {
    const double sd = sigma_ * std::sqrt(s);
    const double k = 8.0 * sd;
    const double level = c * s;
    const auto h = [&](double y) { return normal_shortfall(y - level, sd); };
    return std::min(0.0, require(gamma_average(h, s, {level - k, level, level + k}, inner_), "perturbed gamma shortfall"));
}

QuadratureResult PerturbedGammaModel::expect(const Integrand& g, double t, double lo, double hi,
                                             const QuadratureSpec& spec) const {
    const double sd = sigma_ * std::sqrt(t);
    const double k = gaussian_cut(spec) * sd;
    const double w_max = boost::math::gamma_q_inv(t, spec.truncation_tail_mass) / lambda_;
    lo = std::max(lo, -k);
    hi = std::min(hi, w_max + k);
    if (!(hi > lo)) return {};
    const auto b = breakpoints(lo, hi, {-sd, 0.0, sd, 4.0 * sd, t / lambda_});
    return numerics::integrate_pieces([&](double w) { return g(w) * density(w, t); }, b, spec);
}

// Barrier ------------------------------------------------------------------

void TwoLineBarrier::validate() const {
    for (double v : {c1, c2, x, y, T})
        if (!std::isfinite(v)) throw InvalidInput("barrier parameters must be finite");
    if (!(T > 0.0)) throw InvalidInput("horizon T must be positive");
    if (x < 0.0 || y < 0.0) throw InvalidInput("capitals x and y must be nonnegative");
    if (c1 == c2) throw DegenerateDrift("c1 == c2: both lines are parallel");
}

TwoLineBarrier TwoLineBarrier::oriented() const {
    validate();
    if (c1 > c2) return *this;
    return {c2, c1, y, x, T};
}

BarrierCase TwoLineBarrier::classify() const {
    if (x >= y) return BarrierCase::first_dominates;
    if (y >= x + delta() * T) return BarrierCase::second_dominates;
    return BarrierCase::crossing;
}

const char* case_name(BarrierCase c) {
    switch (c) {
        case BarrierCase::first_dominates: return "first-dominates";
        case BarrierCase::crossing: return "crossing";
        case BarrierCase::second_dominates: return "second-dominates";
    }
    return "?";
}

// Exact probabilities --------------------------------------------------------

namespace {

void check_horizon(double T, double u) {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("horizon must be positive");
    if (!(u >= 0.0) || !std::isfinite(u)) throw InvalidInput("capital must be nonnegative");
}

}  // namespace

double L_functional(const LevyModel& model, double c, double T, double u, const QuadratureSpec& spec) {
    check_horizon(T, u);
    if (model.spectral_sign() != SpectralSign::positive) throw InvalidInput("L functional needs a spectrally positive model");
    spec.validate();
    const double head = model.tail(u + c * T, T);
    const auto integrand = [&](double s) {
        const double h = T - s;
        if (h <= 0.0 || s <= 0.0) return 0.0;
        const double f = model.density(u + c * s, s);
        if (f == 0.0) return 0.0;
        return -model.expected_min(c, h) / h * f;
    };
    const auto r = numerics::integrate_1d(integrand, 0.0, T, spec.with_transform(SingularityTransform::sqrt_both));
    return clamp01(head + require(r, "L functional"));
}

double kendall_ruin(const LevyModel& model, double c, double T, double u, const QuadratureSpec& spec) {
    check_horizon(T, u);
    if (model.spectral_sign() != SpectralSign::negative) throw InvalidInput("first-passage form needs a spectrally negative model");
    spec.validate();
    // Level 0 is regular for a process with a Gaussian part, the only
    // spectrally negative model here.
    if (u == 0.0) return 1.0;
    const auto integrand = [&](double s) { return s <= 0.0 ? 0.0 : model.density(u + c * s, s) / s; };
    const auto r = numerics::integrate_1d(integrand, 0.0, T, spec.with_transform(SingularityTransform::sqrt_both));
    return clamp01(u * require(r, "first-passage integral"));
}

namespace {

double single_line(const LevyModel& model, double c, double T, double u, const QuadratureSpec& spec) {
    return model.spectral_sign() == SpectralSign::positive ? L_functional(model, c, T, u, spec)
                                                           : kendall_ruin(model, c, T, u, spec);
}

// E[g(Z(t)); Z(t) < top] where g(top - z) drops from 1 to its bulk value over
// z of order sqrt(rest) or rest. Split there so that a short remaining horizon
// near the second case boundary is still resolved.
double expect_below(const LevyModel& model, const Integrand& g, double t, double top, double rest, const QuadratureSpec& spec,
                    const char* what) {
    std::vector<double> cuts{-kInf};
    for (double d : {8.0 * std::sqrt(rest), std::sqrt(rest), rest})
        if (d > 0.0 && top - d > cuts.back()) cuts.push_back(top - d);
    cuts.push_back(top);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += require(model.expect(g, t, cuts[i], cuts[i + 1], spec), what);
    return total;
}

// Upward jumps: survive the second line up to xi, then the first line takes over.
double crossing_positive(const LevyModel& model, const TwoLineBarrier& b, double xi, const QuadratureSpec& spec) {
    const QuadratureSpec inner = spec.tightened(10.0);
    const QuadratureSpec inner2 = spec.tightened(100.0);
    const double rest = b.T - xi;
    const double level = b.y + b.c2 * xi;

    const double head = L_functional(model, b.c2, xi, b.y, inner);

    const auto after = [&](double w) { return L_functional(model, b.c1, rest, level - w, inner2); };
    const double passed = expect_below(model, after, xi, level, rest, inner, "crossing case: second term");

    const auto crossed = [&](double s) {
        const double h = xi - s;
        if (h <= 0.0 || s <= 0.0) return 0.0;
        const double f = model.density(b.y + b.c2 * s, s);
        if (f == 0.0) return 0.0;
        const double top = b.c2 * h;
        const auto g = [&](double w) { return (top - w) * L_functional(model, b.c1, rest, top - w, inner2); };
        return f / h * require(model.expect(g, h, -kInf, top, inner2), "crossing case: inner expectation");
    };
    const double correction =
        require(numerics::integrate_1d(crossed, 0.0, xi, inner.with_transform(SingularityTransform::sqrt_both)),
                "crossing case: third term");
    return clamp01(head + passed - correction);
}

// Downward jumps: same decomposition with first-passage densities.
double crossing_negative(const LevyModel& model, const TwoLineBarrier& b, double xi, const QuadratureSpec& spec) {
    const QuadratureSpec inner = spec.tightened(10.0);
    const QuadratureSpec inner2 = spec.tightened(100.0);
    const double rest = b.T - xi;
    const double level = b.y + b.c2 * xi;

    const double head = kendall_ruin(model, b.c2, xi, b.y, inner);

    const auto after = [&](double w) { return kendall_ruin(model, b.c1, rest, level - w, inner2); };
    const double passed = expect_below(model, after, xi, level, rest, inner, "crossing case: second term");

    // r is the first-passage time over y + c2 r; t = xi - r remains.
    const auto crossed = [&](double r) {
        const double t = xi - r;
        if (r <= 0.0 || t <= 0.0) return 0.0;
        const double hit = b.y / r * model.density(b.y + b.c2 * r, r);
        if (hit == 0.0) return 0.0;
        const double top = b.c2 * t;
        const auto g = [&](double w) { return kendall_ruin(model, b.c1, rest, top - w, inner2); };
        return hit * require(model.expect(g, t, -kInf, top, inner2), "crossing case: inner expectation");
    };
    const double correction =
        require(numerics::integrate_1d(crossed, 0.0, xi, inner.with_transform(SingularityTransform::sqrt_both)),
                "crossing case: third term");
    return clamp01(head + passed - correction);
}

}  // namespace

LevyResult psi_levy(const LevyModel& model, const TwoLineBarrier& barrier, const QuadratureSpec& spec) {
    const TwoLineBarrier b = barrier.oriented();
    spec.validate();
    const BarrierCase branch = b.classify();
    switch (branch) {
        case BarrierCase::first_dominates:
            return {single_line(model, b.c1, b.T, b.x, spec), branch, std::nan("")};
        case BarrierCase::second_dominates:
            return {single_line(model, b.c2, b.T, b.y, spec), branch, std::nan("")};
        case BarrierCase::crossing: {
            const double xi = b.xi();
            const double p = model.spectral_sign() == SpectralSign::positive ? crossing_positive(model, b, xi, spec)
                                                                             : crossing_negative(model, b, xi, spec);
            return {p, branch, xi};
        }
    }
    return {};
}

double gamma_L_closed(double lambda, double c, double T, double u, const QuadratureSpec& spec) {
    require_positive(lambda, "lambda");
    require_positive(c, "c");
    require_positive(T, "T");
    require_positive(u, "u");
    spec.validate();
    const QuadratureSpec inner = spec.tightened(10.0);
    const double head = boost::math::gamma_q(T, lambda * (u + c * T));

    // int_0^{ch} (ch - z) z^(h-1) e^{-lambda z} dz / Gamma(h + 1)
    const auto shortfall = [&](double h) {
        const double top = c * h;
        if (h < 1.0) {
            const auto g = [&](double v) {
                const double z = std::pow(v, 1.0 / h);
                return (top - z) * std::exp(-lambda * z);
            };
            const double r = require(numerics::integrate_1d(g, 0.0, std::pow(top, h), inner), "gamma closed form: inner");
            return r * std::exp(-std::log(h) - numerics::log_gamma(h + 1.0));
        }
        const auto g = [&](double z) {
            return z <= 0.0 ? 0.0 : (top - z) * std::exp((h - 1.0) * std::log(z) - lambda * z - numerics::log_gamma(h + 1.0));
        };
        return require(numerics::integrate_1d(g, 0.0, top, inner), "gamma closed form: inner");
    };
    const auto outer = [&](double s) {
        const double h = T - s;
        if (s <= 0.0 || h <= 0.0) return 0.0;
        const double log_front = T * std::log(lambda) - lambda * u + (s - 1.0) * std::log(u + c * s) - c * lambda * s -
                                 numerics::log_gamma(s);
        return std::exp(log_front) * shortfall(h);
    };
    const auto r = numerics::integrate_1d(outer, 0.0, T, spec.with_transform(SingularityTransform::sqrt_both));
    return clamp01(head + require(r, "gamma closed form"));
}

double stable_density(double alpha, double u, double t, const QuadratureSpec& spec) {
    require_positive(t, "t");
    return StableModel(alpha, spec).density(u, t);
}

double perturbed_gamma_density(double lambda, double sigma, double u, double t, const QuadratureSpec& spec) {
    require_positive(t, "t");
    return PerturbedGammaModel(lambda, sigma, spec).density(u, t);
}

std::unique_ptr<LevyModel> make_model(ModelKind kind, double lambda, double alpha, double sigma, SpectralSign sign) {
    switch (kind) {
        case ModelKind::brownian: return std::make_unique<BrownianModel>(sign);
        case ModelKind::gamma: return std::make_unique<GammaModel>(lambda);
        case ModelKind::stable: return std::make_unique<StableModel>(alpha);
        case ModelKind::perturbed_gamma: return std::make_unique<PerturbedGammaModel>(lambda, sigma);
    }
    throw InvalidInput("unknown model");
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "brownian") return ModelKind::brownian;
    if (name == "gamma") return ModelKind::gamma;
    if (name == "stable") return ModelKind::stable;
    if (name == "perturbed-gamma") return ModelKind::perturbed_gamma;
    throw InvalidInput("unknown model '" + name + "' (brownian|gamma|stable|perturbed-gamma)");
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::brownian: return "brownian";
        case ModelKind::gamma: return "gamma";
        case ModelKind::stable: return "stable";
        case ModelKind::perturbed_gamma: return "perturbed-gamma";
    }
    return "?";
}

}  // namespace simruin::levy
