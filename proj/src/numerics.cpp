#include "simruin/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

#include "simruin/errors.hpp"

namespace simruin::numerics {

namespace {

constexpr double kInvSqrt2 = 0.707106781186547524400844362104849039;
constexpr double kLogSqrt2Pi = 0.918938533204672741780329736405617640;

}  // namespace

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double std_normal_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double log_std_normal_sf(double x) {
    if (x < 35.0) return std::log(std_normal_sf(x));
    // Mills ratio series; truncation error below 1e-12 relative at x = 35.
    const double z = 1.0 / (x * x);
    const double series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z)));
    return -0.5 * x * x - kLogSqrt2Pi - std::log(x) + std::log(series);
}

GaussianPair::GaussianPair(double rho) : rho_(rho) {
    if (!(rho > -1.0 && rho < 1.0)) throw InvalidInput("correlation must lie in (-1, 1)");
    rho_star_ = std::sqrt((1.0 - rho) * (1.0 + rho));
}

double bivariate_normal_tail(double h, double k, const GaussianPair& pair) {
    if (!std::isfinite(h) || !std::isfinite(k)) throw InvalidInput("bivariate_normal_tail needs finite limits");

    // Gauss-Legendre half-rules (6, 12 and 20 points), negative abscissae only.
    static constexpr std::array<std::array<double, 10>, 3> w{{
        {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
        {0.04717533638651177, 0.1069393259953183, 0.1600783285433464, 0.2031674267230659, 0.2334925365383547,
         0.2491470458134029},
        {0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
         0.1019301198172404, 0.1181945319615184, 0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
         0.1527533871307259},
    }};
    static constexpr std::array<std::array<double, 10>, 3> x{{
        {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970},
        {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050, -0.5873179542866171,
         -0.3678314989981802, -0.1252334085114692},
        {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
         -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154196,
         -0.2277858511416451, -0.07652652113349733},
    }};

    const double r = pair.rho();
    int ng = 0;
    int lg = 3;
    if (std::abs(r) >= 0.3 && std::abs(r) < 0.75) {
        ng = 1;
        lg = 6;
    } else if (std::abs(r) >= 0.75) {
        ng = 2;
        lg = 10;
    }

    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r);
        for (int i = 0; i < lg; ++i) {
            double sn = std::sin(asr * (x[ng][i] + 1.0) / 2.0);
            bvn += w[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            sn = std::sin(asr * (-x[ng][i] + 1.0) / 2.0);
            bvn += w[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        return std::max(0.0, bvn * asr / (4.0 * kPi) + std_normal_sf(h) * std_normal_sf(k));
    }

    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) * (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * kSqrt2Pi * std_normal_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (int i = 0; i < lg; ++i) {
        for (const double sign : {-1.0, 1.0}) {
            double xs = a * (sign * x[ng][i] + 1.0);
            xs *= xs;
            const double rs = std::sqrt(1.0 - xs);
            bvn += a * w[ng][i] *
                   (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs - std::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
        }
    }
    bvn = -bvn / (2.0 * kPi);

    if (r > 0.0) return std::max(0.0, bvn + std_normal_sf(std::max(h, k)));
    bvn = -bvn;
    if (k > h) bvn += h < 0.0 ? std_normal_cdf(k) - std_normal_cdf(h) : std_normal_sf(h) - std_normal_sf(k);
    return std::max(0.0, bvn);
}

double log_bivariate_normal_pdf(double x, double y, const GaussianPair& pair) {
    const double r = pair.rho();
    const double one_minus = (1.0 - r) * (1.0 + r);
    const double q = (x * x - 2.0 * r * x * y + y * y) / one_minus;
    return -0.5 * q - std::log(2.0 * kPi * pair.rho_star());
}

double bivariate_normal_pdf(double x, double y, const GaussianPair& pair) {
    return std::exp(log_bivariate_normal_pdf(x, y, pair));
}

double log_gamma(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidInput("log_gamma needs a finite positive argument");
    return std::lgamma(t);
}

void QuadratureSpec::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw InvalidInput("quadrature tolerances must be positive");
    if (max_subdivisions < 1) throw InvalidInput("max_subdivisions must be at least 1");
    if (!(truncation_tail_mass > 0.0) || truncation_tail_mass > abs_tol)
        throw InvalidInput("truncation_tail_mass must lie in (0, abs_tol]");
}

QuadratureSpec QuadratureSpec::with_transform(SingularityTransform t) const {
    QuadratureSpec s = *this;
    s.singularity_transform = t;
    return s;
}

QuadratureSpec QuadratureSpec::tightened(double factor) const {
    QuadratureSpec s = *this;
    s.abs_tol /= factor;
    s.rel_tol /= factor;
    s.truncation_tail_mass /= factor;
    return s;
}

TailEnvelope gaussian_envelope(double amplitude, double center, double scale) {
    return [=](double x) { return std::abs(amplitude) * scale * kSqrt2Pi * std_normal_sf((x - center) / scale); };
}

namespace {

// QUADPACK qk21 abscissae and weights.
constexpr std::array<double, 11> kXgk{
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452, 0.930157491355708226001207180059508,
    0.865063366688984510732096688423493, 0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784, 0.294392862701460198131126603103866,
    0.148874338981631210884826001129720, 0.0};
constexpr std::array<double, 11> kWgk{
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390, 0.054755896574351996031381300244580,
    0.075039674810919952767043140916190, 0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525942849, 0.134709217311473325928054001771707, 0.142775938577060080797094273138717,
    0.147739104901338491374841515972068, 0.149445554002916905664936468389821};
constexpr std::array<double, 5> kWg{0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
                                    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
                                    0.295524224714752870173892994651338};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gauss_kronrod21(const Integrand& f, double a, double b, int& evaluations) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resg = 0.0;
    double resk = kWgk[10] * fc;
    double resabs = std::abs(resk);
    std::array<double, 10> f1{}, f2{};
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        f1[j] = f(center - dx);
        f2[j] = f(center + dx);
        const double sum = f1[j] + f2[j];
        resk += kWgk[j] * sum;
        resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1) resg += kWg[j / 2] * sum;
    }
    evaluations += 21;
    const double reskh = resk * 0.5;
    double resasc = kWgk[10] * std::abs(fc - reskh);
    for (int j = 0; j < 10; ++j) resasc += kWgk[j] * (std::abs(f1[j] - reskh) + std::abs(f2[j] - reskh));

    const double result = resk * half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
    if (!std::isfinite(result)) err = std::numeric_limits<double>::infinity();
    return {a, b, result, err};
}

QuadratureResult adaptive(const Integrand& f, double a, double b, const QuadratureSpec& spec) {
    QuadratureResult out;
    if (a == b) return out;
    std::priority_queue<Segment> heap;
    const Segment first = gauss_kronrod21(f, a, b, out.evaluations);
    heap.push(first);
    double total = first.value;
    double total_err = first.error;
    double frozen_err = 0.0;
    double frozen_val = 0.0;
    const double min_width = 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));

    auto tolerance = [&] { return std::max(spec.abs_tol, spec.rel_tol * std::abs(total)); };
    while (total_err > tolerance() && out.subdivisions < spec.max_subdivisions && !heap.empty()) {
        const Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (worst.b - worst.a <= min_width || mid <= worst.a || mid >= worst.b) {
            frozen_err += worst.error;
            frozen_val += worst.value;
            continue;
        }
        const Segment left = gauss_kronrod21(f, worst.a, mid, out.evaluations);
        const Segment right = gauss_kronrod21(f, mid, worst.b, out.evaluations);
        ++out.subdivisions;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    double v = frozen_val;
    double e = frozen_err;
    while (!heap.empty()) {
        v += heap.top().value;
        e += heap.top().error;
        heap.pop();
    }
    out.value = v;
    out.error = e;
    out.converged = std::isfinite(v) && e <= std::max(spec.abs_tol, spec.rel_tol * std::abs(v));
    return out;
}

void accumulate(QuadratureResult& into, const QuadratureResult& part) {
    into.value += part.value;
    into.error += part.error;
    into.evaluations += part.evaluations;
    into.subdivisions += part.subdivisions;
    into.converged = into.converged && part.converged;
}

QuadratureResult finite_range(const Integrand& f, double lower, double upper, const QuadratureSpec& spec) {
    switch (spec.singularity_transform) {
        case SingularityTransform::none:
            return adaptive(f, lower, upper, spec);
        case SingularityTransform::sqrt_endpoint: {
            const auto g = [&](double w) { return 2.0 * w * f(upper - w * w); };
            return adaptive(g, 0.0, std::sqrt(upper - lower), spec);
        }
        case SingularityTransform::sqrt_both: {
            const double mid = 0.5 * (lower + upper);
            const auto left = [&](double w) { return 2.0 * w * f(lower + w * w); };
            const auto right = [&](double w) { return 2.0 * w * f(upper - w * w); };
            QuadratureSpec half = spec;
            half.abs_tol *= 0.5;
            QuadratureResult out = adaptive(left, 0.0, std::sqrt(mid - lower), half);
            accumulate(out, adaptive(right, 0.0, std::sqrt(upper - mid), half));
            out.converged = out.converged || out.error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(out.value));
            return out;
        }
    }
    return {};
}

}  // namespace

QuadratureResult integrate_1d(const Integrand& f, double lower, double upper, const QuadratureSpec& spec,
                              const TailEnvelope& envelope) {
    spec.validate();
    if (std::isnan(lower) || std::isnan(upper)) throw InvalidInput("integration limits must not be NaN");
    if (upper < lower) {
        QuadratureResult r = integrate_1d(f, upper, lower, spec, envelope);
        r.value = -r.value;
        return r;
    }
    const bool inf_lo = std::isinf(lower);
    const bool inf_hi = std::isinf(upper);
    if ((inf_lo || inf_hi) && spec.singularity_transform != SingularityTransform::none)
        throw InvalidInput("singularity transforms need a finite range");

    if (inf_lo && inf_hi) {
        QuadratureSpec half = spec;
        half.abs_tol *= 0.5;
        QuadratureResult out = integrate_1d(f, -std::numeric_limits<double>::infinity(), 0.0, half);
        accumulate(out, integrate_1d(f, 0.0, upper, half, envelope));
        return out;
    }
    if (inf_lo) {
        const auto g = [&](double t) {
            const double om = 1.0 - t;
            return f(upper - t / om) / (om * om);
        };
        return adaptive(g, 0.0, 1.0, spec);
    }
    if (inf_hi) {
        if (envelope) {
            double step = 1.0;
            double cut = lower + step;
            for (int i = 0; i < 200 && envelope(cut) > spec.truncation_tail_mass; ++i) {
                step *= 2.0;
                cut = lower + step;
            }
            const double tail = envelope(cut);
            QuadratureResult out = adaptive(f, lower, cut, spec);
            out.error += tail;
            out.converged = out.converged && tail <= spec.truncation_tail_mass;
            return out;
        }
        const auto g = [&](double t) {
            const double om = 1.0 - t;
            return f(lower + t / om) / (om * om);
        };
        return adaptive(g, 0.0, 1.0, spec);
    }
    return finite_range(f, lower, upper, spec);
}

QuadratureResult integrate_pieces(const Integrand& f, std::span<const double> breaks, const QuadratureSpec& spec) {
    QuadratureResult out;
    if (breaks.size() < 2) return out;
    QuadratureSpec piece = spec;
    piece.abs_tol = spec.abs_tol / static_cast<double>(breaks.size() - 1);
    piece.truncation_tail_mass = std::min(piece.truncation_tail_mass, piece.abs_tol);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (breaks[i + 1] == breaks[i]) continue;
        accumulate(out, integrate_1d(f, breaks[i], breaks[i + 1], piece));
    }
    out.converged = out.converged || out.error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(out.value));
    return out;
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw InvalidInput("MonotoneCubic needs at least two matching knots");
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(x_[i + 1] > x_[i])) throw InvalidInput("MonotoneCubic knots must increase");
        delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    }
    slope_.assign(n, 0.0);
    slope_[0] = delta[0];
    slope_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) continue;
        // Weighted harmonic mean keeps each cubic piece monotone.
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        const double w1 = 2.0 * h1 + h0;
        const double w2 = h1 + 2.0 * h0;
        slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
}

double MonotoneCubic::operator()(double x) const {
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    i = std::min(i, x_.size() - 2);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * slope_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
           (t3 - t2) * h * slope_[i + 1];
}

}  // namespace simruin::numerics
