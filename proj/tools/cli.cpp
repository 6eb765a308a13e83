#include "cli.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <list>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simruin/brm_bivariate.hpp"
#include "simruin/brm_closed.hpp"
#include "simruin/errors.hpp"
#include "simruin/levy.hpp"
#include "simruin/mc_engine.hpp"
#include "simruin/pickands.hpp"

namespace simruin::cli {
namespace {

enum class Kind { real, integer, text };

struct Param {
    std::string name;
    Kind kind;
    std::string def;
    std::string help;
};

struct Outcome {
    double value = std::nan("");
    std::optional<double> std_error;
    std::optional<std::pair<double, double>> ci;
    std::optional<std::pair<double, double>> bounds;
    std::string method;
    std::optional<std::uint64_t> seed;
    std::vector<std::pair<std::string, double>> extra;
};

using Values = std::map<std::string, std::string>;

class Args {
public:
    explicit Args(Values& values) : values_(values) {}

    double real(const std::string& name) const {
        const std::string& s = values_.at(name);
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0' || !std::isfinite(v)) throw InvalidInput("--" + name + ": expected a finite number, got '" + s + "'");
        return v;
    }
    std::uint64_t count(const std::string& name) const {
        const std::string& s = values_.at(name);
        char* end = nullptr;
        errno = 0;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (s.empty() || s[0] == '-' || *end != '\0' || errno != 0) throw InvalidInput("--" + name + ": expected a nonnegative integer, got '" + s + "'");
        return v;
    }
    int integer(const std::string& name) const {
        const std::uint64_t v = count(name);
        if (v > 1000000000ULL) throw InvalidInput("--" + name + " is too large");
        return static_cast<int>(v);
    }
    const std::string& text(const std::string& name) const { return values_.at(name); }
    bool is(const std::string& name, const char* literal) const { return values_.at(name) == literal; }
    void set(const std::string& name, const std::string& v) { values_[name] = v; }
    void set(const std::string& name, long long v) { values_[name] = std::to_string(v); }

private:
    Values& values_;
};

struct Command {
    std::string path;  // e.g. "brm2 bounds"
    std::string help;
    std::vector<Param> params;
    std::function<Outcome(Args&)> run;
};

// 17 significant digits: parses back to the same double.
std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Parameter groups --------------------------------------------------------

std::vector<Param> operator+(std::vector<Param> a, const std::vector<Param>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<Param> mc_params(const std::string& paths, const std::string& steps) {
    return {{"paths", Kind::integer, paths, "number of simulated paths"},
            {"steps", Kind::integer, steps, "time steps per path"},
            {"seed", Kind::integer, "1", "RNG seed"},
            {"workers", Kind::integer, "1", "worker threads (results do not depend on it)"}};
}

std::vector<Param> tol_params(const std::string& abs, const std::string& rel) {
    return {{"abs-tol", Kind::real, abs, "absolute quadrature tolerance"},
            {"rel-tol", Kind::real, rel, "relative quadrature tolerance"}};
}

const std::vector<Param> kPair{{"c1", Kind::real, "0", "drift of the first portfolio"},
                               {"c2", Kind::real, "0", "drift of the second portfolio"},
                               {"rho", Kind::real, "0", "correlation"},
                               {"a", Kind::real, "1", "capital ratio v = a u"},
                               {"u", Kind::real, "1", "capital of the first portfolio"},
                               {"T", Kind::real, "1", "horizon"}};

const std::vector<Param> kLevyModel{{"model", Kind::text, "gamma", "brownian|gamma|stable|perturbed-gamma"},
                                    {"lambda", Kind::real, "1", "gamma rate"},
                                    {"alpha", Kind::real, "1.5", "stable index in (1, 2)"},
                                    {"sigma", Kind::real, "0.5", "Brownian perturbation scale"},
                                    {"sign", Kind::text, "positive", "spectral sign for brownian: positive|negative"},
                                    {"c1", Kind::real, "1.5", "slope of the first line"},
                                    {"c2", Kind::real, "0.5", "slope of the second line"},
                                    {"x", Kind::real, "1", "first capital"},
                                    {"y", Kind::real, "1", "second capital"},
                                    {"T", Kind::real, "1", "horizon"}};

numerics::QuadratureSpec quadrature(const Args& a) {
    numerics::QuadratureSpec s;
    s.abs_tol = a.real("abs-tol");
    s.rel_tol = a.real("rel-tol");
    s.truncation_tail_mass = s.abs_tol / 10.0;
    s.validate();
    return s;
}

mc::SimConfig sim_config(const Args& a) {
    mc::SimConfig cfg;
    cfg.n_paths = a.count("paths");
    cfg.n_steps = a.integer("steps");
    cfg.seed = a.count("seed");
    cfg.workers = a.integer("workers");
    return cfg;
}

brm::BivariateBRM pair_model(const Args& a) {
    brm::BivariateBRM m;
    m.c1 = a.real("c1");
    m.c2 = a.real("c2");
    m.rho = a.real("rho");
    m.a = a.real("a");
    m.u = a.real("u");
    m.T = a.real("T");
    m.validate();
    return m;
}

std::unique_ptr<levy::LevyModel> levy_model(const Args& a) {
    const levy::ModelKind kind = levy::parse_model_kind(a.text("model"));
    levy::SpectralSign sign;
    if (a.is("sign", "positive")) sign = levy::SpectralSign::positive;
    else if (a.is("sign", "negative")) sign = levy::SpectralSign::negative;
    else throw InvalidInput("--sign must be positive or negative");
    if (sign == levy::SpectralSign::negative && kind != levy::ModelKind::brownian)
        throw InvalidInput("only the brownian model can be spectrally negative");
    return levy::make_model(kind, a.real("lambda"), a.real("alpha"), a.real("sigma"), sign);
}

levy::TwoLineBarrier barrier(const Args& a) {
    levy::TwoLineBarrier b{a.real("c1"), a.real("c2"), a.real("x"), a.real("y"), a.real("T")};
    b.validate();
    return b;
}

// Fills in the importance-sampling tilt: auto aims at the dominating point.
void apply_tilt(Args& a, const brm::BivariateBRM& m, mc::SimConfig& cfg) {
    if (a.is("is", "auto")) cfg.is_drift = mc::default_is_drift(m, cfg.window_end);
    else if (!a.is("is", "none")) throw InvalidInput("--is must be auto or none");
}

void auto_steps(Args& a, const brm::BivariateBRM& m) {
    if (a.is("steps", "auto")) a.set("steps", mc::recommended_steps(m.normalized().u));
}

Outcome from_estimate(const mc::Estimate& e, std::uint64_t seed) {
    Outcome o;
    o.value = e.value;
    o.std_error = e.std_error;
    o.ci = {e.ci_low, e.ci_high};
    o.method = e.method;
    o.seed = seed;
    o.extra.emplace_back("n_effective", e.n_effective);
    if (e.halving) {
        o.extra.emplace_back("coarse_steps", e.halving->coarse_steps);
        o.extra.emplace_back("coarse_value", e.halving->coarse_value);
        o.extra.emplace_back("halving_difference", e.halving->difference);
        o.extra.emplace_back("halving_difference_stderr", e.halving->difference_stderr);
    }
    return o;
}

std::vector<Command> build_commands() {
    std::vector<Command> cmds;

    cmds.push_back({"brm1", "finite- or infinite-horizon ruin of one Brownian portfolio",
                    {{"c", Kind::real, "0", "premium rate"},
                     {"sigma", Kind::real, "1", "volatility"},
                     {"u", Kind::real, "1", "initial capital"},
                     {"T", Kind::real, "1", "horizon"},
                     {"infinite", Kind::integer, "0", "1 for the infinite horizon (T ignored)"}},
                    [](Args& a) {
                        brm::SinglePortfolio p;
                        p.c = a.real("c");
                        p.sigma = a.real("sigma");
                        p.u = a.real("u");
                        p.T = a.real("T");
                        Outcome o;
                        if (a.integer("infinite") != 0) {
                            p.T = std::numeric_limits<double>::infinity();
                            const auto r = brm::ruin_infinite(p);
                            o.value = r.probability;
                            o.method = "closed form, infinite horizon";
                            o.extra.emplace_back("degenerate", r.degenerate ? 1.0 : 0.0);
                        } else {
                            o.value = brm::ruin_finite(p);
                            o.method = "closed form";
                        }
                        return o;
                    }});

    cmds.push_back({"brm2 bounds", "two-sided bound on the simultaneous ruin probability; value is the lower bound",
                    kPair + std::vector<Param>{{"v", Kind::real, "auto", "second capital (default a u)"}},
                    [](Args& a) {
                        const auto m = pair_model(a);
                        if (a.is("v", "auto")) a.set("v", format_real(m.v()));
                        const auto b = brm::prop1_bounds(m, a.real("v"));
                        Outcome o;
                        o.value = b.lower;
                        o.bounds = {b.lower, b.upper};
                        o.method = "orthant bounds";
                        return o;
                    }});

    cmds.push_back({"brm2 asym", "large-capital approximation of psi(u, a u)",
                    kPair + std::vector<Param>{{"constant", Kind::text, "none", "constant C for a > rho"}},
                    [](Args& a) {
                        const auto m = pair_model(a);
                        std::optional<double> c;
                        if (!a.is("constant", "none")) c = a.real("constant");
                        Outcome o;
                        o.value = brm::asym_approx(m, c);
                        o.method = std::string("leading-order asymptotics, ") + brm::regime_name(brm::classify(m.a, m.rho).tag);
                        o.extra.emplace_back("tail_form", brm::tail_equivalent_form(m, c));
                        o.extra.emplace_back("q", brm::q_exponent(m.a, m.rho));
                        return o;
                    }});

    cmds.push_back({"brm2 crude", "smaller of the two marginal ruin probabilities", kPair, [](Args& a) {
                        Outcome o;
                        o.value = brm::crude_upper_bound(pair_model(a));
                        o.method = "marginal minimum";
                        return o;
                    }});

    cmds.push_back({"brm2 early-bound", "bound on ruin before 1 - window / u^2",
                    kPair + std::vector<Param>{{"window", Kind::real, "1", "excluded window, in units of u^-2"}},
                    [](Args& a) {
                        const auto r = brm::early_window_bound(pair_model(a), a.real("window"));
                        Outcome o;
                        o.value = r.bound;
                        o.method = "early-window bound";
                        o.extra.emplace_back("valid", r.valid ? 1.0 : 0.0);
                        if (std::isfinite(r.u_min)) o.extra.emplace_back("u_min", r.u_min);
                        return o;
                    }});

    cmds.push_back({"brm2 ruintime-cdf", "limit CDF of u^2 (1 - tau) given ruin",
                    {{"a", Kind::real, "1", "capital ratio"}, {"rho", Kind::real, "0", "correlation"}, {"x", Kind::real, "1", "argument"}},
                    [](Args& a) {
                        Outcome o;
                        o.value = brm::ruin_time_limit_cdf(a.real("x"), a.real("a"), a.real("rho"));
                        o.method = "exponential limit law";
                        return o;
                    }});

    cmds.push_back({"constant", "Monte Carlo estimate of the prefactor constant (or of I(T) for finite --T)",
                    std::vector<Param>{{"a", Kind::real, "1", "capital ratio"},
                                       {"rho", Kind::real, "0", "correlation"},
                                       {"T", Kind::text, "ladder", "horizon; 'ladder' extrapolates over T = 1..16"},
                                       {"method", Kind::text, "pathwise", "pathwise|lattice"},
                                       {"spacing", Kind::real, "0.05", "lattice spacing"},
                                       {"budget", Kind::real, "0.001", "lattice truncation budget"}} +
                        mc_params("20000", "256"),
                    [](Args& a) {
                        const auto cfg = sim_config(a);
                        pickands::Method method;
                        if (a.is("method", "pathwise")) method = pickands::Method::pathwise;
                        else if (a.is("method", "lattice")) method = pickands::Method::lattice;
                        else throw InvalidInput("--method must be pathwise or lattice");
                        const pickands::LatticeSpec lattice{a.real("spacing"), a.real("budget")};
                        const auto e = a.is("T", "ladder") ? pickands::extrapolate_C(a.real("a"), a.real("rho"), cfg, method, lattice)
                                                           : pickands::estimate_I_T(a.real("a"), a.real("rho"), a.real("T"), cfg, method, lattice);
                        Outcome o;
                        o.value = e.value;
                        o.std_error = e.std_error;
                        o.ci = {e.value - 1.959963984540054 * e.std_error, e.value + 1.959963984540054 * e.std_error};
                        o.method = e.method;
                        o.seed = cfg.seed;
                        o.extra = {{"T_used", e.T_used},
                                   {"coarse_value", e.coarse_value},
                                   {"continuous_value", e.continuous_value},
                                   {"extrapolation_error", e.extrapolation_error}};
                        return o;
                    }});

    cmds.push_back({"levy", "exact simultaneous ruin of two lines by one Levy path", kLevyModel + tol_params("1e-8", "1e-8"),
                    [](Args& a) {
                        const auto model = levy_model(a);
                        const auto r = levy::psi_levy(*model, barrier(a), quadrature(a));
                        Outcome o;
                        o.value = r.probability;
                        o.method = std::string("quadrature, ") + levy::case_name(r.branch);
                        if (std::isfinite(r.xi)) o.extra.emplace_back("xi", r.xi);
                        return o;
                    }});

    cmds.push_back({"mc psi2d", "grid-supremum Monte Carlo of psi(u, a u)",
                    kPair + std::vector<Param>{{"is", Kind::text, "auto", "importance sampling: auto|none"},
                                               {"window", Kind::real, "1", "simulated fraction of the horizon"}} +
                        mc_params("100000", "auto"),
                    [](Args& a) {
                        const auto m = pair_model(a);
                        auto_steps(a, m);
                        auto cfg = sim_config(a);
                        cfg.window_end = a.real("window");
                        apply_tilt(a, m, cfg);
                        return from_estimate(mc::simulate_psi(m, cfg), cfg.seed);
                    }});

    cmds.push_back({"mc psi1d", "bridge-corrected Monte Carlo of one-portfolio ruin",
                    std::vector<Param>{{"c", Kind::real, "1", "premium rate"},
                                       {"sigma", Kind::real, "1", "volatility"},
                                       {"u", Kind::real, "1", "capital"},
                                       {"T", Kind::real, "1", "horizon"}} +
                        mc_params("100000", "256"),
                    [](Args& a) {
                        brm::SinglePortfolio p;
                        p.c = a.real("c");
                        p.sigma = a.real("sigma");
                        p.u = a.real("u");
                        p.T = a.real("T");
                        const auto cfg = sim_config(a);
                        const auto r = mc::simulate_one_dim(p, cfg);
                        Outcome o = from_estimate(r.bridge, cfg.seed);
                        o.extra.emplace_back("raw_value", r.raw.value);
                        o.extra.emplace_back("raw_stderr", r.raw.std_error);
                        return o;
                    }});

    cmds.push_back({"mc levy", "Monte Carlo of simultaneous ruin of two lines by one Levy path", kLevyModel + mc_params("100000", "4096"),
                    [](Args& a) {
                        const auto model = levy_model(a);
                        const auto cfg = sim_config(a);
                        return from_estimate(mc::simulate_levy_psi(*model, barrier(a), cfg), cfg.seed);
                    }});

    cmds.push_back({"mc ruintime", "KS distance of sampled u^2 (1 - tau) to its exponential limit",
                    kPair + std::vector<Param>{{"is", Kind::text, "auto", "importance sampling: auto|none"}} + mc_params("100000", "auto"),
                    [](Args& a) {
                        const auto m = pair_model(a);
                        auto_steps(a, m);
                        auto cfg = sim_config(a);
                        apply_tilt(a, m, cfg);
                        const auto s = mc::sample_ruin_time(m, cfg);
                        const double a_ = m.a, rho = m.rho;
                        Outcome o;
                        o.value = mc::ks_statistic(s, [&](double x) { return brm::ruin_time_limit_cdf(x, a_, rho); });
                        o.method = "weighted KS distance to the limit law";
                        o.seed = cfg.seed;
                        o.extra = {{"weighted_mean", s.weighted_mean()},
                                   {"limit_mean", 2.0 / brm::q_exponent(a_, rho)},
                                   {"n_effective", s.n_effective()},
                                   {"samples", static_cast<double>(s.values.size())}};
                        return o;
                    }});
    return cmds;
}

// Serialization ------------------------------------------------------------

std::string json_string(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    return out + "\"";
}

std::string json_number(double v) { return std::isfinite(v) ? format_real(v) : "null"; }

// Echo of one parameter: numbers re-serialized so they round-trip, text quoted.
std::string json_param(const Param& p, const std::string& raw) {
    if (p.kind == Kind::text) {
        char* end = nullptr;
        const double v = std::strtod(raw.c_str(), &end);
        if (!raw.empty() && *end == '\0' && std::isfinite(v)) return format_real(v);
        return json_string(raw);
    }
    if (p.kind == Kind::integer) return raw;
    return format_real(std::strtod(raw.c_str(), nullptr));
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string csv_param(const Param& p, const std::string& raw) {
    if (p.kind == Kind::real) return format_real(std::strtod(raw.c_str(), nullptr));
    return csv_field(raw);
}

struct Row {
    Values values;
    std::optional<Outcome> outcome;
    long long elapsed_ms = 0;
    std::string error;
};

std::string to_json(const Command& cmd, const Row& row) {
    const Outcome& o = *row.outcome;
    std::ostringstream os;
    os << "{\"command\":" << json_string(cmd.path) << ",\"params\":{";
    for (std::size_t i = 0; i < cmd.params.size(); ++i) {
        const Param& p = cmd.params[i];
        os << (i ? "," : "") << json_string(p.name) << ":" << json_param(p, row.values.at(p.name));
    }
    os << "},\"value\":" << json_number(o.value);
    os << ",\"stderr\":" << (o.std_error ? json_number(*o.std_error) : "null");
    os << ",\"ci\":";
    if (o.ci) os << "[" << json_number(o.ci->first) << "," << json_number(o.ci->second) << "]";
    else os << "null";
    os << ",\"bounds\":";
    if (o.bounds) os << "[" << json_number(o.bounds->first) << "," << json_number(o.bounds->second) << "]";
    else os << "null";
    os << ",\"method\":" << json_string(o.method);
    os << ",\"seed\":" << (o.seed ? std::to_string(*o.seed) : "null");
    os << ",\"tool_version\":" << json_string(kToolVersion);
    os << ",\"elapsed_ms\":" << row.elapsed_ms;
    os << ",\"extra\":{";
    for (std::size_t i = 0; i < o.extra.size(); ++i)
        os << (i ? "," : "") << json_string(o.extra[i].first) << ":" << json_number(o.extra[i].second);
    os << "}}\n";
    return os.str();
}

std::string to_csv(const Command& cmd, const std::vector<Row>& rows, bool error_column) {
    std::vector<std::string> extra_keys;
    for (const Row& r : rows) {
        if (!r.outcome) continue;
        for (const auto& [k, v] : r.outcome->extra)
            if (std::find(extra_keys.begin(), extra_keys.end(), k) == extra_keys.end()) extra_keys.push_back(k);
    }
    std::ostringstream os;
    os << "command";
    for (const Param& p : cmd.params) os << "," << p.name;
    // Result columns named like a parameter get a prefix.
    for (const char* col : {"value", "stderr", "ci_low", "ci_high", "bounds_low", "bounds_high", "method", "seed", "tool_version", "elapsed_ms"}) {
        const bool clash = std::any_of(cmd.params.begin(), cmd.params.end(), [&](const Param& p) { return p.name == col; });
        os << "," << (clash ? "result_" : "") << col;
    }
    for (const auto& k : extra_keys) os << "," << k;
    if (error_column) os << ",error";
    os << "\n";
    const auto num = [](std::optional<double> v) { return v && std::isfinite(*v) ? format_real(*v) : std::string(); };
    for (const Row& r : rows) {
        os << csv_field(cmd.path);
        for (const Param& p : cmd.params) os << "," << csv_param(p, r.values.at(p.name));
        if (r.outcome) {
            const Outcome& o = *r.outcome;
            os << "," << num(o.value) << "," << num(o.std_error) << "," << num(o.ci ? std::optional(o.ci->first) : std::nullopt)
               << "," << num(o.ci ? std::optional(o.ci->second) : std::nullopt) << ","
               << num(o.bounds ? std::optional(o.bounds->first) : std::nullopt) << ","
               << num(o.bounds ? std::optional(o.bounds->second) : std::nullopt) << "," << csv_field(o.method) << ","
               << (o.seed ? std::to_string(*o.seed) : "") << "," << kToolVersion << "," << r.elapsed_ms;
            for (const auto& k : extra_keys) {
                std::optional<double> v;
                for (const auto& [key, val] : o.extra)
                    if (key == k) v = val;
                os << "," << num(v);
            }
        } else {
            os << ",,,,,,,,," << kToolVersion << "," << r.elapsed_ms;
            for (std::size_t i = 0; i < extra_keys.size(); ++i) os << ",";
        }
        if (error_column) os << "," << csv_field(r.error);
        os << "\n";
    }
    return os.str();
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::non_convergence:
        case ErrorKind::degenerate_is:
            return kNumericalError;
        default:
            return kInputError;
    }
}

// Runs one parameter point; returns the exit status it would have alone.
int execute(const Command& cmd, Row& row) {
    const auto start = std::chrono::steady_clock::now();
    int status = kOk;
    try {
        Args args(row.values);
        row.outcome = cmd.run(args);
    } catch (const Error& e) {
        row.error = e.what();
        status = exit_code(e.kind());
    } catch (const std::exception& e) {
        row.error = e.what();
        status = kNumericalError;
    }
    row.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    return status;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    if (out.empty()) out.push_back("");
    return out;
}

struct Leaf {
    const Command* cmd;
    CLI::App* app;
    Values values;
    bool sweep;
};

CLI::App* find_or_add(CLI::App* parent, const std::string& name, const std::string& help) {
    for (CLI::App* sub : parent->get_subcommands({}))
        if (sub->get_name() == name) return sub;
    CLI::App* sub = parent->add_subcommand(name, help);
    sub->fallthrough();
    return sub;
}

void add_leaves(CLI::App* root, const std::vector<Command>& cmds, bool sweep, std::list<Leaf>& leaves) {
    for (const Command& cmd : cmds) {
        std::istringstream words(cmd.path);
        std::vector<std::string> path;
        for (std::string w; words >> w;) path.push_back(w);
        CLI::App* app = root;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            app = find_or_add(app, path[i], "");
            app->require_subcommand(1);
        }
        app = find_or_add(app, path.back(), cmd.help);
        leaves.push_back({&cmd, app, {}, sweep});
        Leaf& leaf = leaves.back();
        for (const Param& p : cmd.params) {
            leaf.values[p.name] = p.def;
            const std::string help = p.help + (sweep ? " (comma list)" : "");
            const char* type = p.kind == Kind::real ? "REAL" : p.kind == Kind::integer ? "INT" : "TEXT";
            app->add_option("--" + p.name, leaf.values[p.name], help)->type_name(sweep ? "LIST" : type)->capture_default_str();
        }
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const std::vector<Command> cmds = build_commands();
    CLI::App app{"Simultaneous ruin probabilities for Brownian and one-sided Levy risk models", "simruin"};
    app.fallthrough();
    app.require_subcommand(1);
    std::string format = "json";
    std::string out_path;
    app.add_option("--format", format, "output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app.add_option("--out", out_path, "also write the output to this file");
    app.set_version_flag("--version", kToolVersion);

    std::list<Leaf> leaves;
    add_leaves(&app, cmds, false, leaves);
    CLI::App* sweep = app.add_subcommand("sweep", "Cartesian-product evaluation; every parameter takes a comma list; CSV output");
    sweep->fallthrough();
    sweep->require_subcommand(1);
    add_leaves(sweep, cmds, true, leaves);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
        return kUsage;
    }

    Leaf* chosen = nullptr;
    for (Leaf& leaf : leaves) {
        if (!leaf.app->parsed()) continue;
        if (leaf.sweep != sweep->parsed()) continue;
        chosen = &leaf;
    }
    if (chosen == nullptr) {
        err << app.help("", CLI::AppFormatMode::All);
        return kUsage;
    }

    std::string text;
    int status = kOk;
    if (!chosen->sweep) {
        Row row{chosen->values, std::nullopt, 0, {}};
        status = execute(*chosen->cmd, row);
        if (status != kOk) {
            err << "error: " << row.error << "\n";
            return status;
        }
        text = format == "csv" ? to_csv(*chosen->cmd, {row}, false) : to_json(*chosen->cmd, row);
    } else {
        // Cartesian product; the first declared parameter varies slowest.
        const auto& params = chosen->cmd->params;
        std::vector<std::vector<std::string>> lists;
        for (const Param& p : params) lists.push_back(split_list(chosen->values.at(p.name)));
        std::vector<std::size_t> idx(params.size(), 0);
        std::vector<Row> rows;
        while (true) {
            Row row;
            for (std::size_t i = 0; i < params.size(); ++i) row.values[params[i].name] = lists[i][idx[i]];
            execute(*chosen->cmd, row);
            rows.push_back(std::move(row));
            std::size_t k = params.size();
            while (k > 0) {
                --k;
                if (++idx[k] < lists[k].size()) break;
                idx[k] = 0;
                if (k == 0) {
                    k = params.size() + 1;
                    break;
                }
            }
            if (k == params.size() + 1 || params.empty()) break;
        }
        text = to_csv(*chosen->cmd, rows, true);
    }

    out << text;
    if (!out_path.empty()) {
        std::ofstream file(out_path, std::ios::binary);
        file << text;
        if (!file) {
            err << "error: cannot write " << out_path << "\n";
            return kInputError;
        }
    }
    return status;
}

}  // namespace simruin::cli
