#pragma once

#include <stdexcept>
#include <string>

namespace simruin {

// Every failure the library reports derives from Error, so callers (the CLI in
// particular) can map a kind to an exit status without string matching.
enum class ErrorKind {
    invalid_input,
    regime,
    missing_constant,
    degenerate_drift,
    non_convergence,
    degenerate_is,
    empty_sample,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& what) : Error(ErrorKind::invalid_input, what) {}
};

// The asymptotic branch requested does not apply to the given (a, rho).
struct RegimeError : Error {
    explicit RegimeError(const std::string& what) : Error(ErrorKind::regime, what) {}
};

struct MissingConstant : Error {
    explicit MissingConstant(const std::string& what) : Error(ErrorKind::missing_constant, what) {}
};

struct DegenerateDrift : Error {
    explicit DegenerateDrift(const std::string& what) : Error(ErrorKind::degenerate_drift, what) {}
};

// Carries the best value reached so the caller can decide whether it is usable.
struct NonConvergence : Error {
    NonConvergence(const std::string& what, double best_value, double error_estimate)
        : Error(ErrorKind::non_convergence, what), best_value(best_value), error_estimate(error_estimate) {}
    double best_value;
    double error_estimate;
};

struct DegenerateIS : Error {
    DegenerateIS(const std::string& what, double n_effective)
        : Error(ErrorKind::degenerate_is, what), n_effective(n_effective) {}
    double n_effective;
};

struct EmptySample : Error {
    explicit EmptySample(const std::string& what) : Error(ErrorKind::empty_sample, what) {}
};

}  // namespace simruin
