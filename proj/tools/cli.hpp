#pragma once

#include <ostream>

namespace simruin::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kNumericalError = 2;
inline constexpr int kUsage = 64;

/// Parses argv, runs one subcommand and writes the record to `out`
/// (and to --out PATH when given). Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace simruin::cli
