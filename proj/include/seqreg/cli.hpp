#pragma once

// Command-line front end: register, warp, misalign, metrics, stats, phantom.

#include <ostream>
#include <string>
#include <vector>

namespace seqreg::cli {

enum ExitCode : int { Ok = 0, Usage = 1, DataError = 2, NumericalFailure = 3 };

inline constexpr int output_schema_version = 1;

/// Parses and runs one command. Never throws; diagnostics go to `err`.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

/// Same with argv[0] omitted.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace seqreg::cli
