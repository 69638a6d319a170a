#pragma once

#include <iosfwd>

namespace qsgd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;

/// Entry point shared by the `qsgd` binary and the tests. `in` backs the
/// estimate subcommand when no --input file is given.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace qsgd::cli
