#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace semg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation, format or I/O error
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace semg::cli
