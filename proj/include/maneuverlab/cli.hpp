#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/**
 * Runs one `maneuverlab` command. `args` excludes the program name.
 * Returns 0 on success, 2 on a usage error and 1 on any other failure.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace mlab::cli
