#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 2;

// Entry point shared by the binary and the integration tests. `args`
// excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tas::cli
