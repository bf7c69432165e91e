#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace field_sentry::cli {

inline constexpr int kExitClean = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFindings = 2;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace field_sentry::cli
