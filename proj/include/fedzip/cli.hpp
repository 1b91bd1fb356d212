#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fedzip {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point of the `fedzip` tool. `args` excludes the program name.
// Errors go to `err` as one JSON object per line.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fedzip
