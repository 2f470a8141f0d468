#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace slowfast::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// `args` excludes the program name. Reports go to `--out` (or to `out` when
/// no path is given); diagnostics go to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, const char* const* argv);

}  // namespace slowfast::cli
