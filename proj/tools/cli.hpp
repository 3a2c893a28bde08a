#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace recovery::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2, numerical = 3 };

/// Runs one command line. Tables go to `out` unless --out names a file;
/// diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace recovery::cli
