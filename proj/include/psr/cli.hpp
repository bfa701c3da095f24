#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace psr::cli {

/// Exit statuses of the `psrestore` executable.
enum ExitCode : int { ok = 0, usage = 1, invariant = 2, io = 3 };

/// Runs one `psrestore` invocation. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psr::cli
