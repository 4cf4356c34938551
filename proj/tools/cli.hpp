#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tilted::cli {

enum ExitCode : int { Ok = 0, Failed = 1, Inconclusive = 2, Usage = 3 };

/// Runs one command line (without the program name). Reports go to out,
/// diagnostics to err.
int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace tilted::cli
