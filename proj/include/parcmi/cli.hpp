#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "parcmi/error.hpp"

namespace parcmi::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

int exit_code_for(ErrorKind kind) noexcept;

/// Runs the command line (args excludes the program name). Every flag can
/// also be set through an environment variable PARCMI_<FLAG>, e.g.
/// PARCMI_SEED=7 or PARCMI_CENSOR_RATE=0.2.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace parcmi::cli
