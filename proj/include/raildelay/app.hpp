#pragma once

#include <string>
#include <vector>

namespace raildelay {

/// CLI entry point: gen-data | train | evaluate | calibrate | simulate.
/// Returns the process exit status; artifacts land in the run directory.
int run_command(const std::vector<std::string>& args);

}  // namespace raildelay
