#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fracmp::cli {

/// Exit codes of the fracmp tool.
enum Exit : int {
    Ok = 0,
    Failed = 1,       // solver error or failed verification
    BadConfig = 2,    // usage, configuration or hypothesis error
    IoFailure = 3,
};

/// Entry point for `fracmp <command> <cfg> [options]`. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fracmp::cli
