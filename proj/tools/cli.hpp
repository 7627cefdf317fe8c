#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nlrl::cli {

enum ExitCode : int {
  kSuccess = 0,
  kCheckFailed = 1,
  kUsageError = 2,
  kDiverged = 3,
};

/// Runs the nlrl command line with `args` (program name excluded).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Splices `key=value` lines of any `--config FILE` into the arguments as
/// `--key value`, skipping keys already given as flags. Throws on unreadable files.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace nlrl::cli
