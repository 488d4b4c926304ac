#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mislab::cli {

enum ExitCode : int {
  kOk = 0,
  kRejected = 2,
  kIndeterminate = 3,
  kUsage = 64,
  kInternal = 70,
  kIoError = 73,
};

// Runs one command line (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mislab::cli
