#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uner::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kValidationFailure = 2,
  kNumericalFailure = 3,
  kIoFailure = 4,
};

// Entry point shared by the executable and the tests. args[0] is the program
// name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uner::cli
