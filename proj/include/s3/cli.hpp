#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace s3::cli {

/// Exit codes: 0 success, 1 invalid input or usage, 2 internal error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitInternal = 2;

int run(int argc, char** argv);

/// Same as run(argc, argv) with explicit streams; args[0] is the program
/// name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace s3::cli
