#pragma once

#include <ostream>

namespace pmmf::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kValidation = 2, kZeroLikelihood = 3, kUsage = 64 };

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pmmf::cli
