#pragma once

#include <string>
#include <vector>

namespace rankae::cli {

/// Exit codes shared by all subcommands.
enum ExitCode {
  kOk = 0,
  kUsage = 2,       // bad flags, bad config, missing input files
  kData = 3,        // malformed data or dimension mismatch
  kCapability = 4,  // request the loaded model cannot serve
};

/// Entry point behind the rank-ae binary. Exposed as a function so tests
/// can drive full commands in-process. `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace rankae::cli
