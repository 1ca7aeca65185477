#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ltbn {

/// Process exit codes of the `ltbn` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,      // unexpected failure
  kExitUsage = 2,         // bad flags or unknown subcommand
  kExitConfig = 3,        // unreadable or invalid config file / values
  kExitCheckpoint = 4,    // missing or unreadable checkpoints
  kExitData = 5,          // manifest, split or image problems
  kExitRuntime = 6,       // training or inference failure
};

/// Entry point behind `ltbn`; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// Convenience overload; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ltbn
