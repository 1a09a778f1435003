#pragma once

#include <filesystem>
#include <ostream>
#include <string>

namespace hybrid {

// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInfeasible = 1, kExitUsage = 2 };

// Runs one invocation of the CLI; argv[0] is the program name.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Directory used for relative output paths: $HYBRID_SUPPLY_OUT_DIR or ".".
std::filesystem::path default_output_dir();

// Directory holding the bundled golden tables.
std::filesystem::path default_golden_dir();

}  // namespace hybrid
