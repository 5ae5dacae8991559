#pragma once

#include <ostream>

namespace mcfse {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2, kExitValidation = 3 };

/// Entry point of the `mcfse` tool. Subcommands: cir, design, ber, validate.
/// Results go to `out` (or --output), diagnostics and the run manifest to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mcfse
