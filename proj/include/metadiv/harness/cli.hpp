#pragma once

#include <iosfwd>

namespace metadiv::harness {

/// metadiv <subcommand> --config <path> [--out <dir>] [--seed-override <n>]
///
/// Exit codes: 0 success, 1 runtime failure, 2 usage or config error. Errors
/// are reported as a JSON object on `err`; the run manifest is written
/// whenever an output directory is known.
int cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace metadiv::harness
