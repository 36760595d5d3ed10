#pragma once

#include <ostream>

namespace cdslice::cli {

/// Entry point of the `cdslice` tool. Subcommands: scan, preprocess, train,
/// eval, predict, sensitivity, report, synth, gradcheck. Returns the process
/// exit code: 0 on success, 1 on a failed command, 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cdslice::cli
