#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace occlabel {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Subcommands: synth, divide, aggregate, curate, eval, octree-dump.
/// `args` excludes the program name. Data goes to `out` and files under
/// `--out`; usage text and diagnostics go to `err` and the logger.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace occlabel
