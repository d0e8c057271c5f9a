#pragma once

#include <filesystem>
#include <iosfwd>

namespace memsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Directory holding the bundled tables and default configuration. The
/// MEMSIM_DATA_DIR environment variable overrides the build-time location.
std::filesystem::path data_dir();

/// Entry point of `memcell-sim`. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace memsim::cli
