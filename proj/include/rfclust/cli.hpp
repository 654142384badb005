#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rfclust {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "RFCLUST_OUT_DIR";

// Entry point behind the rfclust executable. args excludes the program name.
// Diagnostics go to err; machine-readable output to out or to files.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rfclust
