#pragma once

namespace ocrbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitWarnings = 1;
inline constexpr int kExitFatal = 2;

/// Parses argv and runs the selected subcommand. Never throws.
int run(int argc, const char* const* argv);

}  // namespace ocrbench::cli
