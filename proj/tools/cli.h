#ifndef OCRLAB_TOOLS_CLI_H_
#define OCRLAB_TOOLS_CLI_H_

#include <ostream>

namespace ocrlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitResource = 3;
inline constexpr int kExitCheckFailed = 4;

// Entry point shared by the binary and the tests. Reports go to `out` (or
// to --out), diagnostics to `err`.
int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace ocrlab::cli

#endif  // OCRLAB_TOOLS_CLI_H_
