#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fgb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the `fgb` tool; args exclude the program name.
/// Artifacts go to `<FGB_OUT or output_root>/<config hash>/<command>/`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fgb::cli
