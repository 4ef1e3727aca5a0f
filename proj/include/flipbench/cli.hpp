#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flipbench {

// Exit codes shared by every subcommand.
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInputError = 2;

// Entry point behind the `flipbench` binary. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flipbench
