#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace raidrel::cli {

enum ExitCode : int { kOk = 0, kModelError = 1, kUsage = 2, kBudget = 3 };

// Entry point of the raidrel tool; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace raidrel::cli
