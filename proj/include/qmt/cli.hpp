#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qmt::cli {

// Exit codes.
inline constexpr int kPass = 0;
inline constexpr int kInputError = 2;
inline constexpr int kViolation = 3;
inline constexpr int kBudget = 4;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace qmt::cli
