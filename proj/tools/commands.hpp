#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scc::cli {

// Exit codes.
constexpr int kOk = 0;
constexpr int kSolverFailure = 1;
constexpr int kUsage = 2;

// Entry point behind sc_control. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Subcommand names in help order.
const std::vector<std::string>& subcommands();

}  // namespace scc::cli
