#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rkbayes {

// Exit codes: 0 success, 2 usage, 3 input data, 4 numerical, 5 convergence.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Help text for a subcommand ("" for the top-level app); used by the CLI and
// by tests that verify every accepted flag is documented.
std::string cli_help(const std::string& subcommand);

// Names of all flags a subcommand accepts (including --help), straight from
// the option table.
std::vector<std::string> cli_flags(const std::string& subcommand);

}  // namespace rkbayes
