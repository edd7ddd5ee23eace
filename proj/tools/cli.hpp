#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tarma::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kData = 3,
  kMissingTable = 4,
};

/// Runs the `tarma` command line. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

/// Default null table shipped with the sources.
std::string default_table_path();

}  // namespace tarma::cli
