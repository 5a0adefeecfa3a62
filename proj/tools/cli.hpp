#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace counterpol::cli {

/// Runs one subcommand. args excludes the program name. Failures print a
/// single `error: code=<code> message=<text>` line on err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace counterpol::cli

int cli_main(int argc, char** argv);
