#pragma once

#include <string>
#include <vector>

namespace pasnet::cli {

/// Runs one `pasnet` subcommand. Returns 0 on success, 1 on a domain error
/// (the logged message names the failing case or file) and 2 on a usage
/// error. Nothing is thrown.
int dispatch(int argc, char** argv);

/// Same, for in-process callers; `args` excludes the program name.
int dispatch(const std::vector<std::string>& args);

}  // namespace pasnet::cli
